#include "eval.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace sardet {

std::pair<std::vector<Chip>, std::vector<Chip>> split_dataset(const std::vector<Chip>& chips,
                                                              double train_fraction,
                                                              std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("split: train_fraction must lie in (0, 1)");
    if (chips.size() < 2) throw ValidationError("split: need at least 2 chips");

    std::vector<std::size_t> order(chips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(Rng::derive(seed, 5));
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(chips.size()) * train_fraction));
    std::pair<std::vector<Chip>, std::vector<Chip>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(chips[order[i]]);
    return out;
}

ConfusionCounts match_box_detections(const std::vector<Detection>& dets, const GroundTruth& truth,
                                     double iou_min, std::optional<std::int64_t> n_proposals) {
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return dets[a].box < dets[b].box;
    });

    std::vector<bool> claimed(truth.boxes.size(), false);
    ConfusionCounts counts;
    for (std::size_t i : order) {
        double best = 0.0;
        int best_t = -1;
        for (std::size_t t = 0; t < truth.boxes.size(); ++t) {
            if (claimed[t]) continue;
            const double v = iou(dets[i].box, truth.boxes[t].box);
            if (v > best) {
                best = v;
                best_t = static_cast<int>(t);
            }
        }
        if (best_t >= 0 && best >= iou_min) {
            claimed[static_cast<std::size_t>(best_t)] = true;
            ++counts.tp;
        } else {
            ++counts.fp;
        }
    }
    counts.fn = static_cast<std::int64_t>(truth.boxes.size()) - counts.tp;
    if (n_proposals) counts.tn = std::max<std::int64_t>(0, *n_proposals - counts.tp - counts.fp);
    return counts;
}

ConfusionCounts chip_confusion(const std::vector<int>& predictions,
                               const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw ValidationError("chip_confusion: prediction/label length mismatch");
    ConfusionCounts counts;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] != 0;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++counts.tp;
        else if (pred && !truth) ++counts.fp;
        else if (!pred && truth) ++counts.fn;
        else ++counts.tn;
    }
    return counts;
}

EvalReport metrics(const ConfusionCounts& counts, EvalMode mode) {
    const double total = static_cast<double>(counts.total());
    if (counts.total() <= 0) throw ValidationError("metrics: all counts are zero");
    const double tp = static_cast<double>(counts.tp), fp = static_cast<double>(counts.fp);
    const double fn = static_cast<double>(counts.fn), tn = static_cast<double>(counts.tn);

    EvalReport r;
    r.counts = counts;
    r.mode = mode;
    r.accuracy_pct = 100.0 * (tp + tn) / total;
    r.precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    r.recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.jaccard = (tp + fp + fn) > 0.0 ? tp / (tp + fp + fn) : 1.0;
    const double p_o = (tp + tn) / total;
    const double p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total);
    r.cohen_kappa = p_e < 1.0 ? (p_o - p_e) / (1.0 - p_e) : 1.0;
    return r;
}

json report_to_json(const EvalReport& report) {
    return json{{"accuracy_pct", report.accuracy_pct},
                {"precision", report.precision},
                {"recall", report.recall},
                {"f1", report.f1},
                {"cohen_kappa", report.cohen_kappa},
                {"jaccard", report.jaccard},
                {"training_time_ms", report.training_time_ms},
                {"detection_time_ms", report.detection_time_ms},
                {"counts",
                 {{"tp", report.counts.tp},
                  {"fp", report.counts.fp},
                  {"fn", report.counts.fn},
                  {"tn", report.counts.tn}}},
                {"mode", report.mode == EvalMode::chip ? "chip" : "box"}};
}

} // namespace sardet
