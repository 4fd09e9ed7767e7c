#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "detector.hpp"
#include "scene.hpp"

namespace sardet {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

enum class EvalMode { chip, box };

/// One detection-performance record: percentage accuracy, the standard
/// detection metrics, chance-corrected kappa, and the two wall times.
struct EvalReport {
    double accuracy_pct = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double cohen_kappa = 0.0;
    double jaccard = 0.0;
    double training_time_ms = 0.0;
    double detection_time_ms = 0.0;
    ConfusionCounts counts;
    EvalMode mode = EvalMode::chip;
};

/// Seeded uniform shuffle; the first round(n * train_fraction) chips form the
/// training split, the rest the validation split.
std::pair<std::vector<Chip>, std::vector<Chip>> split_dataset(const std::vector<Chip>& chips,
                                                              double train_fraction,
                                                              std::uint64_t seed);

/// Greedy one-to-one matching by descending score: a detection claims the
/// unmatched truth box of highest iou when that iou >= iou_min. tn counts
/// unclaimed proposals when n_proposals is supplied, else stays 0.
ConfusionCounts match_box_detections(const std::vector<Detection>& dets, const GroundTruth& truth,
                                     double iou_min = 0.5,
                                     std::optional<std::int64_t> n_proposals = {});

/// Chip-level confusion with vessel (1) as the positive class.
ConfusionCounts chip_confusion(const std::vector<int>& predictions,
                               const std::vector<int>& labels);

/// Metric fields from counts. Zero-denominator conventions: precision/recall
/// are 0, f1 is 0 when precision + recall is 0, jaccard is 1 when tp+fp+fn
/// is 0, and kappa is 1 when expected agreement reaches 1.
EvalReport metrics(const ConfusionCounts& counts, EvalMode mode = EvalMode::chip);

/// Monotonic wall-clock timing around an action.
template <class F>
auto time_ms(F&& action) -> std::pair<decltype(action()), double> {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = action();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(result), ms};
}

template <class F>
double measure_ms(F&& action) {
    const auto t0 = std::chrono::steady_clock::now();
    action();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

json report_to_json(const EvalReport& report);

} // namespace sardet
