#include "detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <tuple>

#include "errors.hpp"

namespace sardet {

namespace {

SarScene denoised_copy(const SarScene& scene, const DenoiseConfig& cfg) {
    SarScene out = scene;
    for (GridF& band : out.pixels) band = denoise(band, cfg);
    return out;
}

BoundingBox window_at(int center_row, int center_col, int size, int rows, int cols) {
    int top = std::clamp(center_row - size / 2, 0, rows - size);
    int left = std::clamp(center_col - size / 2, 0, cols - size);
    return {top, left, size, size};
}

std::vector<BoundingBox> propose_prepared(const SarScene& scene, const DetectConfig& cfg) {
    if (cfg.chip_size > scene.rows || cfg.chip_size > scene.cols)
        throw ValidationError("propose: scene smaller than chip size");

    std::vector<BoundingBox> out;
    if (cfg.proposal_mode == ProposalMode::cfar) {
        const GridF& vv = scene.band("VV");
        const CfarResult res = cfar_detect(vv, cfg.cfar);
        for (const BoundingBox& box : res.boxes) {
            // Centroid of the cluster's hit cells, not of its bounding box.
            std::int64_t sr = 0, sc = 0, count = 0;
            for (int r = box.row; r < box.row_end(); ++r)
                for (int c = box.col; c < box.col_end(); ++c)
                    if (res.mask.at(r, c)) {
                        sr += r;
                        sc += c;
                        ++count;
                    }
            const int cr = static_cast<int>(std::llround(static_cast<double>(sr) / count));
            const int cc = static_cast<int>(std::llround(static_cast<double>(sc) / count));
            out.push_back(window_at(cr, cc, cfg.chip_size, scene.rows, scene.cols));
        }
    } else {
        std::vector<int> row_starts, col_starts;
        for (int r = 0;; r += cfg.window_stride) {
            row_starts.push_back(std::min(r, scene.rows - cfg.chip_size));
            if (r >= scene.rows - cfg.chip_size) break;
        }
        for (int c = 0;; c += cfg.window_stride) {
            col_starts.push_back(std::min(c, scene.cols - cfg.chip_size));
            if (c >= scene.cols - cfg.chip_size) break;
        }
        for (int r : row_starts)
            for (int c : col_starts) out.push_back({r, c, cfg.chip_size, cfg.chip_size});
    }

    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

void DetectConfig::validate() const {
    if (chip_size < 1) throw ValidationError("detect: chip_size must be >= 1");
    if (window_stride < 1) throw ValidationError("detect: window_stride must be >= 1");
    if (window_stride > chip_size)
        throw ValidationError("detect: window_stride must not exceed chip_size");
    // score_threshold above 1 is legal: it simply yields no detections.
    if (score_threshold < 0.0) throw ValidationError("detect: score_threshold must be >= 0");
    if (nms_iou < 0.0 || nms_iou > 1.0) throw ValidationError("detect: nms_iou must lie in [0, 1]");
    if (proposal_mode == ProposalMode::cfar) cfar.validate();
}

std::vector<BoundingBox> propose(const SarScene& scene, const DetectConfig& cfg) {
    cfg.validate();
    if (cfg.denoise) return propose_prepared(denoised_copy(scene, *cfg.denoise), cfg);
    return propose_prepared(scene, cfg);
}

std::vector<Detection> score(const Network& net, const SarScene& scene,
                             const std::vector<BoundingBox>& boxes, DetectionSource source) {
    if (net.chip_size > scene.rows || net.chip_size > scene.cols)
        throw ValidationError("score: scene smaller than the network chip size");
    std::vector<Chip> chips;
    chips.reserve(boxes.size());
    for (const BoundingBox& box : boxes)
        chips.push_back(extract_chip(scene, box.row + box.height / 2, box.col + box.width / 2,
                                     net.chip_size));
    const std::vector<float> probs = vessel_scores(net, chips);
    std::vector<Detection> out;
    out.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) out.push_back({boxes[i], probs[i], source});
    return out;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.box < b.box;
    });
    std::vector<Detection> kept;
    for (const Detection& det : dets) {
        bool suppressed = false;
        for (const Detection& k : kept)
            if (iou(det.box, k.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(det);
    }
    return kept;
}

std::pair<std::vector<Detection>, double> detect(const SarScene& scene, const Network& net,
                                                 const DetectConfig& cfg,
                                                 std::size_t* n_proposals) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const DetectionSource source =
        cfg.proposal_mode == ProposalMode::cfar ? DetectionSource::cfar : DetectionSource::dense;

    const SarScene* prepared = &scene;
    SarScene denoised;
    if (cfg.denoise) {
        denoised = denoised_copy(scene, *cfg.denoise);
        prepared = &denoised;
    }
    DetectConfig inner = cfg;
    inner.denoise.reset(); // already applied above
    const std::vector<BoundingBox> proposals = propose(*prepared, inner);
    if (n_proposals) *n_proposals = proposals.size();
    std::vector<Detection> dets = score(net, *prepared, proposals, source);
    std::erase_if(dets, [&](const Detection& d) {
        return static_cast<double>(d.score) < cfg.score_threshold;
    });
    dets = nms(std::move(dets), cfg.nms_iou);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(dets), ms};
}

DetectConfig parse_detect_config(const json& j) {
    const std::string ctx = "detect config";
    require_keys(j,
                 {"proposal_mode", "cfar", "window_stride", "chip_size", "score_threshold",
                  "nms_iou", "denoise"},
                 ctx);
    DetectConfig cfg;
    const std::string mode = get_str(j, "proposal_mode", "cfar", ctx);
    if (mode == "cfar")
        cfg.proposal_mode = ProposalMode::cfar;
    else if (mode == "dense")
        cfg.proposal_mode = ProposalMode::dense;
    else
        throw ValidationError(ctx + ": unknown proposal_mode '" + mode + "'");
    if (j.contains("cfar")) cfg.cfar = parse_cfar_config(j["cfar"]);
    cfg.window_stride = static_cast<int>(get_int(j, "window_stride", cfg.window_stride, ctx));
    cfg.chip_size = static_cast<int>(get_int(j, "chip_size", cfg.chip_size, ctx));
    cfg.score_threshold = get_num(j, "score_threshold", cfg.score_threshold, ctx);
    cfg.nms_iou = get_num(j, "nms_iou", cfg.nms_iou, ctx);
    if (j.contains("denoise")) {
        if (j["denoise"].is_boolean() && !j["denoise"].get<bool>())
            cfg.denoise.reset();
        else
            cfg.denoise = parse_denoise_config(j["denoise"]);
    }
    cfg.validate();
    return cfg;
}

json detect_config_to_json(const DetectConfig& cfg) {
    json j{{"proposal_mode", cfg.proposal_mode == ProposalMode::cfar ? "cfar" : "dense"},
           {"cfar", cfar_config_to_json(cfg.cfar)},
           {"window_stride", cfg.window_stride},
           {"chip_size", cfg.chip_size},
           {"score_threshold", cfg.score_threshold},
           {"nms_iou", cfg.nms_iou}};
    j["denoise"] = cfg.denoise ? denoise_config_to_json(*cfg.denoise) : json(false);
    return j;
}

json detections_to_json(const std::vector<Detection>& dets) {
    json arr = json::array();
    for (const Detection& d : dets) {
        arr.push_back({{"row", d.box.row},
                       {"col", d.box.col},
                       {"height", d.box.height},
                       {"width", d.box.width},
                       {"score", d.score},
                       {"source", d.source == DetectionSource::cfar ? "cfar" : "dense"}});
    }
    return arr;
}

std::vector<Detection> detections_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("detections: expected a JSON array");
    std::vector<Detection> out;
    for (const auto& e : j) {
        require_keys(e, {"row", "col", "height", "width", "score", "source"}, "detection entry");
        Detection d;
        d.box.row = static_cast<int>(get_int(e, "row", 0, "detection entry"));
        d.box.col = static_cast<int>(get_int(e, "col", 0, "detection entry"));
        d.box.height = static_cast<int>(get_int(e, "height", 1, "detection entry"));
        d.box.width = static_cast<int>(get_int(e, "width", 1, "detection entry"));
        d.score = static_cast<float>(get_num(e, "score", 0.0, "detection entry"));
        const std::string src = get_str(e, "source", "cfar", "detection entry");
        if (src == "cfar")
            d.source = DetectionSource::cfar;
        else if (src == "dense")
            d.source = DetectionSource::dense;
        else
            throw ValidationError("detection entry: unknown source '" + src + "'");
        if (d.box.height < 1 || d.box.width < 1 || d.box.row < 0 || d.box.col < 0 ||
            !std::isfinite(d.score))
            throw ValidationError("detection entry: invalid box or score");
        out.push_back(d);
    }
    return out;
}

} // namespace sardet
