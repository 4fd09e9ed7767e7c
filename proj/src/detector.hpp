#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cfar.hpp"
#include "cnn.hpp"
#include "scene.hpp"
#include "wavelet.hpp"

namespace sardet {

enum class ProposalMode { cfar, dense };
enum class DetectionSource { cfar, dense };

struct Detection {
    BoundingBox box;
    float score = 0.0f; // vessel-class probability
    DetectionSource source = DetectionSource::cfar;
};

struct DetectConfig {
    ProposalMode proposal_mode = ProposalMode::cfar;
    // Proposal-stage CFAR. The guard ring must cover most of a chip-scale
    // vessel, otherwise extended targets inflate their own training ring
    // and mask themselves; defaults are sized for the 32-pixel chip.
    CfarConfig cfar{.guard_radius = 16, .train_radius = 24, .pfa = 1e-2};
    int window_stride = 16;                        // dense mode
    int chip_size = 32;
    double score_threshold = 0.5;
    double nms_iou = 0.3;
    std::optional<DenoiseConfig> denoise = DenoiseConfig{}; // nullopt disables

    void validate() const;
};

/// Candidate windows. cfar mode clusters CFAR hits on the VV band and
/// centers a chip-sized window on each cluster centroid; dense mode tiles
/// the scene at the configured stride, shifting the last row/column inward.
/// Identical windows are deduplicated.
std::vector<BoundingBox> propose(const SarScene& scene, const DetectConfig& cfg);

/// CNN judgment of each candidate window, order preserved.
std::vector<Detection> score(const Network& net, const SarScene& scene,
                             const std::vector<BoundingBox>& boxes,
                             DetectionSource source = DetectionSource::dense);

/// Greedy non-maximum suppression: keep by descending score (ties by
/// ascending (row, col)), discarding anything with iou > threshold against a
/// kept detection. Output stays sorted by descending score.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Full chain: optional denoise -> propose -> score -> threshold -> nms.
/// Returns the detections and the wall time of that chain in milliseconds;
/// n_proposals, when given, receives the candidate count before scoring.
std::pair<std::vector<Detection>, double> detect(const SarScene& scene, const Network& net,
                                                 const DetectConfig& cfg,
                                                 std::size_t* n_proposals = nullptr);

DetectConfig parse_detect_config(const json& j);
json detect_config_to_json(const DetectConfig& cfg);
json detections_to_json(const std::vector<Detection>& dets);
std::vector<Detection> detections_from_json(const json& j);

} // namespace sardet
