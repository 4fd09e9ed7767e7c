#pragma once

#include <cstdint>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"
#include "json_util.hpp"

namespace sardet {

struct CfarConfig {
    enum class Variant { ca, two_param };
    int guard_radius = 1;     // Chebyshev radius of the excluded ring
    int train_radius = 4;     // outer Chebyshev radius of the training ring
    double pfa = 1e-3;
    Variant variant = Variant::ca;
    double two_param_k = 3.0; // used by the two_param variant only

    void validate() const;
};

struct CfarResult {
    GridU8 mask;              // 1 where detected
    std::int64_t n_detections = 0;
    std::vector<BoundingBox> boxes;
};

/// CA-CFAR threshold multiplier for exponential clutter:
/// alpha = n_train * (pfa^(-1/n_train) - 1); a cell fires when its value
/// exceeds alpha times the training-ring mean.
double ca_threshold_factor(std::int64_t n_train, double pfa);

/// Sliding-window detector. Training cells are those at Chebyshev distance
/// in (guard_radius, train_radius]; cells outside the image are dropped and
/// the threshold factor recomputed for the reduced count.
CfarResult cfar_detect(const GridF& band, const CfarConfig& cfg);

/// 8-connected components of the mask as tight boxes, sorted by (row, col).
std::vector<BoundingBox> cluster_detections(const GridU8& mask);

CfarConfig parse_cfar_config(const json& j);
json cfar_config_to_json(const CfarConfig& cfg);

} // namespace sardet
