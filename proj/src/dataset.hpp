#pragma once

#include <cstdint>
#include <vector>

#include "scene.hpp"

namespace sardet {

struct DatasetConfig {
    int chip_size = 32;
    std::uint64_t seed = 0;
};

/// Balanced chip set: one vessel chip per truth box (window centered on the
/// box center) plus, per scene, an equal number of sea chips whose centers
/// keep a Chebyshev distance of at least chip_size from every truth box.
std::vector<Chip> build_chip_dataset(const std::vector<const SarScene*>& scenes,
                                     const std::vector<const GroundTruth*>& truths,
                                     const DatasetConfig& cfg);

} // namespace sardet
