#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"
#include "json_util.hpp"

namespace sardet {

/// Dual-band (VV, VH) raster of linear-power backscatter. Pixel values are
/// finite, non-negative 32-bit floats; all bands share one shape.
struct SarScene {
    std::string scene_id;
    int rows = 0;
    int cols = 0;
    std::vector<std::string> bands;      // ordered subset of {"VV","VH"}, unique
    std::vector<GridF> pixels;           // one grid per band
    std::optional<double> pixel_spacing_m;

    int band_index(const std::string& name) const;
    const GridF& band(const std::string& name) const;
    void validate() const;               // throws ValidationError on any broken invariant
};

struct TruthBox {
    BoundingBox box;
    std::string label = "vessel";
    bool operator==(const TruthBox&) const = default;
};

struct GroundTruth {
    std::vector<TruthBox> boxes;
    bool operator==(const GroundTruth&) const = default;
};

enum class ChipLabel { sea = 0, vessel = 1 };

/// Fixed-size window cut from a scene, the classifier's input unit.
/// Data layout is size x size x n_bands, row-major, bands innermost.
struct Chip {
    int size = 32;
    int n_bands = 0;
    std::vector<float> data;
    std::optional<ChipLabel> label;
    std::string scene_id;
    int origin_row = 0;
    int origin_col = 0;
};

struct SynthParams {
    int rows = 512;
    int cols = 512;
    double clutter_mean_vv = 1.0;
    int looks = 1;
    double band_ratio_vh = 0.5;          // VH mean = ratio * VV mean
    int n_vessels = 0;
    int vessel_min = 16;                 // side length range, pixels
    int vessel_max = 28;
    double tcr_db_min = 10.0;            // target-to-clutter ratio range, dB
    double tcr_db_max = 20.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Writes <stem>.json, <stem>.f32 and, when truth is given, <stem>.truth.json.
void save_scene(const SarScene& scene, const GroundTruth* truth, const std::string& path_stem);

std::pair<SarScene, std::optional<GroundTruth>> load_scene(const std::string& path_stem);

/// size x size window centered at (center_row, center_col); windows that
/// would cross the border are shifted inward so they stay fully inside.
Chip extract_chip(const SarScene& scene, int center_row, int center_col, int size);

/// Seeded synthetic scene: Gamma(looks) ocean clutter per band plus
/// non-overlapping rectangular vessels with a uniform-in-dB TCR factor
/// applied identically in both bands.
std::pair<SarScene, GroundTruth> synth_scene(const SynthParams& params);

SynthParams parse_synth_params(const json& j);
json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const json& j, int rows, int cols);
json scene_stats(const SarScene& scene, const GroundTruth* truth);

} // namespace sardet
