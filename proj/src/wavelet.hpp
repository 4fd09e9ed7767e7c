#pragma once

#include <vector>

#include "grid.hpp"
#include "json_util.hpp"

namespace sardet {

enum class WaveletFamily { haar, db4 };

/// Multi-level separable 2-D DWT coefficient set. Rows are filtered along the
/// horizontal direction first, then columns vertically; the first letter of a
/// subband names the horizontal filter, the second the vertical one, so
/// lh = horizontal lowpass + vertical highpass and hl the converse.
/// details[0] is level 1 (finest); base_ll is the coarsest approximation.
///
/// The transform is orthonormal for every size: even-length segments use
/// periodized filtering, an odd-length segment transforms its even prefix and
/// passes the final sample straight into the approximation band. That keeps
/// both perfect reconstruction and energy preservation exact, and the LL
/// chain at level k keeps shape ceil(rows/2^k) x ceil(cols/2^k).
struct WaveletPyramid {
    struct Detail {
        GridD lh, hl, hh;
    };
    int levels = 1;
    GridD base_ll;
    std::vector<Detail> details;
    int orig_rows = 0;
    int orig_cols = 0;
    WaveletFamily family = WaveletFamily::haar;
};

struct DenoiseConfig {
    enum class Rule { soft, hard };
    WaveletFamily family = WaveletFamily::db4;
    int levels = 2;
    Rule rule = Rule::soft;
    bool log_domain = true;
};

/// Largest admissible decomposition depth: floor(log2(min(rows, cols))).
int max_wavelet_levels(int rows, int cols);

WaveletPyramid dwt2(const GridD& image, WaveletFamily family, int levels);

GridD idwt2(const WaveletPyramid& pyramid);

/// Wavelet shrinkage with the universal threshold T = sigma * sqrt(2 ln n),
/// sigma estimated as median(|HH level 1|)/0.6745. Works on ln(x + 1e-10)
/// when log_domain is set (multiplicative speckle); output is finite, >= 0,
/// and has the input's shape.
GridF denoise(const GridF& image, const DenoiseConfig& cfg);

DenoiseConfig parse_denoise_config(const json& j);
json denoise_config_to_json(const DenoiseConfig& cfg);

} // namespace sardet
