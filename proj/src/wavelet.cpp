#include "wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace sardet {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;
constexpr double kHaar[2] = {kSqrtHalf, kSqrtHalf};

// Orthonormal Daubechies scaling filter with 4 vanishing moments (8 taps).
constexpr double kDb4[8] = {0.23037781330885523,  0.71484657055254150,
                            0.63088076792959040,  -0.02798376941698385,
                            -0.18703481171888114, 0.03084138183598697,
                            0.03288301166698295,  -0.01059740178499728};

struct FilterPair {
    const double* h;
    int len;
    double g(int m) const { return ((m & 1) ? -1.0 : 1.0) * h[len - 1 - m]; }
};

FilterPair filter_for(WaveletFamily family) {
    if (family == WaveletFamily::haar) return {kHaar, 2};
    return {kDb4, 8};
}

// a gets ceil(n/2) entries, d gets floor(n/2). Even prefix is filtered
// circularly; an odd tail sample passes through into a.
void analyze_1d(const double* x, int n, const FilterPair& f, double* a, double* d) {
    const int m = n - (n & 1);
    const int half = m / 2;
    for (int k = 0; k < half; ++k) {
        double sa = 0.0, sd = 0.0;
        for (int t = 0; t < f.len; ++t) {
            const int j = (2 * k + t) % m;
            sa += f.h[t] * x[j];
            sd += f.g(t) * x[j];
        }
        a[k] = sa;
        d[k] = sd;
    }
    if (n & 1) a[half] = x[n - 1];
}

// Exact adjoint of analyze_1d; orthonormality makes it the inverse.
void synthesize_1d(const double* a, const double* d, int n, const FilterPair& f, double* x) {
    const int m = n - (n & 1);
    const int half = m / 2;
    std::fill(x, x + n, 0.0);
    for (int k = 0; k < half; ++k) {
        for (int t = 0; t < f.len; ++t) {
            const int j = (2 * k + t) % m;
            x[j] += f.h[t] * a[k] + f.g(t) * d[k];
        }
    }
    if (n & 1) x[n - 1] = a[half];
}

struct SingleLevel {
    GridD ll, lh, hl, hh;
};

SingleLevel decompose_once(const GridD& img, const FilterPair& f) {
    const int rows = img.rows, cols = img.cols;
    const int ca = (cols + 1) / 2, cd = cols / 2;
    const int ra = (rows + 1) / 2, rd = rows / 2;

    // Horizontal pass along each row.
    GridD hlow(rows, ca), hhigh(rows, cd);
    std::vector<double> arow(static_cast<std::size_t>(ca)), drow(static_cast<std::size_t>(cd));
    for (int r = 0; r < rows; ++r) {
        analyze_1d(&img.v[static_cast<std::size_t>(r) * cols], cols, f, arow.data(), drow.data());
        for (int c = 0; c < ca; ++c) hlow.at(r, c) = arow[c];
        for (int c = 0; c < cd; ++c) hhigh.at(r, c) = drow[c];
    }

    // Vertical pass along each column.
    SingleLevel out{GridD(ra, ca), GridD(rd, ca), GridD(ra, cd), GridD(rd, cd)};
    std::vector<double> colbuf(static_cast<std::size_t>(rows)),
        acol(static_cast<std::size_t>(ra)), dcol(static_cast<std::size_t>(rd));
    for (int c = 0; c < ca; ++c) {
        for (int r = 0; r < rows; ++r) colbuf[r] = hlow.at(r, c);
        analyze_1d(colbuf.data(), rows, f, acol.data(), dcol.data());
        for (int r = 0; r < ra; ++r) out.ll.at(r, c) = acol[r];
        for (int r = 0; r < rd; ++r) out.lh.at(r, c) = dcol[r];
    }
    for (int c = 0; c < cd; ++c) {
        for (int r = 0; r < rows; ++r) colbuf[r] = hhigh.at(r, c);
        analyze_1d(colbuf.data(), rows, f, acol.data(), dcol.data());
        for (int r = 0; r < ra; ++r) out.hl.at(r, c) = acol[r];
        for (int r = 0; r < rd; ++r) out.hh.at(r, c) = dcol[r];
    }
    return out;
}

GridD reconstruct_once(const GridD& ll, const WaveletPyramid::Detail& det, const FilterPair& f) {
    const int ra = ll.rows, ca = ll.cols;
    const int rd = det.lh.rows, cd = det.hl.cols;
    if (det.lh.cols != ca || det.hl.rows != ra || det.hh.rows != rd || det.hh.cols != cd)
        throw ValidationError("wavelet: inconsistent subband shapes in pyramid");
    const int rows = ra + rd, cols = ca + cd;

    GridD hlow(rows, ca), hhigh(rows, cd);
    std::vector<double> acol(static_cast<std::size_t>(ra)), dcol(static_cast<std::size_t>(rd)),
        colbuf(static_cast<std::size_t>(rows));
    for (int c = 0; c < ca; ++c) {
        for (int r = 0; r < ra; ++r) acol[r] = ll.at(r, c);
        for (int r = 0; r < rd; ++r) dcol[r] = det.lh.at(r, c);
        synthesize_1d(acol.data(), dcol.data(), rows, f, colbuf.data());
        for (int r = 0; r < rows; ++r) hlow.at(r, c) = colbuf[r];
    }
    for (int c = 0; c < cd; ++c) {
        for (int r = 0; r < ra; ++r) acol[r] = det.hl.at(r, c);
        for (int r = 0; r < rd; ++r) dcol[r] = det.hh.at(r, c);
        synthesize_1d(acol.data(), dcol.data(), rows, f, colbuf.data());
        for (int r = 0; r < rows; ++r) hhigh.at(r, c) = colbuf[r];
    }

    GridD out(rows, cols);
    std::vector<double> arow(static_cast<std::size_t>(ca)), drow(static_cast<std::size_t>(cd));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < ca; ++c) arow[c] = hlow.at(r, c);
        for (int c = 0; c < cd; ++c) drow[c] = hhigh.at(r, c);
        synthesize_1d(arow.data(), drow.data(), cols, f, &out.v[static_cast<std::size_t>(r) * cols]);
    }
    return out;
}

double median_abs(const GridD& g) {
    std::vector<double> mags;
    mags.reserve(g.v.size());
    for (double x : g.v) mags.push_back(std::fabs(x));
    if (mags.empty()) return 0.0;
    const std::size_t n = mags.size();
    std::nth_element(mags.begin(), mags.begin() + n / 2, mags.end());
    double med = mags[n / 2];
    if ((n & 1) == 0) {
        std::nth_element(mags.begin(), mags.begin() + n / 2 - 1, mags.begin() + n / 2);
        med = 0.5 * (med + mags[n / 2 - 1]);
    }
    return med;
}

void shrink(GridD& g, double threshold, DenoiseConfig::Rule rule) {
    if (rule == DenoiseConfig::Rule::soft) {
        for (double& c : g.v) {
            const double mag = std::fabs(c) - threshold;
            c = mag > 0.0 ? std::copysign(mag, c) : 0.0;
        }
    } else {
        for (double& c : g.v)
            if (std::fabs(c) <= threshold) c = 0.0;
    }
}

} // namespace

int max_wavelet_levels(int rows, int cols) {
    const int n = std::min(rows, cols);
    int levels = 0;
    for (int m = n; m >= 2; m /= 2) ++levels;
    return levels;
}

WaveletPyramid dwt2(const GridD& image, WaveletFamily family, int levels) {
    if (image.rows < 1 || image.cols < 1) throw ValidationError("dwt2: empty image");
    for (double x : image.v)
        if (!std::isfinite(x)) throw ValidationError("dwt2: non-finite input");
    const int bound = max_wavelet_levels(image.rows, image.cols);
    if (levels < 1 || levels > bound)
        throw ValidationError("dwt2: levels must lie in [1, " + std::to_string(bound) +
                              "] for a " + std::to_string(image.rows) + "x" +
                              std::to_string(image.cols) + " image");

    const FilterPair f = filter_for(family);
    WaveletPyramid pyr;
    pyr.levels = levels;
    pyr.orig_rows = image.rows;
    pyr.orig_cols = image.cols;
    pyr.family = family;

    GridD cur = image;
    for (int lev = 0; lev < levels; ++lev) {
        SingleLevel s = decompose_once(cur, f);
        pyr.details.push_back({std::move(s.lh), std::move(s.hl), std::move(s.hh)});
        cur = std::move(s.ll);
    }
    pyr.base_ll = std::move(cur);
    return pyr;
}

GridD idwt2(const WaveletPyramid& pyramid) {
    if (pyramid.levels < 1 || pyramid.details.size() != static_cast<std::size_t>(pyramid.levels))
        throw ValidationError("idwt2: pyramid level count mismatch");
    const FilterPair f = filter_for(pyramid.family);
    GridD cur = pyramid.base_ll;
    for (int lev = pyramid.levels - 1; lev >= 0; --lev)
        cur = reconstruct_once(cur, pyramid.details[static_cast<std::size_t>(lev)], f);
    if (cur.rows != pyramid.orig_rows || cur.cols != pyramid.orig_cols)
        throw ValidationError("idwt2: pyramid shapes do not reduce to original_shape");
    return cur;
}

GridF denoise(const GridF& image, const DenoiseConfig& cfg) {
    constexpr double kLogFloor = 1e-10;
    for (float x : image.v)
        if (!std::isfinite(x)) throw ValidationError("denoise: non-finite input");
    if (cfg.levels < 1 || cfg.levels > max_wavelet_levels(image.rows, image.cols))
        throw ValidationError("denoise: levels too large for image size");

    GridD work(image.rows, image.cols);
    if (cfg.log_domain) {
        for (std::size_t i = 0; i < image.v.size(); ++i)
            work.v[i] = std::log(static_cast<double>(image.v[i]) + kLogFloor);
    } else {
        for (std::size_t i = 0; i < image.v.size(); ++i)
            work.v[i] = static_cast<double>(image.v[i]);
    }

    WaveletPyramid pyr = dwt2(work, cfg.family, cfg.levels);
    const double sigma = median_abs(pyr.details[0].hh) / 0.6745;
    const double threshold =
        sigma * std::sqrt(2.0 * std::log(static_cast<double>(image.v.size())));
    for (auto& det : pyr.details) {
        shrink(det.lh, threshold, cfg.rule);
        shrink(det.hl, threshold, cfg.rule);
        shrink(det.hh, threshold, cfg.rule);
    }

    const GridD rec = idwt2(pyr);
    GridF out(image.rows, image.cols);
    for (std::size_t i = 0; i < rec.v.size(); ++i) {
        const double x = cfg.log_domain ? std::exp(rec.v[i]) - kLogFloor : rec.v[i];
        out.v[i] = static_cast<float>(std::max(0.0, x));
    }
    return out;
}

DenoiseConfig parse_denoise_config(const json& j) {
    const std::string ctx = "denoise config";
    require_keys(j, {"family", "levels", "rule", "log_domain"}, ctx);
    DenoiseConfig cfg;
    const std::string family = get_str(j, "family", "db4", ctx);
    if (family == "haar")
        cfg.family = WaveletFamily::haar;
    else if (family == "db4")
        cfg.family = WaveletFamily::db4;
    else
        throw ValidationError(ctx + ": unknown family '" + family + "'");
    cfg.levels = static_cast<int>(get_int(j, "levels", cfg.levels, ctx));
    if (cfg.levels < 1) throw ValidationError(ctx + ": levels must be >= 1");
    const std::string rule = get_str(j, "rule", "soft", ctx);
    if (rule == "soft")
        cfg.rule = DenoiseConfig::Rule::soft;
    else if (rule == "hard")
        cfg.rule = DenoiseConfig::Rule::hard;
    else
        throw ValidationError(ctx + ": unknown rule '" + rule + "'");
    cfg.log_domain = get_bool(j, "log_domain", cfg.log_domain, ctx);
    return cfg;
}

json denoise_config_to_json(const DenoiseConfig& cfg) {
    return json{{"family", cfg.family == WaveletFamily::haar ? "haar" : "db4"},
                {"levels", cfg.levels},
                {"rule", cfg.rule == DenoiseConfig::Rule::soft ? "soft" : "hard"},
                {"log_domain", cfg.log_domain}};
}

} // namespace sardet
