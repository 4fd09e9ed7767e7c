#include "cfar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace sardet {

namespace {

// Prefix sums with one guard row/col, accumulated in double.
struct Sat {
    int rows, cols;
    std::vector<double> s;

    explicit Sat(const GridF& g, bool squared) : rows(g.rows), cols(g.cols) {
        s.assign(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0);
        for (int r = 0; r < rows; ++r) {
            double run = 0.0;
            for (int c = 0; c < cols; ++c) {
                const double x = static_cast<double>(g.at(r, c));
                run += squared ? x * x : x;
                s[idx(r + 1, c + 1)] = s[idx(r, c + 1)] + run;
            }
        }
    }

    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * (cols + 1) + c; }

    // Sum over rows [r0, r1) x cols [c0, c1), clipped to the image.
    double box(int r0, int c0, int r1, int c1) const {
        r0 = std::max(r0, 0);
        c0 = std::max(c0, 0);
        r1 = std::min(r1, rows);
        c1 = std::min(c1, cols);
        if (r0 >= r1 || c0 >= c1) return 0.0;
        return s[idx(r1, c1)] - s[idx(r0, c1)] - s[idx(r1, c0)] + s[idx(r0, c0)];
    }
};

std::int64_t clipped_area(int r0, int c0, int r1, int c1, int rows, int cols) {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, rows);
    c1 = std::min(c1, cols);
    if (r0 >= r1 || c0 >= c1) return 0;
    return static_cast<std::int64_t>(r1 - r0) * (c1 - c0);
}

} // namespace

void CfarConfig::validate() const {
    if (guard_radius < 0) throw ValidationError("cfar: guard_radius must be >= 0");
    if (train_radius <= guard_radius)
        throw ValidationError("cfar: train_radius must exceed guard_radius");
    const std::int64_t train_side = 2 * static_cast<std::int64_t>(train_radius) + 1;
    const std::int64_t guard_side = 2 * static_cast<std::int64_t>(guard_radius) + 1;
    if (train_side * train_side - guard_side * guard_side < 8)
        throw ValidationError("cfar: training ring must contain at least 8 cells");
    if (!(pfa > 0.0 && pfa < 1.0)) throw ValidationError("cfar: pfa must lie in (0, 1)");
    if (variant == Variant::two_param && two_param_k <= 0.0)
        throw ValidationError("cfar: two_param_k must be positive");
}

double ca_threshold_factor(std::int64_t n_train, double pfa) {
    if (n_train < 1) throw ValidationError("cfar: n_train must be >= 1");
    if (!(pfa > 0.0 && pfa <= 1.0)) throw ValidationError("cfar: pfa must lie in (0, 1]");
    const double n = static_cast<double>(n_train);
    return n * std::expm1(-std::log(pfa) / n);
}

CfarResult cfar_detect(const GridF& band, const CfarConfig& cfg) {
    cfg.validate();
    for (float x : band.v)
        if (!std::isfinite(x) || x < 0.0f)
            throw ValidationError("cfar: band must be finite and non-negative");
    const std::int64_t train_side = 2 * static_cast<std::int64_t>(cfg.train_radius) + 1;
    if (static_cast<std::int64_t>(band.rows) * band.cols < train_side * train_side)
        throw ValidationError("cfar: band smaller than the training window");

    const Sat sum(band, false);
    const bool two_param = cfg.variant == CfarConfig::Variant::two_param;
    Sat sumsq = two_param ? Sat(band, true) : Sat(GridF(1, 1), true);

    // The factor only depends on the truncated ring size; memoize per count.
    std::vector<double> factor_cache(
        static_cast<std::size_t>(train_side * train_side) + 1, -1.0);

    CfarResult result;
    result.mask = GridU8(band.rows, band.cols, 0);
    const int g = cfg.guard_radius, t = cfg.train_radius;
    for (int r = 0; r < band.rows; ++r) {
        for (int c = 0; c < band.cols; ++c) {
            const std::int64_t n_train =
                clipped_area(r - t, c - t, r + t + 1, c + t + 1, band.rows, band.cols) -
                clipped_area(r - g, c - g, r + g + 1, c + g + 1, band.rows, band.cols);
            if (n_train < 1) continue;
            const double ring_sum = sum.box(r - t, c - t, r + t + 1, c + t + 1) -
                                    sum.box(r - g, c - g, r + g + 1, c + g + 1);
            const double mean = ring_sum / static_cast<double>(n_train);
            const double value = static_cast<double>(band.at(r, c));
            bool hit;
            if (two_param) {
                const double ring_sq = sumsq.box(r - t, c - t, r + t + 1, c + t + 1) -
                                       sumsq.box(r - g, c - g, r + g + 1, c + g + 1);
                const double var = std::max(0.0, ring_sq / static_cast<double>(n_train) - mean * mean);
                hit = value > mean + cfg.two_param_k * std::sqrt(var);
            } else {
                double& alpha = factor_cache[static_cast<std::size_t>(n_train)];
                if (alpha < 0.0) alpha = ca_threshold_factor(n_train, cfg.pfa);
                hit = value > alpha * mean;
            }
            if (hit) {
                result.mask.at(r, c) = 1;
                ++result.n_detections;
            }
        }
    }
    result.boxes = cluster_detections(result.mask);
    return result;
}

std::vector<BoundingBox> cluster_detections(const GridU8& mask) {
    std::vector<BoundingBox> boxes;
    GridU8 seen(mask.rows, mask.cols, 0);
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask.at(r, c) || seen.at(r, c)) continue;
            int rmin = r, rmax = r, cmin = c, cmax = c;
            stack.clear();
            stack.emplace_back(r, c);
            seen.at(r, c) = 1;
            while (!stack.empty()) {
                const auto [cr, cc] = stack.back();
                stack.pop_back();
                rmin = std::min(rmin, cr);
                rmax = std::max(rmax, cr);
                cmin = std::min(cmin, cc);
                cmax = std::max(cmax, cc);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nc < 0 || nr >= mask.rows || nc >= mask.cols) continue;
                        if (!mask.at(nr, nc) || seen.at(nr, nc)) continue;
                        seen.at(nr, nc) = 1;
                        stack.emplace_back(nr, nc);
                    }
                }
            }
            boxes.push_back({rmin, cmin, rmax - rmin + 1, cmax - cmin + 1});
        }
    }
    std::sort(boxes.begin(), boxes.end(),
              [](const BoundingBox& a, const BoundingBox& b) {
                  return std::pair(a.row, a.col) < std::pair(b.row, b.col);
              });
    return boxes;
}

CfarConfig parse_cfar_config(const json& j) {
    const std::string ctx = "cfar config";
    require_keys(j, {"guard_radius", "train_radius", "pfa", "variant", "two_param_k"}, ctx);
    CfarConfig cfg;
    cfg.guard_radius = static_cast<int>(get_int(j, "guard_radius", cfg.guard_radius, ctx));
    cfg.train_radius = static_cast<int>(get_int(j, "train_radius", cfg.train_radius, ctx));
    cfg.pfa = get_num(j, "pfa", cfg.pfa, ctx);
    const std::string variant = get_str(j, "variant", "ca", ctx);
    if (variant == "ca")
        cfg.variant = CfarConfig::Variant::ca;
    else if (variant == "two_param")
        cfg.variant = CfarConfig::Variant::two_param;
    else
        throw ValidationError(ctx + ": unknown variant '" + variant + "'");
    cfg.two_param_k = get_num(j, "two_param_k", cfg.two_param_k, ctx);
    cfg.validate();
    return cfg;
}

json cfar_config_to_json(const CfarConfig& cfg) {
    return json{{"guard_radius", cfg.guard_radius},
                {"train_radius", cfg.train_radius},
                {"pfa", cfg.pfa},
                {"variant", cfg.variant == CfarConfig::Variant::ca ? "ca" : "two_param"},
                {"two_param_k", cfg.two_param_k}};
}

} // namespace sardet
