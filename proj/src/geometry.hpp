#pragma once

#include <algorithm>
#include <cstdint>

namespace sardet {

/// Axis-aligned pixel box, top-left anchored with half-open extent:
/// rows [row, row+height), cols [col, col+width).
struct BoundingBox {
    int row = 0;
    int col = 0;
    int height = 1;
    int width = 1;

    int row_end() const { return row + height; }
    int col_end() const { return col + width; }
    std::int64_t area() const { return static_cast<std::int64_t>(height) * width; }

    bool operator==(const BoundingBox&) const = default;
    auto operator<=>(const BoundingBox&) const = default;
};

inline std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const int h = std::min(a.row_end(), b.row_end()) - std::max(a.row, b.row);
    const int w = std::min(a.col_end(), b.col_end()) - std::max(a.col, b.col);
    if (h <= 0 || w <= 0) return 0;
    return static_cast<std::int64_t>(h) * w;
}

inline bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
    return intersection_area(a, b) > 0;
}

/// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Chebyshev distance from a pixel to the box region (0 when inside).
inline int chebyshev_to_box(int r, int c, const BoundingBox& b) {
    const int dr = std::max({0, b.row - r, r - (b.row_end() - 1)});
    const int dc = std::max({0, b.col - c, c - (b.col_end() - 1)});
    return std::max(dr, dc);
}

} // namespace sardet
