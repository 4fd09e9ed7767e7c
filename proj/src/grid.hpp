#pragma once

#include <cstddef>
#include <vector>

namespace sardet {

/// Dense row-major 2-D array.
template <class T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return v.size(); }
};

using GridF = Grid<float>;
using GridD = Grid<double>;
using GridU8 = Grid<unsigned char>;

} // namespace sardet
