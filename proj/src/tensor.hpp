#pragma once

#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace sardet {

/// Flat row-major n-dimensional array of 32-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel_of(shape)), 0.0f);
    }

    std::int64_t numel() const { return numel_of(shape); }

    static std::int64_t numel_of(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 1) throw ValidationError("tensor: shape entries must be positive");
            n *= d;
        }
        return n;
    }
};

} // namespace sardet
