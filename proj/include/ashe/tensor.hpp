#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ashe/errors.hpp"

namespace ashe {

template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            require(d > 0, "Tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;

// Debug-build guard for the finite-values invariant.
template <typename T>
inline void debug_check_finite(const TensorT<T>& t) {
#ifndef NDEBUG
    for (const T& v : t.data) assert(std::isfinite(static_cast<double>(v)));
#else
    (void)t;
#endif
}

}  // namespace ashe
