#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "enhance/errors.hpp"

namespace enhance::nn {

// Dense N-dimensional array of doubles.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        values.assign(count(), fill);
    }

    size_t count() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void zero() { std::fill(values.begin(), values.end(), 0.0); }

    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace enhance::nn
