#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trenn {

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xN.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_str());
        }
    }

    static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }
    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.data[0] = x;
        return t;
    }
    static Tensor identity(std::size_t n) {
        Tensor t(n, n);
        for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double item() const {
        if (!is_scalar()) throw std::invalid_argument("Tensor::item on non-scalar " + shape_str());
        return data[0];
    }

    bool same_shape(const Tensor& other) const { return rows == other.rows && cols == other.cols; }

    std::string shape_str() const {
        return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
    }

    bool all_finite() const;
};

}  // namespace trenn
