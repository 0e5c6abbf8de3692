#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedgat {

// Dense row-major matrix of 64-bit floats. Vectors are 1 x n or n x 1,
// scalars 1 x 1; everything the model touches is rank 2.
struct Tensor {
    std::int64_t n_rows = 0;
    std::int64_t n_cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::int64_t rows, std::int64_t cols)
        : n_rows(rows), n_cols(cols), data(static_cast<std::size_t>(rows * cols), 0.0) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("tensor: negative dimension");
    }
    Tensor(std::int64_t rows, std::int64_t cols, std::vector<double> values)
        : n_rows(rows), n_cols(cols), data(std::move(values)) {
        if (data.size() != static_cast<std::size_t>(rows * cols))
            throw std::invalid_argument("tensor: data length does not match shape");
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor row(std::vector<double> v) {
        const auto n = static_cast<std::int64_t>(v.size());
        return Tensor(1, n, std::move(v));
    }
    static Tensor col(std::vector<double> v) {
        const auto n = static_cast<std::int64_t>(v.size());
        return Tensor(n, 1, std::move(v));
    }
    static Tensor zeros(std::int64_t rows, std::int64_t cols) { return Tensor(rows, cols); }
    static Tensor gaussian(std::int64_t rows, std::int64_t cols, std::mt19937_64& rng, double stddev = 1.0);

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return n_rows == o.n_rows && n_cols == o.n_cols; }

    double& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * n_cols + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * n_cols + c)]; }

    double* row_ptr(std::int64_t r) { return data.data() + r * n_cols; }
    const double* row_ptr(std::int64_t r) const { return data.data() + r * n_cols; }

    bool all_finite() const;
    double l2_norm() const;
    double max_abs() const;

    Tensor transposed() const;
};

// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace fedgat
