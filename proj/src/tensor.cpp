#include "fedgat/tensor.hpp"

#include <cmath>

namespace fedgat {

Tensor Tensor::gaussian(std::int64_t rows, std::int64_t cols, std::mt19937_64& rng, double stddev) {
    Tensor t(rows, cols);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Tensor::l2_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
}

Tensor Tensor::transposed() const {
    Tensor out(n_cols, n_rows);
    for (std::int64_t r = 0; r < n_rows; ++r) {
        for (std::int64_t c = 0; c < n_cols; ++c) {
            out.at(c, r) = at(r, c);
        }
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace fedgat
