#include "fedgat/cheb.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace fedgat {

namespace {
constexpr int kMaxMonomialDegree = 64;
}

double ChebSeries::operator()(double x) const {
    // Clenshaw recurrence in the rescaled variable t in [-1, 1].
    const double t = (2.0 * x - (hi + lo)) / (hi - lo);
    double b1 = 0.0, b2 = 0.0;
    for (int n = degree(); n >= 1; --n) {
        const double b0 = coeffs[static_cast<std::size_t>(n)] + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return coeffs[0] + t * b1 - b2;
}

double PowerSeries::operator()(double x) const {
    double acc = 0.0;
    for (int n = degree(); n >= 0; --n) acc = acc * x + coeffs[static_cast<std::size_t>(n)];
    return acc;
}

ChebSeries fit_chebyshev(const std::function<double(double)>& f, double lo, double hi, int degree,
                         int oversample) {
    if (!(lo < hi)) throw std::invalid_argument("fit_chebyshev: interval must satisfy lo < hi");
    if (degree < 0) throw std::invalid_argument("fit_chebyshev: degree must be >= 0");
    if (oversample < 1) throw std::invalid_argument("fit_chebyshev: oversample must be >= 1");

    const int m = oversample * (degree + 1);
    std::vector<double> t(static_cast<std::size_t>(m));
    std::vector<double> fx(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double theta = std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        t[static_cast<std::size_t>(k)] = std::cos(theta);
        const double x = 0.5 * ((hi - lo) * t[static_cast<std::size_t>(k)] + (hi + lo));
        const double v = f(x);
        if (!std::isfinite(v))
            throw std::runtime_error("fit_chebyshev: non-finite sample at x=" + std::to_string(x));
        fx[static_cast<std::size_t>(k)] = v;
    }

    ChebSeries cs;
    cs.lo = lo;
    cs.hi = hi;
    cs.coeffs.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    // Discrete Chebyshev-Gauss orthogonality: T_n evaluated by recurrence.
    std::vector<double> tn_prev(static_cast<std::size_t>(m), 1.0);
    std::vector<double> tn_cur(t);
    for (int n = 0; n <= degree; ++n) {
        double acc = 0.0;
        const std::vector<double>& tn = (n == 0) ? tn_prev : tn_cur;
        for (int k = 0; k < m; ++k) acc += fx[static_cast<std::size_t>(k)] * tn[static_cast<std::size_t>(k)];
        cs.coeffs[static_cast<std::size_t>(n)] = (n == 0 ? 1.0 : 2.0) * acc / static_cast<double>(m);
        if (n >= 1) {
            // advance: T_{n+1} = 2 t T_n - T_{n-1}
            for (int k = 0; k < m; ++k) {
                const double next = 2.0 * t[static_cast<std::size_t>(k)] * tn_cur[static_cast<std::size_t>(k)] -
                                    tn_prev[static_cast<std::size_t>(k)];
                tn_prev[static_cast<std::size_t>(k)] = tn_cur[static_cast<std::size_t>(k)];
                tn_cur[static_cast<std::size_t>(k)] = next;
            }
        }
    }
    return cs;
}

PowerSeries to_power_series(const ChebSeries& cs) {
    const int p = cs.degree();
    if (p > kMaxMonomialDegree)
        throw std::invalid_argument("to_power_series: degree " + std::to_string(p) +
                                    " exceeds the monomial-conversion limit of 64");

    // Combine c_n T_n(t) into monomial coefficients of t.
    std::vector<double> in_t(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> t_prev{1.0};       // T_0
    std::vector<double> t_cur{0.0, 1.0};   // T_1
    for (int n = 0; n <= p; ++n) {
        const std::vector<double>& tn = (n == 0) ? t_prev : t_cur;
        for (std::size_t j = 0; j < tn.size(); ++j) in_t[j] += cs.coeffs[static_cast<std::size_t>(n)] * tn[j];
        if (n >= 1 && n < p) {
            std::vector<double> next(tn.size() + 1, 0.0);
            for (std::size_t j = 0; j < t_cur.size(); ++j) next[j + 1] += 2.0 * t_cur[j];
            for (std::size_t j = 0; j < t_prev.size(); ++j) next[j] -= t_prev[j];
            t_prev = std::move(t_cur);
            t_cur = std::move(next);
        }
    }

    // Compose with t = alpha*x + beta.
    const double alpha = 2.0 / (cs.hi - cs.lo);
    const double beta = -(cs.hi + cs.lo) / (cs.hi - cs.lo);
    PowerSeries ps;
    ps.lo = cs.lo;
    ps.hi = cs.hi;
    ps.coeffs.assign(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> pow{1.0};  // (alpha*x + beta)^j
    for (int j = 0; j <= p; ++j) {
        for (std::size_t i = 0; i < pow.size(); ++i) ps.coeffs[i] += in_t[static_cast<std::size_t>(j)] * pow[i];
        if (j < p) {
            std::vector<double> next(pow.size() + 1, 0.0);
            for (std::size_t i = 0; i < pow.size(); ++i) {
                next[i] += beta * pow[i];
                next[i + 1] += alpha * pow[i];
            }
            pow = std::move(next);
        }
    }
    return ps;
}

double truncation_bound(double variation, int smoothness_order, int degree) {
    if (variation < 0.0) throw std::invalid_argument("truncation_bound: variation must be >= 0");
    if (smoothness_order < 1) throw std::invalid_argument("truncation_bound: smoothness order must be >= 1");
    if (degree <= smoothness_order)
        throw std::invalid_argument("truncation_bound: requires degree > smoothness order");
    const double k = static_cast<double>(smoothness_order);
    const double p = static_cast<double>(degree);
    return 2.0 * variation / (std::numbers::pi * k * std::pow(p - k, k));
}

double empirical_max_error(const std::function<double(double)>& f, const PowerSeries& ps, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("empirical_max_error: grid_size must be >= 2");
    double worst = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        const double x = ps.lo + (ps.hi - ps.lo) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        worst = std::max(worst, std::abs(f(x) - ps(x)));
    }
    return worst;
}

double min_on_grid(const PowerSeries& ps, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("min_on_grid: grid_size must be >= 2");
    double lowest = ps(ps.lo);
    for (int i = 1; i < grid_size; ++i) {
        const double x = ps.lo + (ps.hi - ps.lo) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        lowest = std::min(lowest, ps(x));
    }
    return lowest;
}

double numeric_total_variation(const std::function<double(double)>& f, double lo, double hi, int deriv_order,
                               int grid_size) {
    if (!(lo < hi)) throw std::invalid_argument("numeric_total_variation: lo < hi required");
    if (deriv_order < 0) throw std::invalid_argument("numeric_total_variation: order must be >= 0");
    if (grid_size < deriv_order + 3) throw std::invalid_argument("numeric_total_variation: grid too small");

    std::vector<double> vals(static_cast<std::size_t>(grid_size));
    const double h = (hi - lo) / static_cast<double>(grid_size - 1);
    for (int i = 0; i < grid_size; ++i) vals[static_cast<std::size_t>(i)] = f(lo + h * static_cast<double>(i));
    // Repeated forward differences approximate the derivative up to a factor
    // h^k; total variation of that sequence then estimates TV(f^(k)).
    for (int k = 0; k < deriv_order; ++k) {
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) vals[i] = (vals[i + 1] - vals[i]) / h;
        vals.pop_back();
    }
    double tv = 0.0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) tv += std::abs(vals[i + 1] - vals[i]);
    return tv;
}

std::string power_series_to_json(const PowerSeries& ps) {
    nlohmann::json j;
    j["lo"] = ps.lo;
    j["hi"] = ps.hi;
    j["coeffs"] = ps.coeffs;
    return j.dump();
}

PowerSeries power_series_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    PowerSeries ps;
    ps.lo = j.at("lo").get<double>();
    ps.hi = j.at("hi").get<double>();
    ps.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (ps.coeffs.empty() || !(ps.lo < ps.hi)) throw std::runtime_error("power series: malformed JSON");
    return ps;
}

}  // namespace fedgat
