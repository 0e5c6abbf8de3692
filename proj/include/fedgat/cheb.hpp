#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fedgat {

// Truncated Chebyshev expansion of a scalar function on [lo, hi].
struct ChebSeries {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> coeffs;  // c_0 .. c_p

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double operator()(double x) const;  // Clenshaw on the rescaled variable
};

// The same approximant written as monomial coefficients of the raw variable,
// so that powers of x can be taken through matrix powers.
struct PowerSeries {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> coeffs;  // q_0 .. q_p

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double operator()(double x) const;  // Horner
};

// Chebyshev-Gauss projection at oversample*(p+1) nodes mapped to [lo, hi].
ChebSeries fit_chebyshev(const std::function<double(double)>& f, double lo, double hi, int degree,
                         int oversample = 4);

// Expands T_n of the rescaled variable into monomials and composes with the
// affine map back to x. Degrees above 64 are rejected as numerically unsafe.
PowerSeries to_power_series(const ChebSeries& cs);

// 2V / (pi * k * (p-k)^k); requires p > k >= 1, V >= 0.
double truncation_bound(double variation, int smoothness_order, int degree);

// max |f(x) - ps(x)| over a uniform grid of grid_size points on [lo, hi].
double empirical_max_error(const std::function<double(double)>& f, const PowerSeries& ps, int grid_size);

// min ps(x) over a uniform grid; the approximate scores must stay positive.
double min_on_grid(const PowerSeries& ps, int grid_size);

// Total variation of the k-th derivative of f on [lo, hi], measured by finite
// differences on a dense grid. Used to instantiate the closed-form bound.
double numeric_total_variation(const std::function<double(double)>& f, double lo, double hi, int deriv_order,
                               int grid_size = 20001);

// Evaluation wrapper for callers that materialize raw score arguments
// (diagnostics, verification): arguments outside the fitted interval are
// clamped to its edge and counted instead of fed to the divergent tail.
struct ClampingEvaluator {
    const PowerSeries& ps;
    std::int64_t out_of_range = 0;

    double operator()(double x) {
        if (x < ps.lo) {
            ++out_of_range;
            x = ps.lo;
        } else if (x > ps.hi) {
            ++out_of_range;
            x = ps.hi;
        }
        return ps(x);
    }
};

// Interval plus coefficient array, reproducing the fit exactly.
std::string power_series_to_json(const PowerSeries& ps);
PowerSeries power_series_from_json(const std::string& text);

}  // namespace fedgat
