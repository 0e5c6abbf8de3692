#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fedgat {

// Pointwise activations used for the score nonlinearity and the layer
// nonlinearity. Each carries its analytic Lipschitz constant so the error
// bounds can be evaluated without estimation.
struct Activation {
    enum class Kind { identity, leaky_relu, elu, exp };

    Kind kind = Kind::identity;
    double param = 1.0;  // slope for leaky_relu, alpha for elu

    static Activation identity() { return {Kind::identity, 1.0}; }
    static Activation leaky_relu(double slope) {
        if (!(slope > 0.0) || !std::isfinite(slope)) throw std::invalid_argument("leaky_relu: slope must be finite positive");
        return {Kind::leaky_relu, slope};
    }
    static Activation elu(double alpha) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("elu: alpha must be finite positive");
        return {Kind::elu, alpha};
    }
    static Activation exp() { return {Kind::exp, 1.0}; }

    double operator()(double x) const {
        switch (kind) {
            case Kind::identity: return x;
            case Kind::leaky_relu: return x > 0.0 ? x : param * x;
            case Kind::elu: return x > 0.0 ? x : param * (std::exp(x) - 1.0);
            case Kind::exp: return std::exp(x);
        }
        return x;
    }

    double derivative(double x) const {
        switch (kind) {
            case Kind::identity: return 1.0;
            case Kind::leaky_relu: return x > 0.0 ? 1.0 : param;
            case Kind::elu: return x > 0.0 ? 1.0 : param * std::exp(x);
            case Kind::exp: return std::exp(x);
        }
        return 1.0;
    }

    // Global Lipschitz constant; exp has none.
    double lipschitz() const {
        switch (kind) {
            case Kind::identity: return 1.0;
            case Kind::leaky_relu: return std::max(1.0, param);
            case Kind::elu: return std::max(1.0, param);
            case Kind::exp: return std::numeric_limits<double>::infinity();
        }
        return 1.0;
    }

    std::string name() const {
        switch (kind) {
            case Kind::identity: return "identity";
            case Kind::leaky_relu: return "leaky_relu";
            case Kind::elu: return "elu";
            case Kind::exp: return "exp";
        }
        return "?";
    }

    static Activation parse(const std::string& s);
};

}  // namespace fedgat
