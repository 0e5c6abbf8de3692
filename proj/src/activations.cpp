#include "fedgat/activations.hpp"

namespace fedgat {

Activation Activation::parse(const std::string& s) {
    // Accepts "identity", "exp", "leaky_relu:0.2", "elu:1.0" (param optional).
    const auto colon = s.find(':');
    const std::string name = s.substr(0, colon);
    double param = 0.0;
    bool has_param = colon != std::string::npos;
    if (has_param) param = std::stod(s.substr(colon + 1));
    if (name == "identity") return identity();
    if (name == "exp") return exp();
    if (name == "leaky_relu") return leaky_relu(has_param ? param : 0.2);
    if (name == "elu") return elu(has_param ? param : 1.0);
    throw std::invalid_argument("unknown activation '" + s + "'");
}

}  // namespace fedgat
