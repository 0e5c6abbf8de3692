#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedgat/activations.hpp"
#include "fedgat/cheb.hpp"

namespace fedgat {

// Largest k for which exp(psi(.)) satisfies the smoothness hypothesis of the
// truncation bound: f^(1..k-1) absolutely continuous, f^(k) of bounded
// variation. Kinked activations cap this at 1.
int score_smoothness_order(Activation psi);

struct VerifyConfig {
    std::uint64_t seed = 7;
    int degree = 16;
    double interval_radius = 2.0;
    Activation psi = Activation::leaky_relu(0.2);
    Activation phi = Activation::elu(1.0);
    std::vector<int> probe_degrees = {8, 16, 24};
    int coeff_instances = 1000;
    int propagation_instances = 200;
    int exp_grid_side = 100;  // grid_side^2 points
    int error_grid = 20001;
};

struct TruncationProbe {
    int k = 0;
    double variation = 0.0;
    double bound = 0.0;
    double empirical = 0.0;
    bool admissible = false;  // hypothesis holds for this k
    bool holds = false;
};

struct ScoreErrorResult {
    int degree = 0;
    double grid_max_error = 0.0;       // against exp(psi) on a dense grid
    double instance_max_error = 0.0;   // over sampled projected-norm edges
};

struct CoeffBoundResult {
    int instances = 0;
    int edges_checked = 0;
    int genuine_violations = 0;      // occurred with every score >= 1
    int attributed_violations = 0;   // traceable to a score below 1
    double worst_margin = 0.0;       // min over edges of bound - measured
    std::vector<std::string> violation_dumps;
};

struct PropagationResult {
    int instances = 0;
    int skipped_hypothesis = 0;  // delta too large for every probed c
    int layer1_violations = 0;
    int score_violations = 0;
    int coeff_violations = 0;
    int embedding_violations = 0;
    int growth_violations = 0;
    double worst_layer1_margin = 0.0;
    double worst_score_margin = 0.0;
    double worst_coeff_margin = 0.0;
    double worst_embedding_margin = 0.0;
};

struct ExpLinearResult {
    int points = 0;
    int violations = 0;
};

struct AccountingResult {
    bool ledger_exact = true;            // integer equality with closed form
    double matrix_degree_exponent = 0.0;  // log-log slope in max degree
    double vector_degree_exponent = 0.0;
    std::int64_t example_matrix_count = 0;  // deg=2, d=3 node
    std::int64_t example_vector_count = 0;
};

struct VerifyReport {
    VerifyConfig config;
    std::vector<TruncationProbe> truncation;
    std::vector<ScoreErrorResult> score_errors;
    CoeffBoundResult coeff_bound;
    PropagationResult propagation;
    ExpLinearResult exp_linear;
    AccountingResult accounting;

    bool all_pass() const;
    nlohmann::json to_json() const;
};

VerifyReport run_verification(const VerifyConfig& cfg);

}  // namespace fedgat
