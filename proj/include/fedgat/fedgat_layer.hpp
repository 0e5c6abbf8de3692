#pragma once

#include <cstdint>
#include <vector>

#include "fedgat/cheb.hpp"
#include "fedgat/gat.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/package.hpp"
#include "fedgat/tape.hpp"

namespace fedgat {

// Host-side helpers used by tests and the bound verifier. b1/b2 are the
// d-vectors W'a1, W'a2 of one head.
Tensor assemble_D(const NodePackage& pkg, const Tensor& b1, const Tensor& b2);

struct MomentSet {
    Tensor e;  // (p+1) x d, row n = sum_j x_ij^n h_j
    Tensor f;  // (p+1) x 1, row n = sum_j x_ij^n
};

MomentSet moments_matrix(const NodePackage& pkg, const Tensor& b1, const Tensor& b2, int degree);
MomentSet moments_vector(const VectorNodePackage& pkg, const Tensor& b1, const Tensor& b2, int degree);

// Approximate first GAT layer over `nodes`, traced on tape. Gradients flow
// into the attention parameters through both the E and F moment chains; the
// package tensors enter as constant leaves. Throws if any node's series
// denominator is not strictly positive.
NodeId fedgat_first_layer(Tape& tape, const PretrainPackages& pkgs, const PowerSeries& ps,
                          const std::vector<int>& nodes, const std::vector<std::vector<NodeId>>& head_param_ids,
                          const LayerConfig& cfg);

enum class ForwardVariant { fedgat_matrix, fedgat_vector, distgat, centralized };

const char* variant_name(ForwardVariant v);
ForwardVariant parse_variant(const std::string& s);

struct ClientPass {
    Tape tape;
    std::vector<std::vector<std::vector<NodeId>>> param_ids;  // [layer][head][W,a1,a2]
    NodeId logits = -1;       // rows follow `owned`
    std::vector<int> owned;   // global node ids, sorted
};

struct MultiForwardResult {
    std::vector<ClientPass> clients;
    Tensor global_logits;             // n x C, rows filled by each node's owner
    std::int64_t exchange_scalars = 0;  // embedding values crossing client lines
};

// One synchronized multi-client forward. FedGAT variants run the package
// layer first, exchange layer outputs for the 1-hop foreign boundary, then
// apply regular GAT layers; distgat keeps only intra-client edges; the
// centralized variant expects a single-client plan.
MultiForwardResult federated_forward(const Graph& g, const PartitionPlan& plan, ForwardVariant variant,
                                     const PretrainPackages* pkgs, const PowerSeries* ps,
                                     const std::vector<const ModelParams*>& client_params, bool trainable);

// The fitted score series exp(psi(.)) for a model's score activation.
PowerSeries fit_score_series(Activation psi, double interval_radius, int degree);

// Configuration guard: the fitted series must stay strictly positive on its
// interval, otherwise approximate scores could flip sign.
void ensure_positive_series(const PowerSeries& ps, int grid_size = 1000);

}  // namespace fedgat
