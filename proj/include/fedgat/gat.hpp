#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedgat/activations.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/tape.hpp"
#include "fedgat/tensor.hpp"

namespace fedgat {

enum class HeadMerge { concat, average };

struct HeadParams {
    Tensor W;   // out x in
    Tensor a1;  // out x 1
    Tensor a2;  // out x 1
};

struct LayerConfig {
    int in_dim = 0;
    int out_dim = 0;
    int heads = 1;
    Activation phi = Activation::elu(1.0);
    Activation psi = Activation::leaky_relu(0.2);
    HeadMerge merge = HeadMerge::concat;
};

// Architecture knobs; expanded into per-layer configs by make_layer_configs.
struct GatConfig {
    int in_dim = 0;
    int n_classes = 0;
    int layers = 2;
    int hidden_dim = 8;
    int heads = 8;
    int heads_out = 1;
    bool self_loops = true;
    Activation phi_hidden = Activation::elu(1.0);
    Activation psi = Activation::leaky_relu(0.2);
};

std::vector<LayerConfig> make_layer_configs(const GatConfig& cfg);

struct ModelParams {
    GatConfig config;
    std::vector<LayerConfig> layer_cfgs;
    std::vector<std::vector<HeadParams>> layers;  // [layer][head]

    static ModelParams init(const GatConfig& cfg, std::uint64_t seed);

    // Tensors in a fixed order: per layer, per head, W then a1 then a2.
    std::vector<Tensor*> flat();
    std::vector<const Tensor*> flat() const;

    // Clamps spectral norm of each W and L2 norm of each attention vector to
    // at most 1 (power iteration for the spectral estimate).
    void project_norms(int power_iterations = 20);

    double max_spectral_norm(int power_iterations = 20) const;
};

double spectral_norm(const Tensor& m, int power_iterations = 20);

// exp(psi(a1'Wh_i + a2'Wh_j)) evaluated directly.
double attention_score(const HeadParams& head, Activation psi, const Tensor& h_i, const Tensor& h_j);

// Softmax of raw scores; requires a nonempty, strictly positive score list.
std::vector<double> attention_coeffs(const std::vector<double>& scores);

// Directed attention pairs (dst <- src) over a node list, self-loops
// included when requested, ordered by (dst, src).
struct PairList {
    IndexList dst;
    IndexList src;
    int n_nodes = 0;
};
PairList build_pairs(const std::vector<std::vector<int>>& adj, const std::vector<int>& nodes, bool self_loops);

// One GAT layer on tape: h (m x in) -> merged head outputs.
NodeId gat_layer(Tape& tape, NodeId h, const std::vector<std::vector<NodeId>>& head_param_ids, int layer,
                 const LayerConfig& cfg, const PairList& pairs);

// Creates leaves for every parameter tensor; trainable toggles gradients.
std::vector<std::vector<std::vector<NodeId>>> param_leaves(Tape& tape, const ModelParams& params, bool trainable);

// Full centralized forward; returns logits (n x C).
Tensor gat_forward(const Graph& g, const ModelParams& params);

// Tape-building variant used for training; returns the logits node.
NodeId gat_forward_tape(Tape& tape, const Graph& g, const ModelParams& params,
                        const std::vector<std::vector<std::vector<NodeId>>>& ids);

// Baseline that drops every cross-client edge: each client runs the oracle
// on its owned induced subgraph. Rows of the result follow global node ids.
Tensor dist_gat_forward(const Graph& g, const PartitionPlan& plan, const ModelParams& params);

void save_checkpoint(const ModelParams& params, const std::string& stem);
ModelParams load_checkpoint(const std::string& stem);

}  // namespace fedgat
