#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedgat/fedgat_layer.hpp"
#include "fedgat/gat.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/package.hpp"

namespace fedgat {

struct OptimizerConfig {
    enum class Kind { adam, sgd };
    Kind kind = Kind::adam;
    double lr = 0.1;
    double weight_decay = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    int t = 0;
};

struct TrainConfig {
    int rounds = 40;
    int local_epochs = 2;
    double client_fraction = 1.0;
    OptimizerConfig opt;
    std::uint64_t seed = 1;
    ForwardVariant variant = ForwardVariant::fedgat_matrix;
    int degree = 16;
    double interval_radius = 2.0;
    bool norm_projection = false;
    bool persistent_optimizer = false;  // keep Adam state across rounds (ablation)
    bool weighted_average = false;      // size-weighted FedAvg (ablation)
    GatConfig model;
};

struct RoundRecord {
    int round = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double wall_ms = 0.0;
    std::int64_t exchange_scalars = 0;
};

struct TrainHistory {
    std::vector<RoundRecord> rounds;
};

struct TrainResult {
    TrainHistory history;
    ModelParams params;
};

// Mean negative log-softmax of the true class over masked rows.
double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels, const std::vector<int>& mask);

// Argmax accuracy over masked rows; ties resolve to the lowest class id.
double evaluate_accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<int>& mask);

// Unweighted coordinate-wise mean over the contributing sets, summed in
// client-id order. Weights (all 1 by default) enable the ablation mode.
ModelParams fedavg_aggregate(const std::vector<const ModelParams*>& contributions,
                             const std::vector<double>& weights = {});

// One optimizer step in place; gradients are per-tensor, matching flat().
void optimizer_step(ModelParams& params, const std::vector<Tensor>& grads, const OptimizerConfig& cfg,
                    AdamState& state);

// Algorithm-2 loop: broadcast, local epochs, aggregate, evaluate. Packages
// are required for the fedgat variants.
TrainResult train(const TrainConfig& cfg, const Graph& g, const PartitionPlan& plan,
                  const PretrainPackages* pkgs);

}  // namespace fedgat
