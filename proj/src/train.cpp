#include "fedgat/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fedgat/kernels.hpp"

namespace fedgat {

double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels, const std::vector<int>& mask) {
    if (mask.empty()) throw std::invalid_argument("cross_entropy_loss: empty mask");
    double total = 0.0;
    for (int r : mask) {
        const double* row = logits.row_ptr(r);
        double mx = row[0];
        for (std::int64_t c = 1; c < logits.n_cols; ++c) mx = std::max(mx, row[c]);
        double lse = 0.0;
        for (std::int64_t c = 0; c < logits.n_cols; ++c) lse += std::exp(row[c] - mx);
        total += mx + std::log(lse) - row[labels[static_cast<std::size_t>(r)]];
    }
    return total / static_cast<double>(mask.size());
}

double evaluate_accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<int>& mask) {
    if (mask.empty()) throw std::invalid_argument("evaluate_accuracy: empty mask");
    int correct = 0;
    for (int r : mask) {
        const double* row = logits.row_ptr(r);
        int best = 0;
        for (std::int64_t c = 1; c < logits.n_cols; ++c) {
            if (row[c] > row[best]) best = static_cast<int>(c);
        }
        if (best == labels[static_cast<std::size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

ModelParams fedavg_aggregate(const std::vector<const ModelParams*>& contributions,
                             const std::vector<double>& weights) {
    if (contributions.empty()) throw std::invalid_argument("fedavg_aggregate: empty contribution set");
    ModelParams out = *contributions[0];
    auto out_flat = out.flat();
    std::vector<double> w = weights;
    if (w.empty()) w.assign(contributions.size(), 1.0);
    if (w.size() != contributions.size()) throw std::invalid_argument("fedavg_aggregate: weight count mismatch");
    double total_w = 0.0;
    for (double x : w) total_w += x;
    if (!(total_w > 0.0)) throw std::invalid_argument("fedavg_aggregate: weights must sum positive");

    for (Tensor* t : out_flat) std::fill(t->data.begin(), t->data.end(), 0.0);
    auto& kb = kernels::active();
    for (std::size_t k = 0; k < contributions.size(); ++k) {
        const auto in_flat = contributions[k]->flat();
        for (std::size_t i = 0; i < out_flat.size(); ++i) {
            kb.axpy(w[k] / total_w, in_flat[i]->data.data(), out_flat[i]->data.data(), out_flat[i]->size());
        }
    }
    return out;
}

void optimizer_step(ModelParams& params, const std::vector<Tensor>& grads, const OptimizerConfig& cfg,
                    AdamState& state) {
    auto flat = params.flat();
    if (grads.size() != flat.size()) throw std::invalid_argument("optimizer_step: gradient count mismatch");
    if (cfg.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t i = 0; i < flat.size(); ++i) {
            for (std::size_t j = 0; j < flat[i]->size(); ++j) {
                const double g = grads[i].data[j] + cfg.weight_decay * flat[i]->data[j];
                flat[i]->data[j] -= cfg.lr * g;
            }
        }
        return;
    }
    if (state.m.size() != flat.size()) {
        state.m.clear();
        state.v.clear();
        for (Tensor* t : flat) {
            state.m.emplace_back(t->n_rows, t->n_cols);
            state.v.emplace_back(t->n_rows, t->n_cols);
        }
        state.t = 0;
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, state.t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, state.t);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        for (std::size_t j = 0; j < flat[i]->size(); ++j) {
            const double g = grads[i].data[j] + cfg.weight_decay * flat[i]->data[j];
            double& m = state.m[i].data[j];
            double& v = state.v[i].data[j];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            flat[i]->data[j] -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
        }
    }
}

namespace {

// Loss over a client's owned training rows; local row ids into owned order.
std::vector<int> local_train_rows(const std::vector<int>& owned, const std::vector<int>& train_mask) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < owned.size(); ++i) {
        if (std::binary_search(train_mask.begin(), train_mask.end(), owned[i])) rows.push_back(static_cast<int>(i));
    }
    return rows;
}

std::vector<Tensor> collect_grads(const ClientPass& cp) {
    std::vector<Tensor> grads;
    for (const auto& layer : cp.param_ids) {
        for (const auto& head : layer) {
            for (NodeId id : head) grads.push_back(cp.tape.grad(id));
        }
    }
    return grads;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Graph& g, const PartitionPlan& plan,
                  const PretrainPackages* pkgs) {
    if (cfg.rounds < 1 || cfg.local_epochs < 1)
        throw std::invalid_argument("train: rounds and local epochs must be >= 1");
    if (!(cfg.client_fraction > 0.0 && cfg.client_fraction <= 1.0))
        throw std::invalid_argument("train: client fraction must be in (0, 1]");
    const bool fed = cfg.variant == ForwardVariant::fedgat_matrix || cfg.variant == ForwardVariant::fedgat_vector;
    if (fed && pkgs == nullptr) throw std::invalid_argument("train: fedgat variants need pretrain packages");
    if (fed) {
        const PackageVariant want =
            cfg.variant == ForwardVariant::fedgat_matrix ? PackageVariant::matrix : PackageVariant::vector;
        if (pkgs->variant != want)
            throw std::invalid_argument("train: package variant does not match the training variant");
    }

    std::optional<PowerSeries> ps;
    if (fed) {
        ps = fit_score_series(cfg.model.psi, cfg.interval_radius, cfg.degree);
        ensure_positive_series(*ps);
    }

    const int K = plan.n_clients;
    ModelParams global = ModelParams::init(cfg.model, cfg.seed);
    if (cfg.norm_projection) global.project_norms();

    // Per-client label rows.
    const auto owned = plan.owned_nodes();
    std::vector<std::vector<int>> client_train_rows(static_cast<std::size_t>(K));
    std::vector<IndexList> client_labels(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        client_train_rows[static_cast<std::size_t>(k)] = local_train_rows(owned[static_cast<std::size_t>(k)], g.train_mask);
        std::vector<int> lbl(owned[static_cast<std::size_t>(k)].size());
        for (std::size_t i = 0; i < lbl.size(); ++i) lbl[i] = g.labels[static_cast<std::size_t>(owned[static_cast<std::size_t>(k)][i])];
        client_labels[static_cast<std::size_t>(k)] = make_indices(std::move(lbl));
    }

    std::mt19937_64 sampler(cfg.seed ^ 0x5a5a5a5aULL);
    std::vector<AdamState> states(static_cast<std::size_t>(K));

    TrainResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();

        // Client subset for this round.
        std::vector<int> selected;
        if (cfg.client_fraction >= 1.0) {
            for (int k = 0; k < K; ++k) selected.push_back(k);
        } else {
            std::vector<int> all(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) all[static_cast<std::size_t>(k)] = k;
            std::shuffle(all.begin(), all.end(), sampler);
            const int m = std::max(1, static_cast<int>(std::ceil(cfg.client_fraction * K)));
            selected.assign(all.begin(), all.begin() + m);
            std::sort(selected.begin(), selected.end());
        }

        // Broadcast.
        std::vector<ModelParams> local(static_cast<std::size_t>(K), global);
        if (!cfg.persistent_optimizer) {
            for (auto& s : states) s = AdamState{};
        }

        std::int64_t exchange = 0;
        for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
            // Synchronized pass: all selected clients step in lockstep so the
            // exchanged embeddings always reflect current local parameters.
            std::vector<const ModelParams*> param_ptrs(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) param_ptrs[static_cast<std::size_t>(k)] = &local[static_cast<std::size_t>(k)];
            MultiForwardResult fw = federated_forward(g, plan, cfg.variant, pkgs, ps ? &*ps : nullptr,
                                                      param_ptrs, /*trainable=*/true);
            exchange += fw.exchange_scalars;
            for (int k : selected) {
                ClientPass& cp = fw.clients[static_cast<std::size_t>(k)];
                const auto& rows = client_train_rows[static_cast<std::size_t>(k)];
                if (rows.empty()) continue;  // no training nodes: returns params unchanged
                const NodeId loss = cp.tape.softmax_cross_entropy(cp.logits, client_labels[static_cast<std::size_t>(k)],
                                                                  make_indices(rows));
                if (!std::isfinite(cp.tape.value(loss).data[0]))
                    throw std::runtime_error("train: non-finite loss at round " + std::to_string(round));
                cp.tape.backward(loss);
                const auto grads = collect_grads(cp);
                optimizer_step(local[static_cast<std::size_t>(k)], grads, cfg.opt, states[static_cast<std::size_t>(k)]);
                if (cfg.norm_projection) local[static_cast<std::size_t>(k)].project_norms();
            }
        }

        // Aggregate selected clients that actually trained.
        std::vector<const ModelParams*> contribs;
        std::vector<double> weights;
        for (int k : selected) {
            if (client_train_rows[static_cast<std::size_t>(k)].empty()) continue;
            contribs.push_back(&local[static_cast<std::size_t>(k)]);
            weights.push_back(cfg.weighted_average
                                  ? static_cast<double>(client_train_rows[static_cast<std::size_t>(k)].size())
                                  : 1.0);
        }
        if (contribs.empty()) throw std::runtime_error("train: no client contributed this round");
        global = fedavg_aggregate(contribs, weights);

        // Evaluate with the aggregated parameters.
        std::vector<const ModelParams*> eval_ptrs(static_cast<std::size_t>(K), &global);
        MultiForwardResult ev = federated_forward(g, plan, cfg.variant, pkgs, ps ? &*ps : nullptr, eval_ptrs,
                                                  /*trainable=*/false);
        RoundRecord rec;
        rec.round = round;
        rec.train_loss = cross_entropy_loss(ev.global_logits, g.labels, g.train_mask);
        rec.val_acc = evaluate_accuracy(ev.global_logits, g.labels, g.val_mask);
        rec.test_acc = evaluate_accuracy(ev.global_logits, g.labels, g.test_mask);
        rec.exchange_scalars = exchange + ev.exchange_scalars;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.history.rounds.push_back(rec);
    }
    result.params = std::move(global);
    return result;
}

}  // namespace fedgat
