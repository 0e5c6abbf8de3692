#include "fedgat/fedgat_layer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "fedgat/kernels.hpp"

namespace fedgat {

Tensor assemble_D(const NodePackage& pkg, const Tensor& b1, const Tensor& b2) {
    const int dim = 2 * pkg.deg;
    const std::int64_t d = pkg.m1.n_rows;
    if (static_cast<std::int64_t>(b1.size()) != d || static_cast<std::int64_t>(b2.size()) != d)
        throw std::invalid_argument("assemble_D: projection length must equal feature dim");
    auto& kb = kernels::active();
    Tensor out(dim, dim);
    for (std::int64_t s = 0; s < d; ++s) {
        kb.axpy(b1.data[static_cast<std::size_t>(s)], pkg.m1.row_ptr(s), out.data.data(), out.size());
        kb.axpy(b2.data[static_cast<std::size_t>(s)], pkg.m2.row_ptr(s), out.data.data(), out.size());
    }
    return out;
}

MomentSet moments_matrix(const NodePackage& pkg, const Tensor& b1, const Tensor& b2, int degree) {
    if (degree < 0) throw std::invalid_argument("moments: degree must be >= 0");
    const int dim = 2 * pkg.deg;
    const std::int64_t d = pkg.m1.n_rows;
    const Tensor D = assemble_D(pkg, b1, b2);
    auto& kb = kernels::active();

    MomentSet ms;
    ms.e = Tensor(degree + 1, d);
    ms.f = Tensor(degree + 1, 1);
    std::vector<double> w(pkg.k1.data.begin(), pkg.k1.data.end());  // K1'
    std::vector<double> next(static_cast<std::size_t>(dim));
    for (int n = 0; n <= degree; ++n) {
        const double half = (n == 0) ? 0.5 : 1.0;  // K1'K1 = 2|N_i|, K1'K2 = 2*sum h_j'
        ms.f.data[static_cast<std::size_t>(n)] = half * kb.dot(w.data(), pkg.k1.data.data(), w.size());
        double* erow = ms.e.row_ptr(n);
        for (int a = 0; a < dim; ++a) {
            kb.axpy(half * w[static_cast<std::size_t>(a)], pkg.k2.row_ptr(a), erow, static_cast<std::size_t>(d));
        }
        if (n < degree) {
            // w <- w D
            std::fill(next.begin(), next.end(), 0.0);
            for (int a = 0; a < dim; ++a) {
                kb.axpy(w[static_cast<std::size_t>(a)], D.row_ptr(a), next.data(), next.size());
            }
            std::swap(w, next);
        }
    }
    if (!ms.e.all_finite() || !ms.f.all_finite())
        throw std::runtime_error("moments: non-finite moment for node " + std::to_string(pkg.node));
    return ms;
}

MomentSet moments_vector(const VectorNodePackage& pkg, const Tensor& b1, const Tensor& b2, int degree) {
    if (degree < 0) throw std::invalid_argument("moments: degree must be >= 0");
    const int dim = 2 * pkg.deg;
    const std::int64_t d = pkg.m1.n_rows;
    auto& kb = kernels::active();

    // R = (b1'M1 + b2'M2) .* mask4
    std::vector<double> r(static_cast<std::size_t>(dim), 0.0);
    for (std::int64_t s = 0; s < d; ++s) {
        kb.axpy(b1.data[static_cast<std::size_t>(s)], pkg.m1.row_ptr(s), r.data(), r.size());
        kb.axpy(b2.data[static_cast<std::size_t>(s)], pkg.m2.row_ptr(s), r.data(), r.size());
    }
    kb.mul(r.data(), pkg.mask4.data.data(), r.data(), r.size());

    MomentSet ms;
    ms.e = Tensor(degree + 1, d);
    ms.f = Tensor(degree + 1, 1);
    std::vector<double> w(pkg.mask4.data.begin(), pkg.mask4.data.end());
    for (int n = 0; n <= degree; ++n) {
        ms.f.data[static_cast<std::size_t>(n)] = kb.dot(w.data(), pkg.mask4.data.data(), w.size());
        double* erow = ms.e.row_ptr(n);
        for (int a = 0; a < dim; ++a) {
            kb.axpy(w[static_cast<std::size_t>(a)], pkg.k1.row_ptr(a), erow, static_cast<std::size_t>(d));
        }
        if (n < degree) kb.mul(w.data(), r.data(), w.data(), w.size());
    }
    if (!ms.e.all_finite() || !ms.f.all_finite())
        throw std::runtime_error("moments: non-finite moment for node " + std::to_string(pkg.node));
    return ms;
}

const char* variant_name(ForwardVariant v) {
    switch (v) {
        case ForwardVariant::fedgat_matrix: return "fedgat-matrix";
        case ForwardVariant::fedgat_vector: return "fedgat-vector";
        case ForwardVariant::distgat: return "distgat";
        case ForwardVariant::centralized: return "centralized";
    }
    return "?";
}

ForwardVariant parse_variant(const std::string& s) {
    if (s == "fedgat-matrix" || s == "fedgat_matrix") return ForwardVariant::fedgat_matrix;
    if (s == "fedgat-vector" || s == "fedgat_vector") return ForwardVariant::fedgat_vector;
    if (s == "distgat") return ForwardVariant::distgat;
    if (s == "centralized") return ForwardVariant::centralized;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

PowerSeries fit_score_series(Activation psi, double interval_radius, int degree) {
    if (!(interval_radius > 0.0)) throw std::invalid_argument("fit_score_series: radius must be positive");
    const auto f = [psi](double x) { return std::exp(psi(x)); };
    const ChebSeries cs = fit_chebyshev(f, -interval_radius, interval_radius, degree);
    return to_power_series(cs);
}

void ensure_positive_series(const PowerSeries& ps, int grid_size) {
    const double lowest = min_on_grid(ps, grid_size);
    if (!(lowest > 0.0)) {
        throw std::runtime_error("score series positivity margin violated: min over grid = " +
                                 std::to_string(lowest) + "; raise the degree or shrink the interval");
    }
}

namespace {

struct PackageLeaves {
    // matrix variant
    NodeId m1 = -1, m2 = -1, k1_col = -1, k1_row_half = -1, k1_row = -1, k2 = -1;
    // vector variant
    NodeId vm1 = -1, vm2 = -1, vk1 = -1, mask4_row = -1, mask4_col = -1;
};

}  // namespace

NodeId fedgat_first_layer(Tape& tape, const PretrainPackages& pkgs, const PowerSeries& ps,
                          const std::vector<int>& nodes, const std::vector<std::vector<NodeId>>& head_param_ids,
                          const LayerConfig& cfg) {
    const int p = ps.degree();
    const bool matrix = pkgs.variant == PackageVariant::matrix;

    // Shared q row; packages enter once per node and are reused by heads.
    const NodeId q_row = tape.constant(Tensor(1, p + 1, ps.coeffs));
    std::vector<PackageLeaves> leaves(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int node = nodes[i];
        PackageLeaves& pl = leaves[i];
        if (matrix) {
            const auto& entry = pkgs.matrix_entries.at(static_cast<std::size_t>(node));
            if (!entry) throw std::runtime_error("fedgat layer: no package for node " + std::to_string(node));
            const int dim = 2 * entry->deg;
            pl.m1 = tape.constant(entry->m1);
            pl.m2 = tape.constant(entry->m2);
            pl.k1_col = tape.constant(entry->k1);
            pl.k1_row = tape.constant(Tensor(1, dim, entry->k1.data));
            Tensor half(1, dim, entry->k1.data);
            for (auto& v : half.data) v *= 0.5;
            pl.k1_row_half = tape.constant(std::move(half));
            pl.k2 = tape.constant(entry->k2);
        } else {
            const auto& entry = pkgs.vector_entries.at(static_cast<std::size_t>(node));
            if (!entry) throw std::runtime_error("fedgat layer: no package for node " + std::to_string(node));
            const int dim = 2 * entry->deg;
            pl.vm1 = tape.constant(entry->m1);
            pl.vm2 = tape.constant(entry->m2);
            pl.vk1 = tape.constant(entry->k1);
            pl.mask4_row = tape.constant(entry->mask4);
            pl.mask4_col = tape.constant(Tensor(dim, 1, entry->mask4.data));
        }
    }

    std::vector<NodeId> head_outputs;
    std::vector<NodeId> chain;
    chain.reserve(static_cast<std::size_t>(p) + 1);
    std::vector<NodeId> node_rows(nodes.size());
    for (int hd = 0; hd < cfg.heads; ++hd) {
        const auto& ids = head_param_ids[static_cast<std::size_t>(hd)];
        const NodeId w = ids[0], a1 = ids[1], a2 = ids[2];
        const NodeId w_t = tape.transpose(w);                    // in x out
        const NodeId b1 = tape.matmul(tape.transpose(a1), w);    // 1 x in
        const NodeId b2 = tape.matmul(tape.transpose(a2), w);    // 1 x in

        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const PackageLeaves& pl = leaves[i];
            NodeId e_all, f_all;
            if (matrix) {
                const auto& entry = pkgs.matrix_entries[static_cast<std::size_t>(nodes[i])];
                const int dim = 2 * entry->deg;
                const NodeId d_mat =
                    tape.reshape(tape.add(tape.matmul(b1, pl.m1), tape.matmul(b2, pl.m2)), dim, dim);
                chain.clear();
                chain.push_back(pl.k1_row_half);  // n = 0: K1'K1 and K1'K2 double the aggregates
                NodeId wv = pl.k1_row;
                for (int n = 1; n <= p; ++n) {
                    wv = tape.matmul(wv, d_mat);
                    chain.push_back(wv);
                }
                const NodeId stack = tape.concat_rows(chain);  // (p+1) x 2deg
                e_all = tape.matmul(stack, pl.k2);             // (p+1) x d
                f_all = tape.matmul(stack, pl.k1_col);         // (p+1) x 1
            } else {
                const NodeId d_row = tape.add(tape.matmul(b1, pl.vm1), tape.matmul(b2, pl.vm2));
                const NodeId r_row = tape.mul(d_row, pl.mask4_row);
                chain.clear();
                chain.push_back(pl.mask4_row);  // x^0 restricted to the supports
                NodeId wv = pl.mask4_row;
                for (int n = 1; n <= p; ++n) {
                    wv = tape.mul(wv, r_row);
                    chain.push_back(wv);
                }
                const NodeId stack = tape.concat_rows(chain);
                e_all = tape.matmul(stack, pl.vk1);
                f_all = tape.matmul(stack, pl.mask4_col);
            }
            const NodeId q_e = tape.matmul(q_row, e_all);  // 1 x d
            const NodeId q_f = tape.matmul(q_row, f_all);  // 1 x 1
            const double denom = tape.value(q_f).data[0];
            if (!(denom > 0.0)) {
                throw std::runtime_error("fedgat layer: approximate score denominator " + std::to_string(denom) +
                                         " <= 0 at node " + std::to_string(nodes[i]) +
                                         " (series positivity margin violated)");
            }
            node_rows[i] = tape.rowdiv(tape.matmul(q_e, w_t), q_f);  // 1 x out
        }
        const NodeId stacked = nodes.size() == 1 ? node_rows[0] : tape.concat_rows(node_rows);
        head_outputs.push_back(tape.activation(stacked, cfg.phi));
    }
    if (cfg.heads == 1) return head_outputs[0];
    if (cfg.merge == HeadMerge::concat) return tape.concat_cols(head_outputs);
    NodeId acc = head_outputs[0];
    for (std::size_t i = 1; i < head_outputs.size(); ++i) acc = tape.add(acc, head_outputs[i]);
    return tape.scale(acc, 1.0 / static_cast<double>(cfg.heads));
}

namespace {

// Directed pairs whose destinations are restricted to the first n_out rows
// of the node list (owned nodes); sources may be any listed node.
PairList build_pairs_bounded(const std::vector<std::vector<int>>& adj, const std::vector<int>& nodes,
                             int n_out, bool self_loops) {
    std::vector<int> local(adj.size(), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
    std::vector<int> dst;
    std::vector<int> src;
    for (int i = 0; i < n_out; ++i) {
        if (self_loops) {
            dst.push_back(i);
            src.push_back(i);
        }
        for (int nb : adj[static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)])]) {
            const int lj = local[static_cast<std::size_t>(nb)];
            if (lj >= 0) {
                dst.push_back(i);
                src.push_back(lj);
            }
        }
    }
    PairList out;
    out.dst = make_indices(std::move(dst));
    out.src = make_indices(std::move(src));
    out.n_nodes = n_out;
    return out;
}

}  // namespace

MultiForwardResult federated_forward(const Graph& g, const PartitionPlan& plan, ForwardVariant variant,
                                     const PretrainPackages* pkgs, const PowerSeries* ps,
                                     const std::vector<const ModelParams*>& client_params, bool trainable) {
    const int K = plan.n_clients;
    if (static_cast<int>(client_params.size()) != K)
        throw std::invalid_argument("federated_forward: need one parameter set per client");
    if (variant == ForwardVariant::centralized && K != 1)
        throw std::invalid_argument("federated_forward: centralized variant needs a single-client plan");
    const bool fed = variant == ForwardVariant::fedgat_matrix || variant == ForwardVariant::fedgat_vector;
    if (fed && (pkgs == nullptr || ps == nullptr))
        throw std::invalid_argument("federated_forward: fedgat variants need packages and a score series");

    const auto adj = g.adjacency();
    const auto owned = plan.owned_nodes();
    const auto& cfg_model = *client_params[0];
    const int L = static_cast<int>(cfg_model.layer_cfgs.size());

    // 1-hop foreign boundary per client (exchange partners).
    std::vector<std::vector<int>> boundary(static_cast<std::size_t>(K));
    if (fed) {
        for (int k = 0; k < K; ++k) {
            std::set<int> b;
            for (int i : owned[static_cast<std::size_t>(k)]) {
                for (int nb : adj[static_cast<std::size_t>(i)]) {
                    if (plan.owner[static_cast<std::size_t>(nb)] != k) b.insert(nb);
                }
            }
            boundary[static_cast<std::size_t>(k)].assign(b.begin(), b.end());
        }
    }

    MultiForwardResult result;
    result.clients.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        ClientPass& cp = result.clients[static_cast<std::size_t>(k)];
        cp.owned = owned[static_cast<std::size_t>(k)];
        cp.param_ids = param_leaves(cp.tape, *client_params[static_cast<std::size_t>(k)], trainable);
    }

    if (!fed) {
        // Owned induced subgraph all the way through (drops cross edges).
        for (int k = 0; k < K; ++k) {
            ClientPass& cp = result.clients[static_cast<std::size_t>(k)];
            if (cp.owned.empty()) continue;
            const PairList pairs = build_pairs(adj, cp.owned, cfg_model.config.self_loops);
            Tensor feats(static_cast<std::int64_t>(cp.owned.size()), g.feat_dim);
            for (std::size_t i = 0; i < cp.owned.size(); ++i)
                std::copy_n(g.features.row_ptr(cp.owned[i]), g.feat_dim, feats.row_ptr(static_cast<std::int64_t>(i)));
            NodeId h = cp.tape.constant(std::move(feats));
            for (int l = 0; l < L; ++l) {
                h = gat_layer(cp.tape, h, cp.param_ids[static_cast<std::size_t>(l)], l,
                              cfg_model.layer_cfgs[static_cast<std::size_t>(l)], pairs);
            }
            cp.logits = h;
        }
    } else {
        // Layer 1 from packages for owned nodes, then exchange and regular
        // layers over owned + boundary.
        std::vector<NodeId> h_owned(static_cast<std::size_t>(K), -1);
        for (int k = 0; k < K; ++k) {
            ClientPass& cp = result.clients[static_cast<std::size_t>(k)];
            h_owned[static_cast<std::size_t>(k)] =
                fedgat_first_layer(cp.tape, *pkgs, *ps, cp.owned, cp.param_ids[0], cfg_model.layer_cfgs[0]);
        }
        for (int l = 1; l < L; ++l) {
            // Publish layer-l values (computed by owners) and meter the
            // boundary transfer.
            const std::int64_t dim = result.clients[0].tape.value(h_owned[0]).n_cols;
            Tensor published(g.n_nodes, dim);
            for (int k = 0; k < K; ++k) {
                const Tensor& hv = result.clients[static_cast<std::size_t>(k)].tape.value(h_owned[static_cast<std::size_t>(k)]);
                const auto& own = result.clients[static_cast<std::size_t>(k)].owned;
                for (std::size_t i = 0; i < own.size(); ++i)
                    std::copy_n(hv.row_ptr(static_cast<std::int64_t>(i)), dim, published.row_ptr(own[i]));
            }
            for (int k = 0; k < K; ++k)
                result.exchange_scalars += static_cast<std::int64_t>(boundary[static_cast<std::size_t>(k)].size()) * dim;

            for (int k = 0; k < K; ++k) {
                ClientPass& cp = result.clients[static_cast<std::size_t>(k)];
                const auto& bd = boundary[static_cast<std::size_t>(k)];
                std::vector<int> node_list = cp.owned;
                node_list.insert(node_list.end(), bd.begin(), bd.end());
                NodeId h_in = h_owned[static_cast<std::size_t>(k)];
                if (!bd.empty()) {
                    Tensor foreign(static_cast<std::int64_t>(bd.size()), dim);
                    for (std::size_t i = 0; i < bd.size(); ++i)
                        std::copy_n(published.row_ptr(bd[i]), dim, foreign.row_ptr(static_cast<std::int64_t>(i)));
                    const NodeId f_id = cp.tape.constant(std::move(foreign));
                    const NodeId parts[2] = {h_in, f_id};
                    h_in = cp.tape.concat_rows(parts);
                }
                const PairList pairs = build_pairs_bounded(adj, node_list, static_cast<int>(cp.owned.size()),
                                                           cfg_model.config.self_loops);
                h_owned[static_cast<std::size_t>(k)] =
                    gat_layer(cp.tape, h_in, cp.param_ids[static_cast<std::size_t>(l)], l,
                              cfg_model.layer_cfgs[static_cast<std::size_t>(l)], pairs);
            }
        }
        for (int k = 0; k < K; ++k) result.clients[static_cast<std::size_t>(k)].logits = h_owned[static_cast<std::size_t>(k)];
    }

    result.global_logits = Tensor(g.n_nodes, g.n_classes);
    for (int k = 0; k < K; ++k) {
        const ClientPass& cp = result.clients[static_cast<std::size_t>(k)];
        if (cp.logits < 0) continue;
        const Tensor& lv = cp.tape.value(cp.logits);
        for (std::size_t i = 0; i < cp.owned.size(); ++i)
            std::copy_n(lv.row_ptr(static_cast<std::int64_t>(i)), g.n_classes, result.global_logits.row_ptr(cp.owned[i]));
    }
    return result;
}

}  // namespace fedgat
