// Acceptance suite: one check per numbered criterion, each printing a single
// PASS/FAIL line. Run with --criterion N for one criterion or with no
// arguments for the full battery. Criterion 9 is informational (reduced
// Cora); it reports and never gates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "fedgat/bounds.hpp"
#include "fedgat/experiment.hpp"
#include "fedgat/fedgat_layer.hpp"
#include "fedgat/gat.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/graph_io.hpp"
#include "fedgat/package.hpp"
#include "fedgat/train.hpp"

using namespace fedgat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Tensor host_matmul(const Tensor& a, const Tensor& b) {
    Tensor c(a.n_rows, b.n_cols);
    for (std::int64_t i = 0; i < a.n_rows; ++i) {
        for (std::int64_t k = 0; k < a.n_cols; ++k) {
            const double av = a.at(i, k);
            for (std::int64_t j = 0; j < b.n_cols; ++j) c.at(i, j) += av * b.at(k, j);
        }
    }
    return c;
}

double mixed_rel_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / std::max(1.0, std::abs(b.data[i])));
    }
    return worst;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion1_algebra() {
    std::mt19937_64 seeds(20240811);
    const int kInstances = 1000;
    const int kMaxOrder = 24;
    double worst_proj = 0.0, worst_moment = 0.0, worst_cross = 0.0;
    for (int inst = 0; inst < kInstances; ++inst) {
        const int deg = 1 + static_cast<int>(seeds() % 16);  // <= 16
        const int d = 3 + static_cast<int>(seeds() % 6);
        const std::uint64_t pkg_seed = seeds();

        // Star graph: node 0 with `deg` neighbors carrying random features.
        Graph g;
        g.n_nodes = deg + 1;
        g.feat_dim = d;
        g.n_classes = 1;
        g.labels.assign(static_cast<std::size_t>(deg + 1), 0);
        g.train_mask = {0};
        std::mt19937_64 rng(seeds());
        g.features = Tensor::gaussian(deg + 1, d, rng, 0.5);
        g.normalize_features();
        for (int j = 1; j <= deg; ++j) g.edges.emplace_back(0, j);

        std::vector<int> nbrs(static_cast<std::size_t>(deg));
        for (int j = 0; j < deg; ++j) nbrs[static_cast<std::size_t>(j)] = j + 1;

        // Projector algebra on the node's orthonormal set.
        const OrthoSet set = node_ortho_set(pkg_seed, 0, deg);
        const int dim = 2 * deg;
        std::vector<Tensor> projectors;
        for (int j = 0; j < deg; ++j)
            projectors.push_back(build_U(set.u1.row_ptr(j), set.u2.row_ptr(j), dim, set.r));
        for (int j = 0; j < deg; ++j) {
            worst_proj = std::max(worst_proj,
                                  max_abs_diff(host_matmul(projectors[static_cast<std::size_t>(j)],
                                                           projectors[static_cast<std::size_t>(j)]),
                                               projectors[static_cast<std::size_t>(j)]));
            for (int k = 0; k < deg; ++k) {
                if (k == j) continue;
                worst_proj = std::max(
                    worst_proj,
                    host_matmul(projectors[static_cast<std::size_t>(j)], projectors[static_cast<std::size_t>(k)]).max_abs());
            }
        }

        // Moment identities, both variants, against brute force.
        const NodePackage mp = build_node_package(g, 0, nbrs, pkg_seed);
        const VectorNodePackage vp = build_vector_package(g, 0, nbrs, pkg_seed ^ 0xabcdef);
        const Tensor b1 = Tensor::gaussian(d, 1, rng, 0.5);
        const Tensor b2 = Tensor::gaussian(d, 1, rng, 0.5);
        const MomentSet mm = moments_matrix(mp, b1, b2, kMaxOrder);
        const MomentSet mv = moments_vector(vp, b1, b2, kMaxOrder);

        Tensor e_ref(kMaxOrder + 1, d), f_ref(kMaxOrder + 1, 1);
        for (int j : nbrs) {
            double x = 0.0;
            for (int c = 0; c < d; ++c) {
                x += b1.data[static_cast<std::size_t>(c)] * g.features.at(0, c) +
                     b2.data[static_cast<std::size_t>(c)] * g.features.at(j, c);
            }
            double xn = 1.0;
            for (int n = 0; n <= kMaxOrder; ++n) {
                f_ref.data[static_cast<std::size_t>(n)] += xn;
                for (int c = 0; c < d; ++c) e_ref.at(n, c) += xn * g.features.at(j, c);
                xn *= x;
            }
        }
        worst_moment = std::max({worst_moment, mixed_rel_diff(mm.e, e_ref), mixed_rel_diff(mm.f, f_ref),
                                 mixed_rel_diff(mv.e, e_ref), mixed_rel_diff(mv.f, f_ref)});
        worst_cross = std::max({worst_cross, mixed_rel_diff(mm.e, mv.e), mixed_rel_diff(mm.f, mv.f)});
    }
    Outcome out;
    out.pass = worst_proj < 1e-12 && worst_moment < 1e-8 && worst_cross < 1e-8;
    std::ostringstream os;
    os << "projector=" << worst_proj << " moments=" << worst_moment << " cross-variant=" << worst_cross;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2_oracle_equivalence() {
    std::mt19937_64 seeds(7151);
    const PowerSeries ps8 = fit_score_series(Activation::leaky_relu(0.2), 2.0, 8);
    const PowerSeries ps16 = fit_score_series(Activation::leaky_relu(0.2), 2.0, 16);
    const PowerSeries ps24 = fit_score_series(Activation::leaky_relu(0.2), 2.0, 24);

    int bound_failures = 0, monotone_failures = 0;
    double worst_margin = 1e9;
    for (int inst = 0; inst < 50; ++inst) {
        const int n = 32 + static_cast<int>(seeds() % 33);  // <= 64
        const Graph g = generate_random_capped(n, 8, 2, 6, 0.5, seeds());
        GatConfig cfg;
        cfg.in_dim = 6;
        cfg.n_classes = 4;
        cfg.layers = 1;
        cfg.heads = 1;
        cfg.heads_out = 1;
        ModelParams params = ModelParams::init(cfg, seeds());
        params.project_norms();
        const Tensor oracle = gat_forward(g, params);

        const HeadParams& head = params.layers[0][0];
        Tensor b1(6, 1), b2(6, 1);
        for (int c = 0; c < 6; ++c) {
            for (std::int64_t r = 0; r < head.W.n_rows; ++r) {
                b1.data[static_cast<std::size_t>(c)] += head.a1.data[static_cast<std::size_t>(r)] * head.W.at(r, c);
                b2.data[static_cast<std::size_t>(c)] += head.a2.data[static_cast<std::size_t>(r)] * head.W.at(r, c);
            }
        }
        const auto plan = expand_l_hop(g, std::vector<int>(static_cast<std::size_t>(n), 0), 1, 1);
        const PretrainResult pre = pretrain_round(g, plan, PackageVariant::matrix, seeds());
        const auto nbrs = package_neighborhoods(g, &plan, {});

        std::vector<int> nodes(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
        std::map<int, double> deltas;
        double eps16 = 0.0;
        for (const PowerSeries* ps : {&ps8, &ps16, &ps24}) {
            double eps = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j : nbrs[static_cast<std::size_t>(i)]) {
                    double x = 0.0;
                    for (int c = 0; c < 6; ++c) {
                        x += b1.data[static_cast<std::size_t>(c)] * g.features.at(i, c) +
                             b2.data[static_cast<std::size_t>(c)] * g.features.at(j, c);
                    }
                    eps = std::max(eps, std::abs((*ps)(x) - std::exp(cfg.psi(x))));
                }
            }
            Tape tape;
            const auto ids = param_leaves(tape, params, false);
            const NodeId out = fedgat_first_layer(tape, pre.packages, *ps, nodes, ids[0], params.layer_cfgs[0]);
            const Tensor& approx = tape.value(out);
            double delta = 0.0;
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::int64_t c = 0; c < approx.n_cols; ++c) {
                    const double dv = approx.at(i, c) - oracle.at(i, c);
                    s += dv * dv;
                }
                delta = std::max(delta, std::sqrt(s));
            }
            deltas[ps->degree()] = delta;
            if (ps->degree() == 16) {
                eps16 = eps;
                const double bound = 2.0 * eps / (1.0 - eps);  // kappa_phi = 1
                worst_margin = std::min(worst_margin, bound - delta);
                if (delta > bound) ++bound_failures;
            }
        }
        if (deltas[24] > deltas[8] + 1e-15) ++monotone_failures;
        (void)eps16;
    }
    Outcome out;
    out.pass = bound_failures == 0 && monotone_failures == 0;
    std::ostringstream os;
    os << "bound_failures=" << bound_failures << " monotone_failures=" << monotone_failures
       << " worst_margin=" << worst_margin;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3_gradients() {
    std::mt19937_64 seeds(90210);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const Graph g = generate_random_capped(9, 4, 2, 4, 0.5, seeds());
        GatConfig cfg;
        cfg.in_dim = 4;
        cfg.n_classes = 3;
        cfg.layers = 2;
        cfg.hidden_dim = 3;
        cfg.heads = 2;
        cfg.heads_out = 1;
        ModelParams params = ModelParams::init(cfg, seeds());
        params.project_norms();  // keeps every score inside the fitted interval
        const auto plan = expand_l_hop(g, std::vector<int>(9, 0), 1, 2);
        const PretrainResult pre = pretrain_round(g, plan, PackageVariant::matrix, seeds());
        const PowerSeries ps = fit_score_series(cfg.psi, 2.0, 8);

        std::vector<Tensor> flat;
        for (const Tensor* t : params.flat()) flat.push_back(*t);
        auto labels = make_indices(g.labels);
        auto mask = make_indices(g.train_mask);
        const double err = grad_check(
            [&](Tape& tape, const std::vector<NodeId>& ids) {
                std::vector<std::vector<std::vector<NodeId>>> layered;
                std::size_t at = 0;
                for (const auto& layer : params.layers) {
                    std::vector<std::vector<NodeId>> lids;
                    for (std::size_t h = 0; h < layer.size(); ++h) {
                        lids.push_back({ids[at], ids[at + 1], ids[at + 2]});
                        at += 3;
                    }
                    layered.push_back(std::move(lids));
                }
                std::vector<int> nodes(9);
                for (int i = 0; i < 9; ++i) nodes[static_cast<std::size_t>(i)] = i;
                NodeId h = fedgat_first_layer(tape, pre.packages, ps, nodes, layered[0], params.layer_cfgs[0]);
                const PairList pairs = build_pairs(g.adjacency(), nodes, true);
                h = gat_layer(tape, h, layered[1], 1, params.layer_cfgs[1], pairs);
                return tape.softmax_cross_entropy(h, labels, mask);
            },
            flat, 1e-5);
        worst = std::max(worst, err);
    }
    Outcome out;
    out.pass = worst < 1e-4;
    std::ostringstream os;
    os << "max_rel_error=" << worst;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4_bounds() {
    VerifyConfig cfg;
    cfg.coeff_instances = 1000;
    cfg.propagation_instances = 200;
    const VerifyReport report = run_verification(cfg);
    Outcome out;
    bool truncation_ok = true;
    for (const auto& probe : report.truncation) {
        if (probe.admissible && !probe.holds) truncation_ok = false;
    }
    out.pass = report.coeff_bound.genuine_violations == 0 && report.propagation.layer1_violations == 0 &&
               report.propagation.score_violations == 0 && report.propagation.coeff_violations == 0 &&
               report.propagation.embedding_violations == 0 && report.propagation.skipped_hypothesis == 0 &&
               report.exp_linear.violations == 0 && report.exp_linear.points == 10000 && truncation_ok;
    std::ostringstream os;
    os << "coeff_genuine=" << report.coeff_bound.genuine_violations
       << " (attributed=" << report.coeff_bound.attributed_violations << ")"
       << " prop_violations=" << report.propagation.score_violations + report.propagation.coeff_violations +
                           report.propagation.embedding_violations
       << " exp_linear=" << report.exp_linear.violations << " truncation_ok=" << truncation_ok;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5_communication() {
    // Closed-form worked example plus exact ledger recount.
    bool exact = package_scalar_count(2, 3, PackageVariant::matrix) == 112 &&
                 package_scalar_count(2, 3, PackageVariant::vector) == 44;
    {
        const Graph g = generate_sbm(60, 3, 0.15, 0.02, 6, 0.4, 5);
        const auto owner = dirichlet_partition(g, 4, 1.0, 6);
        const auto plan = expand_l_hop(g, owner, 4, 2);
        for (PackageVariant variant : {PackageVariant::matrix, PackageVariant::vector}) {
            const PretrainResult pre = pretrain_round(g, plan, variant, 7);
            std::int64_t recount = 0;
            for (int k = 0; k < plan.n_clients; ++k) {
                for (int node : plan.client_nodes[static_cast<std::size_t>(k)]) {
                    if (variant == PackageVariant::matrix) {
                        const auto& e = pre.packages.matrix_entries[static_cast<std::size_t>(node)];
                        if (e)
                            recount += static_cast<std::int64_t>(e->m1.size() + e->m2.size() + e->k1.size() +
                                                                 e->k2.size());
                    } else {
                        const auto& e = pre.packages.vector_entries[static_cast<std::size_t>(node)];
                        if (e)
                            recount += static_cast<std::int64_t>(e->m1.size() + e->m2.size() + e->k1.size() +
                                                                 e->mask4.size() + e->k3.size());
                    }
                }
            }
            exact = exact && recount == pre.ledger.download_total;
        }
    }

    // Trend study on a fixed SBM graph.
    const Graph g = generate_sbm(600, 4, 0.02, 0.002, 32, 0.6, 4242);
    const std::vector<int> clients{2, 5, 10, 20};
    int monotone_failures = 0;
    int iid_wins = 0;
    const int kSeeds = 20;
    for (int s = 0; s < kSeeds; ++s) {
        std::int64_t prev = -1;
        std::int64_t iid10 = 0, skew10 = 0;
        for (int K : clients) {
            const auto plan = expand_l_hop(g, dirichlet_partition(g, K, 10000.0, 1000 + s), K, 2);
            const CommLedger ledger = comm_ledger_only(g, plan, PackageVariant::matrix, {});
            if (prev >= 0 && ledger.download_total < prev) ++monotone_failures;
            prev = ledger.download_total;
            if (K == 10) iid10 = ledger.download_total;
        }
        const auto plan_skew = expand_l_hop(g, dirichlet_partition(g, 10, 1.0, 1000 + s), 10, 2);
        skew10 = comm_ledger_only(g, plan_skew, PackageVariant::matrix, {}).download_total;
        if (iid10 > skew10) ++iid_wins;
    }

    // Vector beats matrix beyond the (sub-unit) crossover degree, and the
    // degree-scaling exponents land near 2 and 1.
    bool vector_below = true;
    {
        const auto plan = expand_l_hop(g, dirichlet_partition(g, 10, 10000.0, 77), 10, 2);
        const auto lm = comm_ledger_only(g, plan, PackageVariant::matrix, {});
        const auto lv = comm_ledger_only(g, plan, PackageVariant::vector, {});
        vector_below = lv.download_total < lm.download_total;
    }
    std::vector<double> log_deg, log_m, log_v;
    for (int D : {4, 8, 16, 32}) {
        const Graph ring = generate_circulant(128, D, 16, 3);
        const auto plan = expand_l_hop(ring, std::vector<int>(128, 0), 1, 2);
        PackageOptions opts;
        opts.self_loops = false;
        log_deg.push_back(std::log(static_cast<double>(D)));
        log_m.push_back(std::log(static_cast<double>(comm_ledger_only(ring, plan, PackageVariant::matrix, opts).download_total)));
        log_v.push_back(std::log(static_cast<double>(comm_ledger_only(ring, plan, PackageVariant::vector, opts).download_total)));
    }
    const auto slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double num = 0, den = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            num += (xs[i] - mx) * (ys[i] - my);
            den += (xs[i] - mx) * (xs[i] - mx);
        }
        return num / den;
    };
    const double slope_m = slope(log_deg, log_m);
    const double slope_v = slope(log_deg, log_v);

    Outcome out;
    out.pass = exact && monotone_failures == 0 && iid_wins >= 18 && vector_below &&
               std::abs(slope_m - 2.0) <= 0.25 && std::abs(slope_v - 1.0) <= 0.15;
    std::ostringstream os;
    os << "exact=" << exact << " monotone_failures=" << monotone_failures << " iid_wins=" << iid_wins << "/20"
       << " vector_below=" << vector_below << " slopes=" << slope_m << "," << slope_v;
    out.detail = os.str();
    return out;
}

// --------------------------------------------------------- criteria 6 and 7

struct BenchmarkResult {
    double mean_acc = 0.0;
    std::vector<double> accs;
};

Graph benchmark_graph() { return generate_sbm(600, 4, 0.03, 0.004, 32, 0.45, 600600); }

// Shared by every variant in the trend studies. Full-batch SGD with one
// local pass per round keeps the aggregate update close to a global
// gradient step; size-weighted averaging undoes the per-node reweighting
// that uniform averaging introduces when clients own very different
// training-node counts; projection (applied to every variant alike) pins
// the score arguments inside the fitted interval at every probed degree.
TrainConfig benchmark_train_config(ForwardVariant variant, int degree, std::uint64_t seed) {
    TrainConfig tc;
    tc.rounds = 80;
    tc.local_epochs = 1;
    tc.variant = variant;
    tc.degree = degree;
    tc.seed = seed;
    tc.opt.kind = OptimizerConfig::Kind::sgd;
    tc.opt.lr = 1.0;
    tc.opt.weight_decay = 0.001;
    tc.norm_projection = true;
    tc.weighted_average = true;
    tc.model.layers = 2;
    tc.model.hidden_dim = 8;
    tc.model.heads = 8;
    tc.model.heads_out = 1;
    return tc;
}

double best_val_test_acc(const TrainHistory& history) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.rounds.size(); ++i) {
        if (history.rounds[i].val_acc > history.rounds[best].val_acc) best = i;
    }
    return history.rounds[best].test_acc;
}

BenchmarkResult run_benchmark(const Graph& g, ForwardVariant variant, int K, double beta, int degree,
                              int n_seeds) {
    BenchmarkResult res;
    for (int s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(s);
        TrainConfig tc = benchmark_train_config(variant, degree, seed);
        tc.model.in_dim = g.feat_dim;
        tc.model.n_classes = g.n_classes;
        const int clients = variant == ForwardVariant::centralized ? 1 : K;
        const auto owner = dirichlet_partition(g, clients, beta, seed);
        const auto plan = expand_l_hop(g, owner, clients, 2);
        const bool fed = variant == ForwardVariant::fedgat_matrix || variant == ForwardVariant::fedgat_vector;
        TrainResult tr;
        if (fed) {
            const PackageVariant pv = variant == ForwardVariant::fedgat_matrix ? PackageVariant::matrix
                                                                               : PackageVariant::vector;
            const PretrainResult pre = pretrain_round(g, plan, pv, seed);
            tr = train(tc, g, plan, &pre.packages);
        } else {
            tr = train(tc, g, plan, nullptr);
        }
        res.accs.push_back(best_val_test_acc(tr.history));
    }
    for (double a : res.accs) res.mean_acc += a;
    res.mean_acc /= static_cast<double>(res.accs.size());
    return res;
}

Outcome criterion6_training_trend() {
    const Graph g = benchmark_graph();
    const int kSeeds = 5;
    const BenchmarkResult central = run_benchmark(g, ForwardVariant::centralized, 1, 10000.0, 16, kSeeds);
    const BenchmarkResult fed_iid = run_benchmark(g, ForwardVariant::fedgat_matrix, 10, 10000.0, 16, kSeeds);
    const BenchmarkResult fed_skew = run_benchmark(g, ForwardVariant::fedgat_matrix, 10, 1.0, 16, kSeeds);
    const BenchmarkResult dist = run_benchmark(g, ForwardVariant::distgat, 10, 10000.0, 16, kSeeds);

    const bool close_to_central = fed_iid.mean_acc >= central.mean_acc - 0.02;
    const bool dist_below = dist.mean_acc <= fed_iid.mean_acc - 0.03;
    const bool beta_flat = std::abs(fed_iid.mean_acc - fed_skew.mean_acc) <= 0.02;
    Outcome out;
    out.pass = close_to_central && dist_below && beta_flat;
    std::ostringstream os;
    os << "central=" << central.mean_acc << " fedgat_iid=" << fed_iid.mean_acc
       << " fedgat_noniid=" << fed_skew.mean_acc << " distgat=" << dist.mean_acc;
    out.detail = os.str();
    return out;
}

Outcome criterion7_degree_robustness() {
    const Graph g = benchmark_graph();
    const int kSeeds = 5;
    std::map<int, double> means;
    for (int p : {8, 16, 24}) {
        means[p] = run_benchmark(g, ForwardVariant::fedgat_matrix, 10, 10000.0, p, kSeeds).mean_acc;
    }
    double lo = 1.0, hi = 0.0;
    for (const auto& [p, acc] : means) {
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
    }
    Outcome out;
    out.pass = hi - lo <= 0.03;
    std::ostringstream os;
    os << "acc(p=8)=" << means[8] << " acc(p=16)=" << means[16] << " acc(p=24)=" << means[24]
       << " spread=" << hi - lo;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 8

std::map<std::string, std::string> read_dir_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "timings.csv") continue;  // wall time, documented exclusion
        std::ifstream in(entry.path(), std::ios::binary);
        out[fs::relative(entry.path(), dir).string()] =
            std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    return out;
}

Outcome criterion8_determinism() {
    const fs::path root = fs::temp_directory_path() / "fedgat_acceptance_c8";
    fs::remove_all(root);

    ExperimentConfig cfg;
    cfg.dataset.kind = "sbm";
    cfg.dataset.n = 80;
    cfg.dataset.classes = 3;
    cfg.dataset.p_in = 0.1;
    cfg.dataset.p_out = 0.02;
    cfg.dataset.feat_dim = 8;
    cfg.dataset.noise = 0.5;
    cfg.dataset.seed = 99;
    cfg.clients = 4;
    cfg.beta = 1.0;
    cfg.train.rounds = 3;
    cfg.train.local_epochs = 2;
    cfg.train.variant = ForwardVariant::fedgat_matrix;
    cfg.train.degree = 8;
    cfg.train.model.hidden_dim = 4;
    cfg.train.model.heads = 2;
    cfg.repeats = 2;

    bool all_equal = true;
    std::string mismatch;
    for (const char* phase : {"partition", "pretrain", "train"}) {
        for (int run = 0; run < 2; ++run) {
            ExperimentConfig local = cfg;
            local.out_dir = (root / (std::string(phase) + "_" + std::to_string(run))).string();
            if (std::strcmp(phase, "partition") == 0) {
                run_partition(local);
            } else if (std::strcmp(phase, "pretrain") == 0) {
                run_pretrain(local);
            } else {
                // On-the-fly packages; exercises the full pipeline.
                run_train(local, "");
            }
        }
        const auto a = read_dir_files(root / (std::string(phase) + "_0"));
        const auto b = read_dir_files(root / (std::string(phase) + "_1"));
        if (a.size() < 2) {
            all_equal = false;
            mismatch = std::string(phase) + " produced no artifacts";
        } else if (a != b) {
            all_equal = false;
            mismatch = phase;
        }
    }
    fs::remove_all(root);
    Outcome out;
    out.pass = all_equal;
    out.detail = all_equal ? "partition/pretrain/train outputs byte-identical across reruns"
                           : ("mismatch in phase " + mismatch);
    return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9_cora_optional() {
    const char* path = std::getenv("FEDGAT_CORA_BUNDLE");
    const std::string bundle = path != nullptr ? path : "data/cora64.json";
    Outcome out;
    if (!fs::exists(bundle)) {
        out.pass = true;
        out.skipped = true;
        out.detail = "no reduced-dimension Cora bundle at " + bundle + " (set FEDGAT_CORA_BUNDLE); skipped";
        return out;
    }
    const Graph g = load_graph_json(bundle);
    const int kSeeds = 3;
    const BenchmarkResult central = run_benchmark(g, ForwardVariant::centralized, 1, 10000.0, 16, kSeeds);
    const BenchmarkResult fed = run_benchmark(g, ForwardVariant::fedgat_matrix, 10, 10000.0, 16, kSeeds);
    out.pass = true;  // reported, never gates
    std::ostringstream os;
    os << "central=" << central.mean_acc << " fedgat=" << fed.mean_acc
       << " gap=" << central.mean_acc - fed.mean_acc << " (within 0.05 target: "
       << (std::abs(central.mean_acc - fed.mean_acc) <= 0.05 ? "yes" : "no") << ")";
    out.detail = os.str();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries{
        {1, "algebraic identities (projectors, moment chains, variant agreement)", criterion1_algebra},
        {2, "oracle equivalence within the layer-1 error bound", criterion2_oracle_equivalence},
        {3, "reverse-mode gradients vs central finite differences", criterion3_gradients},
        {4, "error-bound suite (coefficients, propagation, exp inequality, truncation)", criterion4_bounds},
        {5, "communication accounting and scaling trends", criterion5_communication},
        {6, "desk benchmark training trends", criterion6_training_trend},
        {7, "accuracy robustness across approximation degrees", criterion7_degree_robustness},
        {8, "bit-identical reruns under fixed seeds", criterion8_determinism},
        {9, "reduced-dimension Cora report (optional)", criterion9_cora_optional},
    };

    bool all_pass = true;
    for (const auto& entry : entries) {
        if (only != 0 && entry.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entry.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = out.skipped ? "SKIP" : (out.pass ? "PASS" : "FAIL");
        std::cout << "criterion " << entry.id << " [" << tag << "] " << entry.name << ": " << out.detail
                  << " (" << secs << "s)" << std::endl;
        if (!out.pass && entry.id != 9) all_pass = false;
    }
    return all_pass ? 0 : 1;
}
