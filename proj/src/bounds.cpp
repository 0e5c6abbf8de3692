#include "fedgat/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fedgat/fedgat_layer.hpp"
#include "fedgat/gat.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/package.hpp"

namespace fedgat {

using nlohmann::json;

int score_smoothness_order(Activation psi) {
    switch (psi.kind) {
        case Activation::Kind::identity:
        case Activation::Kind::exp:
            return 8;  // smooth composition; any probed order is admissible
        case Activation::Kind::leaky_relu:
            return psi.param == 1.0 ? 8 : 1;  // slope kink breaks f' continuity
        case Activation::Kind::elu:
            return psi.param == 1.0 ? 2 : 1;  // alpha=1 keeps f' continuous, f'' jumps
    }
    return 1;
}

namespace {

Tensor random_unit_capped(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.2, 1.0);
    Tensor v(dim, 1);
    double norm = 0.0;
    for (auto& x : v.data) {
        x = gauss(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    const double target = scale(rng);
    for (auto& x : v.data) x = x * target / (norm > 0 ? norm : 1.0);
    return v;
}

HeadParams random_projected_head(int out, int in, std::mt19937_64& rng) {
    HeadParams head;
    head.W = Tensor::gaussian(out, in, rng, std::sqrt(2.0 / static_cast<double>(in + out)));
    head.a1 = Tensor::gaussian(out, 1, rng, std::sqrt(1.0 / out));
    head.a2 = Tensor::gaussian(out, 1, rng, std::sqrt(1.0 / out));
    const double sigma = spectral_norm(head.W);
    if (sigma > 1.0) {
        for (auto& v : head.W.data) v /= sigma;
    }
    for (Tensor* a : {&head.a1, &head.a2}) {
        const double norm = a->l2_norm();
        if (norm > 1.0) {
            for (auto& v : a->data) v /= norm;
        }
    }
    return head;
}

// b = W'a as a plain vector.
Tensor projection_vector(const HeadParams& head, const Tensor& a) {
    Tensor b(head.W.n_cols, 1);
    for (std::int64_t r = 0; r < head.W.n_rows; ++r) {
        const double* row = head.W.row_ptr(r);
        for (std::int64_t c = 0; c < head.W.n_cols; ++c)
            b.data[static_cast<std::size_t>(c)] += a.data[static_cast<std::size_t>(r)] * row[c];
    }
    return b;
}

// One regular GAT layer evaluated directly; neighborhoods include self.
struct HostLayerOut {
    Tensor h_next;                            // m x out
    std::vector<std::vector<double>> scores;  // per node, per neighbor
    std::vector<std::vector<double>> coeffs;
};

HostLayerOut host_gat_layer(const Tensor& h, const HeadParams& head, Activation psi, Activation phi,
                            const std::vector<std::vector<int>>& nbrs) {
    const std::int64_t m = h.n_rows;
    const std::int64_t out = head.W.n_rows;
    // z = h W'
    Tensor z(m, out);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t r = 0; r < out; ++r) {
            double s = 0.0;
            const double* wrow = head.W.row_ptr(r);
            const double* hrow = h.row_ptr(i);
            for (std::int64_t c = 0; c < head.W.n_cols; ++c) s += wrow[c] * hrow[c];
            z.at(i, r) = s;
        }
    }
    std::vector<double> s1(static_cast<std::size_t>(m)), s2(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        double d1 = 0.0, d2 = 0.0;
        for (std::int64_t r = 0; r < out; ++r) {
            d1 += head.a1.data[static_cast<std::size_t>(r)] * z.at(i, r);
            d2 += head.a2.data[static_cast<std::size_t>(r)] * z.at(i, r);
        }
        s1[static_cast<std::size_t>(i)] = d1;
        s2[static_cast<std::size_t>(i)] = d2;
    }
    HostLayerOut res;
    res.h_next = Tensor(m, out);
    res.scores.resize(static_cast<std::size_t>(m));
    res.coeffs.resize(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        const auto& nb = nbrs[static_cast<std::size_t>(i)];
        auto& sc = res.scores[static_cast<std::size_t>(i)];
        for (int j : nb) sc.push_back(std::exp(psi(s1[static_cast<std::size_t>(i)] + s2[static_cast<std::size_t>(j)])));
        res.coeffs[static_cast<std::size_t>(i)] = attention_coeffs(sc);
        double* hrow = res.h_next.row_ptr(i);
        for (std::size_t t = 0; t < nb.size(); ++t) {
            const double alpha = res.coeffs[static_cast<std::size_t>(i)][t];
            const double* zj = z.row_ptr(nb[t]);
            for (std::int64_t r = 0; r < out; ++r) hrow[r] += alpha * zj[r];
        }
        for (std::int64_t r = 0; r < out; ++r) hrow[r] = phi(hrow[r]);
    }
    return res;
}

// FedGAT first layer via the moment chain, plus measured score error.
struct HostFedOut {
    Tensor h_next;
    double score_error_abs = 0.0;  // max |ps(x) - exp(psi(x))|
};

HostFedOut host_fed_layer(const Graph& g, const std::vector<std::vector<int>>& nbrs, const HeadParams& head,
                          Activation psi, Activation phi, const PowerSeries& ps, std::uint64_t pkg_seed) {
    const Tensor b1 = projection_vector(head, head.a1);
    const Tensor b2 = projection_vector(head, head.a2);
    const std::int64_t out = head.W.n_rows;
    HostFedOut res;
    res.h_next = Tensor(g.n_nodes, out);
    ClampingEvaluator eval{ps};
    const int p = ps.degree();
    for (int i = 0; i < g.n_nodes; ++i) {
        const auto& nb = nbrs[static_cast<std::size_t>(i)];
        const NodePackage pkg = build_node_package(g, i, nb, pkg_seed);
        const MomentSet ms = moments_matrix(pkg, b1, b2, p);
        std::vector<double> qe(static_cast<std::size_t>(g.feat_dim), 0.0);
        double qf = 0.0;
        for (int n = 0; n <= p; ++n) {
            const double q = ps.coeffs[static_cast<std::size_t>(n)];
            qf += q * ms.f.data[static_cast<std::size_t>(n)];
            const double* erow = ms.e.row_ptr(n);
            for (int c = 0; c < g.feat_dim; ++c) qe[static_cast<std::size_t>(c)] += q * erow[c];
        }
        double* hrow = res.h_next.row_ptr(i);
        for (std::int64_t r = 0; r < out; ++r) {
            double s = 0.0;
            const double* wrow = head.W.row_ptr(r);
            for (int c = 0; c < g.feat_dim; ++c) s += wrow[c] * qe[static_cast<std::size_t>(c)];
            hrow[r] = phi(s / qf);
        }
        // Diagnostic-side score error over this neighborhood; the clamping
        // evaluator counts any argument escaping the fitted interval.
        for (int j : nb) {
            double x = 0.0;
            for (int c = 0; c < g.feat_dim; ++c) {
                x += b1.data[static_cast<std::size_t>(c)] * g.features.at(i, c) +
                     b2.data[static_cast<std::size_t>(c)] * g.features.at(j, c);
            }
            res.score_error_abs = std::max(res.score_error_abs, std::abs(eval(x) - std::exp(psi(x))));
        }
    }
    return res;
}

double max_row_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < a.n_rows; ++i) {
        double s = 0.0;
        for (std::int64_t c = 0; c < a.n_cols; ++c) {
            const double dlt = a.at(i, c) - b.at(i, c);
            s += dlt * dlt;
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

}  // namespace

VerifyReport run_verification(const VerifyConfig& cfg) {
    VerifyReport report;
    report.config = cfg;
    const double radius = cfg.interval_radius;
    const auto f = [&cfg](double x) { return std::exp(cfg.psi(x)); };

    // Truncation bound vs measured error, per probed smoothness order.
    const int admissible_up_to = score_smoothness_order(cfg.psi);
    PowerSeries ps_default;
    for (int degree : cfg.probe_degrees) {
        const PowerSeries ps = to_power_series(fit_chebyshev(f, -radius, radius, degree));
        if (degree == cfg.degree) ps_default = ps;
        ScoreErrorResult se;
        se.degree = degree;
        se.grid_max_error = empirical_max_error(f, ps, cfg.error_grid);
        report.score_errors.push_back(se);
        if (degree == cfg.degree) {
            for (int k : {1, 2}) {
                if (degree <= k) continue;
                TruncationProbe probe;
                probe.k = k;
                probe.variation = numeric_total_variation(f, -radius, radius, k, cfg.error_grid);
                probe.bound = truncation_bound(probe.variation, k, degree);
                probe.empirical = se.grid_max_error;
                probe.admissible = k <= admissible_up_to;
                probe.holds = probe.bound >= probe.empirical;
                report.truncation.push_back(probe);
            }
        }
    }
    if (ps_default.coeffs.empty()) ps_default = to_power_series(fit_chebyshev(f, -radius, radius, cfg.degree));

    // Attention-coefficient inequality on random projected neighborhoods,
    // plus per-instance score errors across the probed degrees.
    {
        std::vector<PowerSeries> probe_series;
        for (int degree : cfg.probe_degrees)
            probe_series.push_back(to_power_series(fit_chebyshev(f, -radius, radius, degree)));

        std::mt19937_64 rng(cfg.seed * 31 + 1);
        std::uniform_int_distribution<int> deg_dist(2, 8);
        std::uniform_int_distribution<int> dim_dist(4, 12);
        CoeffBoundResult& t3 = report.coeff_bound;
        t3.instances = cfg.coeff_instances;
        t3.worst_margin = std::numeric_limits<double>::infinity();
        for (int inst = 0; inst < cfg.coeff_instances; ++inst) {
            const int deg = deg_dist(rng);
            const int d = dim_dist(rng);
            const int out = dim_dist(rng);
            const HeadParams head = random_projected_head(out, d, rng);
            const Tensor b1 = projection_vector(head, head.a1);
            const Tensor b2 = projection_vector(head, head.a2);
            const Tensor h_i = random_unit_capped(d, rng);
            std::vector<double> e, e_hat, xs;
            double b1hi = 0.0;
            for (int c = 0; c < d; ++c) b1hi += b1.data[static_cast<std::size_t>(c)] * h_i.data[static_cast<std::size_t>(c)];
            for (int j = 0; j < deg; ++j) {
                const Tensor h_j = random_unit_capped(d, rng);
                double x = b1hi;
                for (int c = 0; c < d; ++c) x += b2.data[static_cast<std::size_t>(c)] * h_j.data[static_cast<std::size_t>(c)];
                xs.push_back(x);
                e.push_back(std::exp(cfg.psi(x)));
                e_hat.push_back(ps_default(x));
            }
            for (std::size_t pd = 0; pd < probe_series.size(); ++pd) {
                double inst_eps = 0.0;
                for (std::size_t j = 0; j < xs.size(); ++j)
                    inst_eps = std::max(inst_eps, std::abs(probe_series[pd](xs[j]) - e[j]));
                report.score_errors[pd].instance_max_error =
                    std::max(report.score_errors[pd].instance_max_error, inst_eps);
            }
            double eps = 0.0, min_score = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < e.size(); ++j) {
                eps = std::max(eps, std::abs(e_hat[j] - e[j]));
                min_score = std::min(min_score, e[j]);
            }
            if (!(eps < 1.0)) continue;  // inequality undefined past eps=1
            const auto alpha = attention_coeffs(e);
            const auto alpha_hat = attention_coeffs(e_hat);
            const double factor = 2.0 * eps / (1.0 - eps);
            t3.edges_checked += deg;
            for (std::size_t j = 0; j < e.size(); ++j) {
                const double lhs = std::abs(alpha_hat[j] - alpha[j]);
                const double rhs = alpha[j] * factor;
                t3.worst_margin = std::min(t3.worst_margin, rhs - lhs);
                if (lhs > rhs) {
                    if (min_score < 1.0) {
                        ++t3.attributed_violations;
                    } else {
                        ++t3.genuine_violations;
                    }
                    if (t3.violation_dumps.size() < 16) {
                        std::ostringstream os;
                        os.precision(17);
                        os << "instance=" << inst << " edge=" << j << " eps=" << eps << " min_score=" << min_score
                           << " lhs=" << lhs << " rhs=" << rhs << " scores=[";
                        for (double s : e) os << s << ",";
                        os << "] approx=[";
                        for (double s : e_hat) os << s << ",";
                        os << "]";
                        t3.violation_dumps.push_back(os.str());
                    }
                }
            }
        }
    }

    // Layer-error propagation on two-layer instances.
    {
        std::mt19937_64 rng(cfg.seed * 97 + 5);
        std::uniform_int_distribution<int> n_dist(8, 20);
        std::uniform_int_distribution<int> d_dist(4, 8);
        PropagationResult& t45 = report.propagation;
        t45.instances = cfg.propagation_instances;
        t45.worst_layer1_margin = std::numeric_limits<double>::infinity();
        t45.worst_score_margin = std::numeric_limits<double>::infinity();
        t45.worst_coeff_margin = std::numeric_limits<double>::infinity();
        t45.worst_embedding_margin = std::numeric_limits<double>::infinity();
        const double kappa_phi = cfg.phi.lipschitz();
        const double kappa_psi = cfg.psi.lipschitz();
        const std::vector<double> c_probe{1.1, 1.5, 2.0, std::numbers::e, 5.0};

        for (int inst = 0; inst < cfg.propagation_instances; ++inst) {
            const int n = n_dist(rng);
            const int d = d_dist(rng);
            const int hidden = d_dist(rng);
            Graph g = generate_random_capped(n, 5, 2, d, 0.6, rng());
            const HeadParams head1 = random_projected_head(hidden, d, rng);
            const HeadParams head2 = random_projected_head(hidden, hidden, rng);

            // Model-level neighborhoods (self-loops on).
            auto adj = g.adjacency();
            std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                nbrs[static_cast<std::size_t>(i)] = adj[static_cast<std::size_t>(i)];
                nbrs[static_cast<std::size_t>(i)].push_back(i);
                std::sort(nbrs[static_cast<std::size_t>(i)].begin(), nbrs[static_cast<std::size_t>(i)].end());
            }

            const HostLayerOut l1 = host_gat_layer(g.features, head1, cfg.psi, cfg.phi, nbrs);
            const HostFedOut f1 = host_fed_layer(g, nbrs, head1, cfg.psi, cfg.phi, ps_default, rng());
            const double eps1 = f1.score_error_abs;
            const double delta1 = max_row_diff(l1.h_next, f1.h_next);

            // Layer-1 embedding bound (absolute-error form).
            const double t4_rhs = 2.0 * kappa_phi * eps1 / (1.0 - eps1);
            t45.worst_layer1_margin = std::min(t45.worst_layer1_margin, t4_rhs - delta1);
            if (delta1 > t4_rhs) ++t45.layer1_violations;

            // Hypothesis: delta <= log(c) / (2 kappa_psi) for some probed c.
            double c = 0.0;
            for (double candidate : c_probe) {
                if (delta1 <= std::log(candidate) / (2.0 * kappa_psi)) {
                    c = candidate;
                    break;
                }
            }
            if (c == 0.0) {
                ++t45.skipped_hypothesis;
                continue;
            }

            const HostLayerOut l2 = host_gat_layer(l1.h_next, head2, cfg.psi, cfg.phi, nbrs);
            const HostLayerOut l2_hat = host_gat_layer(f1.h_next, head2, cfg.psi, cfg.phi, nbrs);

            // Relative score error at layer 2 (the quantity the propagation
            // argument actually controls).
            double eps2_rel = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto& sa = l2.scores[static_cast<std::size_t>(i)];
                const auto& sb = l2_hat.scores[static_cast<std::size_t>(i)];
                for (std::size_t t = 0; t < sa.size(); ++t)
                    eps2_rel = std::max(eps2_rel, std::abs(sb[t] - sa[t]) / sa[t]);
            }
            const double eq15_rhs = 2.0 * c * kappa_psi * delta1;
            t45.worst_score_margin = std::min(t45.worst_score_margin, eq15_rhs - eps2_rel);
            if (eps2_rel > eq15_rhs) ++t45.score_violations;

            const double coeff_factor = 2.0 * eps2_rel / (1.0 - eps2_rel);
            for (int i = 0; i < n; ++i) {
                const auto& ca = l2.coeffs[static_cast<std::size_t>(i)];
                const auto& cb = l2_hat.coeffs[static_cast<std::size_t>(i)];
                for (std::size_t t = 0; t < ca.size(); ++t) {
                    const double lhs = std::abs(cb[t] - ca[t]);
                    const double rhs = ca[t] * coeff_factor;
                    t45.worst_coeff_margin = std::min(t45.worst_coeff_margin, rhs - lhs);
                    if (lhs > rhs) ++t45.coeff_violations;
                }
            }

            const double delta2 = max_row_diff(l2.h_next, l2_hat.h_next);
            const double eq17_rhs = kappa_phi * (coeff_factor + delta1);
            t45.worst_embedding_margin = std::min(t45.worst_embedding_margin, eq17_rhs - delta2);
            if (delta2 > eq17_rhs) ++t45.embedding_violations;

            // Per-layer growth factor from the appendix discussion, with the
            // finite-eps correction factored out.
            if (delta1 > 0.0) {
                const double growth_rhs = kappa_phi * (1.0 + 4.0 * c * kappa_psi) / (1.0 - eps2_rel);
                if (delta2 / delta1 > growth_rhs) ++t45.growth_violations;
            }
        }
    }

    // exp(x) - 1 <= c x on 0 <= x <= log(c).
    {
        ExpLinearResult& lm = report.exp_linear;
        const int side = cfg.exp_grid_side;
        for (int ci = 0; ci < side; ++ci) {
            const double c = 1.0 + 9.0 * (static_cast<double>(ci) + 1.0) / static_cast<double>(side);
            for (int xi = 0; xi < side; ++xi) {
                const double x = std::log(c) * static_cast<double>(xi) / static_cast<double>(side - 1);
                ++lm.points;
                if (std::exp(x) - 1.0 > c * x + 1e-15) ++lm.violations;
            }
        }
    }

    // Ledger exactness and degree scaling.
    {
        AccountingResult& t1 = report.accounting;
        t1.example_matrix_count = package_scalar_count(2, 3, PackageVariant::matrix);
        t1.example_vector_count = package_scalar_count(2, 3, PackageVariant::vector);

        // Exactness: recount scalars from actually built packages.
        Graph g = generate_sbm(36, 3, 0.3, 0.05, 6, 0.3, cfg.seed + 11);
        auto owner = dirichlet_partition(g, 3, 1.0, cfg.seed + 12);
        auto plan = expand_l_hop(g, owner, 3, 2);
        for (PackageVariant variant : {PackageVariant::matrix, PackageVariant::vector}) {
            const PretrainResult pre = pretrain_round(g, plan, variant, cfg.seed + 13);
            std::int64_t recounted = 0;
            for (int k = 0; k < plan.n_clients; ++k) {
                for (int node : plan.client_nodes[static_cast<std::size_t>(k)]) {
                    if (variant == PackageVariant::matrix) {
                        const auto& e = pre.packages.matrix_entries[static_cast<std::size_t>(node)];
                        if (e) recounted += static_cast<std::int64_t>(e->m1.size() + e->m2.size() + e->k1.size() + e->k2.size());
                    } else {
                        const auto& e = pre.packages.vector_entries[static_cast<std::size_t>(node)];
                        if (e)
                            recounted += static_cast<std::int64_t>(e->m1.size() + e->m2.size() + e->k1.size() +
                                                                   e->mask4.size() + e->k3.size());
                    }
                }
            }
            if (recounted != pre.ledger.download_total) t1.ledger_exact = false;
        }

        // Degree scaling exponents on exact-degree ring lattices.
        const std::vector<int> degrees{4, 8, 16, 32};
        std::vector<double> log_deg, log_m, log_v;
        for (int D : degrees) {
            Graph ring = generate_circulant(128, D, 16, cfg.seed + 17);
            auto ring_plan = expand_l_hop(ring, std::vector<int>(128, 0), 1, 2);
            PackageOptions opts;
            opts.self_loops = false;
            const CommLedger lm = comm_ledger_only(ring, ring_plan, PackageVariant::matrix, opts);
            const CommLedger lv = comm_ledger_only(ring, ring_plan, PackageVariant::vector, opts);
            log_deg.push_back(std::log(static_cast<double>(D)));
            log_m.push_back(std::log(static_cast<double>(lm.download_total)));
            log_v.push_back(std::log(static_cast<double>(lv.download_total)));
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
        t1.matrix_degree_exponent = slope(log_deg, log_m);
        t1.vector_degree_exponent = slope(log_deg, log_v);
    }

    return report;
}

bool VerifyReport::all_pass() const {
    for (const auto& probe : truncation) {
        if (probe.admissible && !probe.holds) return false;
    }
    // Monotone error decay across probed degrees.
    for (std::size_t i = 1; i < score_errors.size(); ++i) {
        if (score_errors[i].grid_max_error > score_errors[i - 1].grid_max_error) return false;
    }
    if (coeff_bound.genuine_violations != 0) return false;
    if (propagation.layer1_violations != 0 || propagation.score_violations != 0 || propagation.coeff_violations != 0 ||
        propagation.embedding_violations != 0)
        return false;
    if (exp_linear.violations != 0) return false;
    if (!accounting.ledger_exact) return false;
    if (std::abs(accounting.matrix_degree_exponent - 2.0) > 0.25) return false;
    if (std::abs(accounting.vector_degree_exponent - 1.0) > 0.15) return false;
    return true;
}

json VerifyReport::to_json() const {
    json j;
    j["config"] = {{"seed", config.seed},
                   {"degree", config.degree},
                   {"interval_radius", config.interval_radius},
                   {"psi", config.psi.name()},
                   {"phi", config.phi.name()},
                   {"coeff_instances", config.coeff_instances},
                   {"propagation_instances", config.propagation_instances}};
    j["truncation"] = json::array();
    for (const auto& probe : truncation) {
        j["truncation"].push_back({{"k", probe.k},
                                 {"variation", probe.variation},
                                 {"bound", probe.bound},
                                 {"empirical", probe.empirical},
                                 {"admissible", probe.admissible},
                                 {"holds", probe.holds}});
    }
    j["score_errors"] = json::array();
    for (const auto& se : score_errors) {
        j["score_errors"].push_back(
            {{"degree", se.degree}, {"grid_max_error", se.grid_max_error}, {"instance_max_error", se.instance_max_error}});
    }
    j["coeff_bound"] = {{"instances", coeff_bound.instances},
                     {"edges_checked", coeff_bound.edges_checked},
                     {"genuine_violations", coeff_bound.genuine_violations},
                     {"attributed_violations", coeff_bound.attributed_violations},
                     {"worst_margin", coeff_bound.worst_margin},
                     {"violation_dumps", coeff_bound.violation_dumps}};
    j["propagation"] = {{"instances", propagation.instances},
                      {"skipped_hypothesis", propagation.skipped_hypothesis},
                      {"layer1_violations", propagation.layer1_violations},
                      {"score_violations", propagation.score_violations},
                      {"coeff_violations", propagation.coeff_violations},
                      {"embedding_violations", propagation.embedding_violations},
                      {"growth_violations", propagation.growth_violations},
                      {"worst_layer1_margin", propagation.worst_layer1_margin},
                      {"worst_score_margin", propagation.worst_score_margin},
                      {"worst_coeff_margin", propagation.worst_coeff_margin},
                      {"worst_embedding_margin", propagation.worst_embedding_margin}};
    j["exp_linear"] = {{"points", exp_linear.points}, {"violations", exp_linear.violations}};
    j["accounting"] = {{"ledger_exact", accounting.ledger_exact},
                     {"matrix_degree_exponent", accounting.matrix_degree_exponent},
                     {"vector_degree_exponent", accounting.vector_degree_exponent},
                     {"example_matrix_count", accounting.example_matrix_count},
                     {"example_vector_count", accounting.example_vector_count}};
    j["all_pass"] = all_pass();
    return j;
}

}  // namespace fedgat
