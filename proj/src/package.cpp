#include "fedgat/package.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedgat/kernels.hpp"

namespace fedgat {

using nlohmann::json;

namespace {

// Splitmix-style hash so per-node seeds are independent of iteration order.
std::uint64_t node_seed(std::uint64_t seed, int node, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(node) + 1) + salt;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Modified Gram-Schmidt with one re-orthogonalization pass; returns false if
// the sampled matrix happened to be rank deficient.
bool orthonormalize(Tensor& m) {
    const std::int64_t k = m.n_rows;
    const std::int64_t dim = m.n_cols;
    auto& kb = kernels::active();
    for (std::int64_t i = 0; i < k; ++i) {
        double* row = m.row_ptr(i);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::int64_t j = 0; j < i; ++j) {
                const double proj = kb.dot(row, m.row_ptr(j), static_cast<std::size_t>(dim));
                kb.axpy(-proj, m.row_ptr(j), row, static_cast<std::size_t>(dim));
            }
        }
        const double norm = std::sqrt(kb.dot(row, row, static_cast<std::size_t>(dim)));
        if (norm < 1e-10) return false;
        for (std::int64_t c = 0; c < dim; ++c) row[c] /= norm;
    }
    return true;
}

}  // namespace

OrthoSet gen_ortho_set(int deg, std::uint64_t seed, int max_retries) {
    if (deg < 1) throw std::invalid_argument("gen_ortho_set: deg must be >= 1");
    const int dim = 2 * deg;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
        Tensor m = Tensor::gaussian(dim, dim, rng);
        if (!orthonormalize(m)) continue;
        OrthoSet set;
        set.deg = deg;
        set.u1 = Tensor(deg, dim);
        set.u2 = Tensor(deg, dim);
        for (int j = 0; j < deg; ++j) {
            std::copy_n(m.row_ptr(j), dim, set.u1.row_ptr(j));
            std::copy_n(m.row_ptr(deg + j), dim, set.u2.row_ptr(j));
        }
        std::uniform_real_distribution<double> rdist(0.5, 2.0);
        set.r = rdist(rng);
        return set;
    }
    throw std::runtime_error("gen_ortho_set: orthonormalization kept failing");
}

OrthoSet node_ortho_set(std::uint64_t round_seed, int node, int deg) {
    return gen_ortho_set(deg, node_seed(round_seed, node, 0x11));
}

Tensor build_U(const double* u1, const double* u2, int dim, double r) {
    if (r == 0.0) throw std::invalid_argument("build_U: r must be nonzero");
    Tensor u(dim, dim);
    const double inv_r = 1.0 / r;
    for (int a = 0; a < dim; ++a) {
        double* row = u.row_ptr(a);
        for (int b = 0; b < dim; ++b) {
            row[b] = 0.5 * (u1[a] * u1[b] + u2[a] * u2[b] + r * u1[a] * u2[b] + inv_r * u2[a] * u1[b]);
        }
    }
    return u;
}

std::int64_t package_scalar_count(int deg, int feat_dim, PackageVariant variant) {
    const std::int64_t two_deg = 2 * static_cast<std::int64_t>(deg);
    const std::int64_t d = feat_dim;
    if (variant == PackageVariant::matrix) {
        return d * 2 * two_deg * two_deg + two_deg + two_deg * d;
    }
    return 3 * two_deg * d + 2 * two_deg;
}

std::vector<std::vector<int>> package_neighborhoods(const Graph& g, const PartitionPlan* plan,
                                                    const PackageOptions& options) {
    auto adj = g.adjacency();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(g.n_nodes));
    for (int i = 0; i < g.n_nodes; ++i) {
        std::vector<int> nbrs = adj[static_cast<std::size_t>(i)];
        if (options.drop_single_cross && plan != nullptr && plan->n_clients > 1) {
            int cross = -1, cross_count = 0;
            for (int j : nbrs) {
                if (plan->owner[static_cast<std::size_t>(j)] != plan->owner[static_cast<std::size_t>(i)]) {
                    cross = j;
                    ++cross_count;
                }
            }
            if (cross_count == 1) std::erase(nbrs, cross);
        }
        if (options.self_loops) {
            nbrs.push_back(i);
            std::sort(nbrs.begin(), nbrs.end());
        }
        out[static_cast<std::size_t>(i)] = std::move(nbrs);
    }
    return out;
}

NodePackage build_node_package(const Graph& g, int node, const std::vector<int>& neighbors,
                               std::uint64_t seed) {
    if (neighbors.empty()) throw std::runtime_error("build_node_package: empty neighborhood for node " +
                                                    std::to_string(node));
    const int deg = static_cast<int>(neighbors.size());
    const int dim = 2 * deg;
    const int d = g.feat_dim;
    const OrthoSet set = gen_ortho_set(deg, node_seed(seed, node, 0x11));
    auto& kb = kernels::active();

    NodePackage pkg;
    pkg.node = node;
    pkg.deg = deg;
    pkg.neighbors = neighbors;
    pkg.m1 = Tensor(d, static_cast<std::int64_t>(dim) * dim);
    pkg.m2 = Tensor(d, static_cast<std::int64_t>(dim) * dim);
    pkg.k1 = Tensor(dim, 1);
    pkg.k2 = Tensor(dim, d);

    Tensor u_sum(dim, dim);  // sum_j U_j
    const double sqrt2 = std::sqrt(2.0);
    for (int j = 0; j < deg; ++j) {
        const Tensor u = build_U(set.u1.row_ptr(j), set.u2.row_ptr(j), dim, set.r);
        kb.axpy(1.0, u.data.data(), u_sum.data.data(), u.size());
        const double* hj = g.features.row_ptr(neighbors[static_cast<std::size_t>(j)]);
        // M2(s) += h_j(s) U_j
        for (int s = 0; s < d; ++s) {
            kb.axpy(hj[s], u.data.data(), pkg.m2.row_ptr(s), u.size());
        }
        // K1 += sqrt(2) u1_j ; K2 += sqrt(2) u1_j h_j'
        const double* u1j = set.u1.row_ptr(j);
        for (int a = 0; a < dim; ++a) {
            pkg.k1.data[static_cast<std::size_t>(a)] += sqrt2 * u1j[a];
            kb.axpy(sqrt2 * u1j[a], hj, pkg.k2.row_ptr(a), static_cast<std::size_t>(d));
        }
    }
    const double* hi = g.features.row_ptr(node);
    for (int s = 0; s < d; ++s) {
        kb.axpy(hi[s], u_sum.data.data(), pkg.m1.row_ptr(s), u_sum.size());
    }
    return pkg;
}

VectorNodePackage build_vector_package(const Graph& g, int node, const std::vector<int>& neighbors,
                                       std::uint64_t seed) {
    if (neighbors.empty()) throw std::runtime_error("build_vector_package: empty neighborhood for node " +
                                                    std::to_string(node));
    const int deg = static_cast<int>(neighbors.size());
    const int dim = 2 * deg;
    const int d = g.feat_dim;
    std::mt19937_64 rng(node_seed(seed, node, 0x22));

    // One-hot supports with pairwise-disjoint positions; the complement
    // carries the Gaussian masks.
    std::vector<int> positions(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) positions[static_cast<std::size_t>(i)] = i;
    std::shuffle(positions.begin(), positions.end(), rng);
    std::vector<int> support(positions.begin(), positions.begin() + deg);
    std::vector<int> complement(positions.begin() + deg, positions.end());

    VectorNodePackage pkg;
    pkg.node = node;
    pkg.deg = deg;
    pkg.neighbors = neighbors;
    pkg.m1 = Tensor(d, dim);
    pkg.m2 = Tensor(d, dim);
    pkg.k1 = Tensor(dim, d);
    pkg.mask4 = Tensor(1, dim);
    pkg.k3 = Tensor(1, dim);

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int pos : support) pkg.mask4.data[static_cast<std::size_t>(pos)] = 1.0;

    // mask1 / mask2 live on complement columns, mask3 / mask5 on complement
    // rows; supports stay clean so the masked chain recovers the aggregates.
    for (int s = 0; s < d; ++s) {
        for (int pos : complement) {
            pkg.m1.at(s, pos) = gauss(rng);
            pkg.m2.at(s, pos) = gauss(rng);
        }
    }
    for (int pos : complement) {
        for (int c = 0; c < d; ++c) pkg.k1.at(pos, c) = gauss(rng);
        pkg.k3.data[static_cast<std::size_t>(pos)] = gauss(rng);
    }

    const double* hi = g.features.row_ptr(node);
    for (int j = 0; j < deg; ++j) {
        const int pos = support[static_cast<std::size_t>(j)];
        const double* hj = g.features.row_ptr(neighbors[static_cast<std::size_t>(j)]);
        for (int s = 0; s < d; ++s) {
            pkg.m1.at(s, pos) = hi[s];
            pkg.m2.at(s, pos) = hj[s];
            pkg.k1.at(pos, s) = hj[s];
        }
        pkg.k3.data[static_cast<std::size_t>(pos)] = 1.0;
    }
    return pkg;
}

namespace {

CommLedger make_ledger(const Graph& g, const PartitionPlan& plan, PackageVariant variant,
                       const std::vector<std::vector<int>>& neighborhoods) {
    CommLedger ledger;
    ledger.variant = variant == PackageVariant::matrix ? "matrix" : "vector";
    ledger.upload_per_client.assign(static_cast<std::size_t>(plan.n_clients), 0);
    ledger.download_per_client.assign(static_cast<std::size_t>(plan.n_clients), 0);
    for (int i = 0; i < g.n_nodes; ++i) {
        ledger.upload_per_client[static_cast<std::size_t>(plan.owner[static_cast<std::size_t>(i)])] += g.feat_dim;
    }
    for (int k = 0; k < plan.n_clients; ++k) {
        for (int i : plan.client_nodes[static_cast<std::size_t>(k)]) {
            const auto& nbrs = neighborhoods[static_cast<std::size_t>(i)];
            if (nbrs.empty()) continue;
            ledger.download_per_client[static_cast<std::size_t>(k)] +=
                package_scalar_count(static_cast<int>(nbrs.size()), g.feat_dim, variant);
        }
    }
    for (int k = 0; k < plan.n_clients; ++k) {
        ledger.upload_total += ledger.upload_per_client[static_cast<std::size_t>(k)];
        ledger.download_total += ledger.download_per_client[static_cast<std::size_t>(k)];
    }
    return ledger;
}

}  // namespace

PretrainResult pretrain_round(const Graph& g, const PartitionPlan& plan, PackageVariant variant,
                              std::uint64_t seed, const PackageOptions& options) {
    const auto neighborhoods = package_neighborhoods(g, &plan, options);

    // Union of all client subgraphs.
    std::vector<char> needed(static_cast<std::size_t>(g.n_nodes), 0);
    for (const auto& nodes : plan.client_nodes) {
        for (int i : nodes) needed[static_cast<std::size_t>(i)] = 1;
    }

    PretrainResult out;
    out.packages.variant = variant;
    out.packages.options = options;
    out.packages.seed = seed;
    if (variant == PackageVariant::matrix) {
        out.packages.matrix_entries.resize(static_cast<std::size_t>(g.n_nodes));
    } else {
        out.packages.vector_entries.resize(static_cast<std::size_t>(g.n_nodes));
    }
    for (int i = 0; i < g.n_nodes; ++i) {
        if (!needed[static_cast<std::size_t>(i)]) continue;
        const auto& nbrs = neighborhoods[static_cast<std::size_t>(i)];
        if (nbrs.empty()) continue;  // flagged: no package for isolated nodes
        if (variant == PackageVariant::matrix) {
            out.packages.matrix_entries[static_cast<std::size_t>(i)] = build_node_package(g, i, nbrs, seed);
        } else {
            out.packages.vector_entries[static_cast<std::size_t>(i)] = build_vector_package(g, i, nbrs, seed);
        }
    }
    out.ledger = make_ledger(g, plan, variant, neighborhoods);
    return out;
}

CommLedger comm_ledger_only(const Graph& g, const PartitionPlan& plan, PackageVariant variant,
                            const PackageOptions& options) {
    return make_ledger(g, plan, variant, package_neighborhoods(g, &plan, options));
}

void save_packages(const PretrainPackages& pkgs, const std::string& manifest_path,
                   const std::string& payload_path) {
    json manifest;
    manifest["format"] = "fedgat-packages-v1";
    manifest["variant"] = pkgs.variant == PackageVariant::matrix ? "matrix" : "vector";
    manifest["self_loops"] = pkgs.options.self_loops;
    manifest["drop_single_cross"] = pkgs.options.drop_single_cross;
    manifest["seed"] = pkgs.seed;
    int feat_dim = 0;
    if (pkgs.variant == PackageVariant::matrix) {
        for (const auto& e : pkgs.matrix_entries) {
            if (e) {
                feat_dim = static_cast<int>(e->m1.n_rows);
                break;
            }
        }
    } else {
        for (const auto& e : pkgs.vector_entries) {
            if (e) {
                feat_dim = static_cast<int>(e->m1.n_rows);
                break;
            }
        }
    }
    manifest["feat_dim"] = feat_dim;
    json nodes = json::array();

    std::ofstream bin(payload_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + payload_path);
    std::size_t offset = 0;
    auto dump = [&](const Tensor& t) {
        bin.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
        offset += t.size();
    };
    const bool matrix = pkgs.variant == PackageVariant::matrix;
    const std::size_t n = matrix ? pkgs.matrix_entries.size() : pkgs.vector_entries.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (matrix) {
            const auto& e = pkgs.matrix_entries[i];
            if (!e) continue;
            nodes.push_back({{"node", e->node}, {"deg", e->deg}, {"neighbors", e->neighbors}, {"offset", offset}});
            dump(e->m1);
            dump(e->m2);
            dump(e->k1);
            dump(e->k2);
        } else {
            const auto& e = pkgs.vector_entries[i];
            if (!e) continue;
            nodes.push_back({{"node", e->node}, {"deg", e->deg}, {"neighbors", e->neighbors}, {"offset", offset}});
            dump(e->m1);
            dump(e->m2);
            dump(e->k1);
            dump(e->mask4);
            dump(e->k3);
        }
    }
    manifest["nodes"] = std::move(nodes);
    manifest["payload_scalars"] = offset;
    std::ofstream mout(manifest_path);
    if (!mout) throw std::runtime_error("cannot write " + manifest_path);
    mout << manifest.dump(2) << '\n';
}

PretrainPackages load_packages(const std::string& manifest_path, const std::string& payload_path) {
    std::ifstream min(manifest_path);
    if (!min) throw std::runtime_error("cannot open " + manifest_path);
    json manifest;
    min >> manifest;
    if (manifest.at("format").get<std::string>() != "fedgat-packages-v1")
        throw std::runtime_error("packages: unknown manifest format");

    PretrainPackages pkgs;
    pkgs.variant = manifest.at("variant").get<std::string>() == "matrix" ? PackageVariant::matrix
                                                                         : PackageVariant::vector;
    pkgs.options.self_loops = manifest.at("self_loops").get<bool>();
    pkgs.options.drop_single_cross = manifest.at("drop_single_cross").get<bool>();
    pkgs.seed = manifest.at("seed").get<std::uint64_t>();

    std::ifstream bin(payload_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + payload_path);
    auto read_tensor = [&](Tensor& t) {
        bin.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!bin) throw std::runtime_error("packages: payload truncated");
    };

    int max_node = -1;
    for (const auto& jn : manifest.at("nodes")) max_node = std::max(max_node, jn.at("node").get<int>());
    const bool matrix = pkgs.variant == PackageVariant::matrix;
    const int d = manifest.at("feat_dim").get<int>();
    if (matrix) {
        pkgs.matrix_entries.resize(static_cast<std::size_t>(max_node + 1));
    } else {
        pkgs.vector_entries.resize(static_cast<std::size_t>(max_node + 1));
    }
    for (const auto& jn : manifest.at("nodes")) {
        const int node = jn.at("node").get<int>();
        const int deg = jn.at("deg").get<int>();
        auto neighbors = jn.at("neighbors").get<std::vector<int>>();
        const int dim = 2 * deg;
        if (matrix) {
            NodePackage e;
            e.node = node;
            e.deg = deg;
            e.neighbors = std::move(neighbors);
            e.m1 = Tensor(d, static_cast<std::int64_t>(dim) * dim);
            e.m2 = Tensor(d, static_cast<std::int64_t>(dim) * dim);
            e.k1 = Tensor(dim, 1);
            e.k2 = Tensor(dim, d);
            read_tensor(e.m1);
            read_tensor(e.m2);
            read_tensor(e.k1);
            read_tensor(e.k2);
            pkgs.matrix_entries[static_cast<std::size_t>(node)] = std::move(e);
        } else {
            VectorNodePackage e;
            e.node = node;
            e.deg = deg;
            e.neighbors = std::move(neighbors);
            e.m1 = Tensor(d, dim);
            e.m2 = Tensor(d, dim);
            e.k1 = Tensor(dim, d);
            e.mask4 = Tensor(1, dim);
            e.k3 = Tensor(1, dim);
            read_tensor(e.m1);
            read_tensor(e.m2);
            read_tensor(e.k1);
            read_tensor(e.mask4);
            read_tensor(e.k3);
            pkgs.vector_entries[static_cast<std::size_t>(node)] = std::move(e);
        }
    }
    return pkgs;
}

}  // namespace fedgat
