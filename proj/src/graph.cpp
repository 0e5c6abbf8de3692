#include "fedgat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedgat {

using nlohmann::json;

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_nodes));
    for (const auto& [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

void Graph::normalize_features() {
    for (int i = 0; i < n_nodes; ++i) {
        double* row = features.row_ptr(i);
        double s = 0.0;
        for (int c = 0; c < feat_dim; ++c) s += row[c] * row[c];
        const double norm = std::sqrt(s);
        // Slack keeps already-normalized rows stable across serialization.
        if (norm > 1.0 + 1e-12) {
            for (int c = 0; c < feat_dim; ++c) row[c] /= norm;
        }
    }
}

void Graph::validate() const {
    if (features.n_rows != n_nodes || features.n_cols != feat_dim)
        throw std::runtime_error("graph: feature matrix shape mismatch");
    if (labels.size() != static_cast<std::size_t>(n_nodes))
        throw std::runtime_error("graph: label count mismatch");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes)
            throw std::runtime_error("graph: label out of range at node " + std::to_string(i));
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& [u, v] : edges) {
        if (u == v) throw std::runtime_error("graph: self-loop stored at node " + std::to_string(u));
        if (u < 0 || v < 0 || u >= n_nodes || v >= n_nodes)
            throw std::runtime_error("graph: edge endpoint out of range");
        if (u > v) throw std::runtime_error("graph: edge not normalized to u < v");
        if (!seen.emplace(u, v).second) throw std::runtime_error("graph: duplicate edge");
    }
    std::vector<int> mark(static_cast<std::size_t>(n_nodes), 0);
    auto check_mask = [&](const std::vector<int>& mask, const char* name) {
        for (int id : mask) {
            if (id < 0 || id >= n_nodes)
                throw std::runtime_error(std::string("graph: ") + name + " mask id out of range");
            if (mark[static_cast<std::size_t>(id)]++ != 0)
                throw std::runtime_error("graph: masks are not disjoint at node " + std::to_string(id));
        }
    };
    check_mask(train_mask, "train");
    check_mask(val_mask, "val");
    check_mask(test_mask, "test");
    for (int i = 0; i < n_nodes; ++i) {
        double s = 0.0;
        const double* row = features.row_ptr(i);
        for (int c = 0; c < feat_dim; ++c) s += row[c] * row[c];
        if (std::sqrt(s) > 1.0 + 1e-12)
            throw std::runtime_error("graph: feature norm exceeds 1 at node " + std::to_string(i));
    }
}

namespace {

void stratified_masks(Graph& g, std::mt19937_64& rng) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(g.n_classes));
    for (int i = 0; i < g.n_nodes; ++i) by_class[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t n_train = std::max<std::size_t>(1, members.size() / 10);
        const std::size_t n_val = std::max<std::size_t>(1, members.size() / 5);
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i < n_train) {
                g.train_mask.push_back(members[i]);
            } else if (i < n_train + n_val) {
                g.val_mask.push_back(members[i]);
            } else {
                g.test_mask.push_back(members[i]);
            }
        }
    }
    std::sort(g.train_mask.begin(), g.train_mask.end());
    std::sort(g.val_mask.begin(), g.val_mask.end());
    std::sort(g.test_mask.begin(), g.test_mask.end());
}

void centroid_features(Graph& g, double noise, std::mt19937_64& rng) {
    g.features = Tensor(g.n_nodes, g.feat_dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < g.n_nodes; ++i) {
        double* row = g.features.row_ptr(i);
        row[g.labels[static_cast<std::size_t>(i)] % g.feat_dim] = 1.0;
        for (int c = 0; c < g.feat_dim; ++c) row[c] += noise * gauss(rng);
    }
    g.normalize_features();
}

}  // namespace

Graph generate_sbm(int n, int n_classes, double p_in, double p_out, int feat_dim, double noise,
                   std::uint64_t seed) {
    if (n < n_classes) throw std::invalid_argument("generate_sbm: need n >= classes");
    if (n_classes < 1 || feat_dim < 1) throw std::invalid_argument("generate_sbm: bad dimensions");
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
        throw std::invalid_argument("generate_sbm: require 0 <= p_out <= p_in <= 1");

    std::mt19937_64 rng(seed);
    Graph g;
    g.n_nodes = n;
    g.feat_dim = feat_dim;
    g.n_classes = n_classes;
    g.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.labels[static_cast<std::size_t>(i)] = i % n_classes;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            const double p = (g.labels[static_cast<std::size_t>(u)] == g.labels[static_cast<std::size_t>(v)])
                                 ? p_in
                                 : p_out;
            if (unif(rng) < p) g.edges.emplace_back(u, v);
        }
    }
    centroid_features(g, noise, rng);
    stratified_masks(g, rng);
    g.validate();
    return g;
}

Graph generate_circulant(int n, int degree, int feat_dim, std::uint64_t seed) {
    if (degree < 2 || degree % 2 != 0) throw std::invalid_argument("generate_circulant: degree must be even >= 2");
    if (n <= degree) throw std::invalid_argument("generate_circulant: need n > degree");
    std::mt19937_64 rng(seed);
    Graph g;
    g.n_nodes = n;
    g.feat_dim = feat_dim;
    g.n_classes = 2;
    g.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.labels[static_cast<std::size_t>(i)] = i % 2;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < n; ++i) {
        for (int off = 1; off <= degree / 2; ++off) {
            int u = i, v = (i + off) % n;
            if (u > v) std::swap(u, v);
            seen.emplace(u, v);
        }
    }
    g.edges.assign(seen.begin(), seen.end());
    centroid_features(g, 0.2, rng);
    stratified_masks(g, rng);
    g.validate();
    return g;
}

Graph generate_random_capped(int n, int max_degree, int n_classes, int feat_dim, double noise,
                             std::uint64_t seed) {
    if (n < n_classes) throw std::invalid_argument("generate_random_capped: need n >= classes");
    if (max_degree < 1) throw std::invalid_argument("generate_random_capped: max_degree must be >= 1");
    std::mt19937_64 rng(seed);
    Graph g;
    g.n_nodes = n;
    g.feat_dim = feat_dim;
    g.n_classes = n_classes;
    g.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.labels[static_cast<std::size_t>(i)] = i % n_classes;

    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> deg(static_cast<std::size_t>(n), 0);
    std::set<std::pair<int, int>> seen;
    const int target = std::max(1, n * max_degree / 3);
    int attempts = 20 * target;
    while (static_cast<int>(seen.size()) < target && attempts-- > 0) {
        int u = pick(rng), v = pick(rng);
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        if (deg[static_cast<std::size_t>(u)] >= max_degree || deg[static_cast<std::size_t>(v)] >= max_degree) continue;
        if (!seen.emplace(u, v).second) continue;
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    g.edges.assign(seen.begin(), seen.end());
    centroid_features(g, noise, rng);
    stratified_masks(g, rng);
    g.validate();
    return g;
}

std::vector<int> PartitionPlan::owned_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(n_clients), 0);
    for (int o : owner) ++counts[static_cast<std::size_t>(o)];
    return counts;
}

std::vector<std::vector<int>> PartitionPlan::owned_nodes() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_clients));
    for (std::size_t i = 0; i < owner.size(); ++i) out[static_cast<std::size_t>(owner[i])].push_back(static_cast<int>(i));
    return out;
}

int PartitionPlan::max_subgraph_size() const {
    std::size_t best = 0;
    for (const auto& nodes : client_nodes) best = std::max(best, nodes.size());
    return static_cast<int>(best);
}

void PartitionPlan::validate(const Graph& g) const {
    if (owner.size() != static_cast<std::size_t>(g.n_nodes)) throw std::runtime_error("plan: owner map size mismatch");
    for (int o : owner) {
        if (o < 0 || o >= n_clients) throw std::runtime_error("plan: owner id out of range");
    }
    for (int k = 0; k < n_clients; ++k) {
        const auto& nodes = client_nodes[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < owner.size(); ++i) {
            if (owner[i] == k && !std::binary_search(nodes.begin(), nodes.end(), static_cast<int>(i)))
                throw std::runtime_error("plan: owned node missing from its client subgraph");
        }
    }
    std::size_t expected_cross = 0;
    for (const auto& [u, v] : g.edges) {
        if (owner[static_cast<std::size_t>(u)] != owner[static_cast<std::size_t>(v)]) ++expected_cross;
    }
    if (expected_cross != cross_edges.size()) throw std::runtime_error("plan: cross edge registry incomplete");
}

std::vector<int> dirichlet_partition(const Graph& g, int n_clients, double beta, std::uint64_t seed,
                                     int max_retries) {
    if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: need at least one client");
    if (!(beta > 0.0)) throw std::invalid_argument("dirichlet_partition: beta must be positive");
    std::mt19937_64 rng(seed);
    if (n_clients == 1) return std::vector<int>(static_cast<std::size_t>(g.n_nodes), 0);

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(g.n_classes));
    for (int i = 0; i < g.n_nodes; ++i) by_class[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(i)])].push_back(i);

    std::gamma_distribution<double> gamma(beta, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        // Per-client class proportions.
        std::vector<std::vector<double>> prop(static_cast<std::size_t>(n_clients),
                                              std::vector<double>(static_cast<std::size_t>(g.n_classes)));
        for (auto& row : prop) {
            double total = 0.0;
            for (auto& v : row) {
                v = gamma(rng);
                total += v;
            }
            for (auto& v : row) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(g.n_classes);
        }
        std::vector<int> owner(static_cast<std::size_t>(g.n_nodes), 0);
        for (int c = 0; c < g.n_classes; ++c) {
            // Weight of client k for class c, normalized over clients.
            std::vector<double> w(static_cast<std::size_t>(n_clients));
            double total = 0.0;
            for (int k = 0; k < n_clients; ++k) {
                w[static_cast<std::size_t>(k)] = prop[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
                total += w[static_cast<std::size_t>(k)];
            }
            for (int node : by_class[static_cast<std::size_t>(c)]) {
                double u = unif(rng) * total;
                int pick = n_clients - 1;
                for (int k = 0; k < n_clients; ++k) {
                    u -= w[static_cast<std::size_t>(k)];
                    if (u <= 0.0) {
                        pick = k;
                        break;
                    }
                }
                owner[static_cast<std::size_t>(node)] = pick;
            }
        }
        std::vector<int> counts(static_cast<std::size_t>(n_clients), 0);
        for (int o : owner) ++counts[static_cast<std::size_t>(o)];
        if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) return owner;
    }
    throw std::runtime_error("dirichlet_partition: could not give every client a node after " +
                             std::to_string(max_retries) + " attempts (too many clients?)");
}

PartitionPlan expand_l_hop(const Graph& g, std::vector<int> owner, int n_clients, int hops) {
    if (hops < 1) throw std::invalid_argument("expand_l_hop: hops must be >= 1");
    PartitionPlan plan;
    plan.n_clients = n_clients;
    plan.hops = hops;
    plan.owner = std::move(owner);

    const auto adj = g.adjacency();
    plan.client_nodes.resize(static_cast<std::size_t>(n_clients));
    for (int k = 0; k < n_clients; ++k) {
        std::vector<int> dist(static_cast<std::size_t>(g.n_nodes), -1);
        std::deque<int> queue;
        for (int i = 0; i < g.n_nodes; ++i) {
            if (plan.owner[static_cast<std::size_t>(i)] == k) {
                dist[static_cast<std::size_t>(i)] = 0;
                queue.push_back(i);
            }
        }
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            if (dist[static_cast<std::size_t>(u)] == hops) continue;
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (dist[static_cast<std::size_t>(v)] < 0) {
                    dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                    queue.push_back(v);
                }
            }
        }
        auto& nodes = plan.client_nodes[static_cast<std::size_t>(k)];
        for (int i = 0; i < g.n_nodes; ++i) {
            if (dist[static_cast<std::size_t>(i)] >= 0) nodes.push_back(i);
        }
    }

    for (const auto& [u, v] : g.edges) {
        const int ou = plan.owner[static_cast<std::size_t>(u)];
        const int ov = plan.owner[static_cast<std::size_t>(v)];
        if (ou != ov) plan.cross_edges.push_back({u, v, ou, ov});
    }
    return plan;
}

std::string plan_to_json(const PartitionPlan& plan) {
    json j;
    j["n_clients"] = plan.n_clients;
    j["hops"] = plan.hops;
    j["owner"] = plan.owner;
    j["client_nodes"] = plan.client_nodes;
    json cross = json::array();
    for (const auto& e : plan.cross_edges) cross.push_back({e.u, e.v, e.owner_u, e.owner_v});
    j["cross_edges"] = std::move(cross);
    return j.dump(2);
}

PartitionPlan plan_from_json(const std::string& text) {
    const json j = json::parse(text);
    PartitionPlan plan;
    plan.n_clients = j.at("n_clients").get<int>();
    plan.hops = j.at("hops").get<int>();
    plan.owner = j.at("owner").get<std::vector<int>>();
    plan.client_nodes = j.at("client_nodes").get<std::vector<std::vector<int>>>();
    for (const auto& e : j.at("cross_edges")) {
        plan.cross_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>(), e.at(3).get<int>()});
    }
    return plan;
}

}  // namespace fedgat
