#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedgat/tensor.hpp"

namespace fedgat {

// Undirected graph with dense node features and class labels. Self-loops are
// never stored; the model layer adds them. Feature rows are scaled to unit
// L2 norm or less.
struct Graph {
    int n_nodes = 0;
    int feat_dim = 0;
    int n_classes = 0;
    Tensor features;  // n x d
    std::vector<int> labels;
    std::vector<std::pair<int, int>> edges;  // u < v, deduplicated
    std::vector<int> train_mask;             // sorted node ids, pairwise disjoint sets
    std::vector<int> val_mask;
    std::vector<int> test_mask;

    std::vector<std::vector<int>> adjacency() const;  // sorted neighbor lists

    // Scales any feature row with L2 norm above 1 down to unit norm.
    void normalize_features();

    // Checks structural invariants (dedup, no self-loops, mask disjointness,
    // label range, feature norms); throws with a description on violation.
    void validate() const;
};

Graph generate_sbm(int n, int n_classes, double p_in, double p_out, int feat_dim, double noise,
                   std::uint64_t seed);

// Ring lattice where node i links to i+-1..i+-degree/2 (mod n): every node
// has exactly `degree` neighbors. Used for communication-scaling studies.
Graph generate_circulant(int n, int degree, int feat_dim, std::uint64_t seed);

// Random graph with a hard degree cap, label-correlated features as in the
// SBM generator. Edge count targets roughly n*max_degree/3.
Graph generate_random_capped(int n, int max_degree, int n_classes, int feat_dim, double noise,
                             std::uint64_t seed);

struct CrossEdge {
    int u = 0;
    int v = 0;
    int owner_u = 0;
    int owner_v = 0;
};

// Ownership plus the derived L-hop structure used by the federated passes.
struct PartitionPlan {
    int n_clients = 0;
    int hops = 1;
    std::vector<int> owner;                       // node -> client
    std::vector<std::vector<int>> client_nodes;   // L-hop closure of owned nodes, sorted
    std::vector<CrossEdge> cross_edges;           // owner(u) != owner(v)

    std::vector<int> owned_counts() const;
    std::vector<std::vector<int>> owned_nodes() const;  // sorted per client
    int max_subgraph_size() const;                      // B_L
    void validate(const Graph& g) const;
};

// Draws one class-proportion vector per client from Dirichlet(beta) and
// assigns the nodes of each class by sampling those proportions. Every
// client is guaranteed at least one node, retrying the assignment a bounded
// number of times.
std::vector<int> dirichlet_partition(const Graph& g, int n_clients, double beta, std::uint64_t seed,
                                     int max_retries = 100);

// Expands ownership into per-client L-hop subgraphs and the cross-edge
// registry.
PartitionPlan expand_l_hop(const Graph& g, std::vector<int> owner, int n_clients, int hops);

std::string plan_to_json(const PartitionPlan& plan);
PartitionPlan plan_from_json(const std::string& text);

}  // namespace fedgat
