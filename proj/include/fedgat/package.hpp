#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedgat/graph.hpp"
#include "fedgat/tensor.hpp"

namespace fedgat {

// 2*deg orthonormal vectors in R^(2*deg), split into the u1/u2 families, plus
// the random mixing scalar r.
struct OrthoSet {
    int deg = 0;
    Tensor u1;  // deg x 2deg, row j = u1_j
    Tensor u2;  // deg x 2deg
    double r = 1.0;
};

OrthoSet gen_ortho_set(int deg, std::uint64_t seed, int max_retries = 5);

// The exact set a given node's package was built from: packages derive their
// per-node seed from (round seed, node id), independent of iteration order.
OrthoSet node_ortho_set(std::uint64_t round_seed, int node, int deg);

// 0.5 * (u1 u1' + u2 u2' + r u1 u2' + (1/r) u2 u1'); idempotent and mutually
// annihilating across the set.
Tensor build_U(const double* u1, const double* u2, int dim, double r);

enum class PackageVariant { matrix, vector };

// Aggregate matrices for one node. m1/m2 keep the d per-component matrices
// stacked as rows of length (2deg)^2 so the projection b'M is one product.
struct NodePackage {
    int node = -1;
    int deg = 0;
    std::vector<int> neighbors;  // package neighborhood (model level), sorted
    Tensor m1;                   // d x (2deg)^2
    Tensor m2;                   // d x (2deg)^2
    Tensor k1;                   // 2deg x 1
    Tensor k2;                   // 2deg x d
};

// Masked-vector bundle for one node (the low-cost variant).
struct VectorNodePackage {
    int node = -1;
    int deg = 0;
    std::vector<int> neighbors;
    Tensor m1;     // d x 2deg
    Tensor m2;     // d x 2deg
    Tensor k1;     // 2deg x d
    Tensor mask4;  // 1 x 2deg, binary support indicator (transmitted as K2)
    Tensor k3;     // 1 x 2deg
};

struct PackageOptions {
    bool self_loops = true;            // package neighborhoods match the model's
    bool drop_single_cross = true;     // drop the lone cross-client neighbor
};

struct PretrainPackages {
    PackageVariant variant = PackageVariant::matrix;
    PackageOptions options;
    std::uint64_t seed = 0;
    std::vector<std::optional<NodePackage>> matrix_entries;        // indexed by node
    std::vector<std::optional<VectorNodePackage>> vector_entries;  // indexed by node
};

// Scalar upload/download counts per client plus totals. Downloads follow the
// closed-form per-node counts over each client's L-hop subgraph; uploads are
// the raw feature transfer.
struct CommLedger {
    std::string variant;
    std::vector<std::int64_t> upload_per_client;
    std::vector<std::int64_t> download_per_client;
    std::int64_t upload_total = 0;
    std::int64_t download_total = 0;
};

// matrix: d*2*(2deg)^2 + 2deg + 2deg*d ; vector: 3*2deg*d + 2*2deg.
std::int64_t package_scalar_count(int deg, int feat_dim, PackageVariant variant);

// Package neighborhood of each node under the options: N(i), plus i itself
// when self-loops are on, minus a lone cross-client neighbor when dropping
// is on. The plan may be null (single-trust domain: nothing is dropped).
std::vector<std::vector<int>> package_neighborhoods(const Graph& g, const PartitionPlan* plan,
                                                    const PackageOptions& options);

NodePackage build_node_package(const Graph& g, int node, const std::vector<int>& neighbors, std::uint64_t seed);
VectorNodePackage build_vector_package(const Graph& g, int node, const std::vector<int>& neighbors,
                                       std::uint64_t seed);

struct PretrainResult {
    PretrainPackages packages;
    CommLedger ledger;
};

// Algorithm-1 round: builds one package per node appearing in any client's
// L-hop subgraph and accounts the transfer. Per-node seeds derive from
// (seed, node) so iteration order cannot matter.
PretrainResult pretrain_round(const Graph& g, const PartitionPlan& plan, PackageVariant variant,
                              std::uint64_t seed, const PackageOptions& options = {});

// Ledger only, no package construction: used for communication benchmarks.
CommLedger comm_ledger_only(const Graph& g, const PartitionPlan& plan, PackageVariant variant,
                            const PackageOptions& options = {});

void save_packages(const PretrainPackages& pkgs, const std::string& manifest_path,
                   const std::string& payload_path);
PretrainPackages load_packages(const std::string& manifest_path, const std::string& payload_path);

}  // namespace fedgat
