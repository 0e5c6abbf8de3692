#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "fedgat/gat.hpp"
#include "fedgat/graph.hpp"

using namespace fedgat;

namespace {

GatConfig small_config(int in_dim, int classes) {
    GatConfig cfg;
    cfg.in_dim = in_dim;
    cfg.n_classes = classes;
    cfg.layers = 2;
    cfg.hidden_dim = 4;
    cfg.heads = 2;
    cfg.heads_out = 1;
    return cfg;
}

}  // namespace

TEST_CASE("zero attention parameters give unit scores") {
    HeadParams head;
    head.W = Tensor(3, 3);
    for (int i = 0; i < 3; ++i) head.W.at(i, i) = 1.0;
    head.a1 = Tensor(3, 1);
    head.a2 = Tensor(3, 1);
    const Tensor h = Tensor::col({0.1, 0.2, 0.3});
    CHECK(attention_score(head, Activation::leaky_relu(0.2), h, h) == doctest::Approx(1.0));
}

TEST_CASE("identity psi gives the closed-form exponent") {
    // a1'Wh_i = 0.3 and a2'Wh_j = -0.1 via 1-d construction
    HeadParams head;
    head.W = Tensor(1, 1, {1.0});
    head.a1 = Tensor(1, 1, {0.3});
    head.a2 = Tensor(1, 1, {-0.1});
    const Tensor hi = Tensor::col({1.0});
    const Tensor hj = Tensor::col({1.0});
    CHECK(attention_score(head, Activation::identity(), hi, hj) == doctest::Approx(std::exp(0.2)));
}

TEST_CASE("attention score matches an independent scalar route") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        HeadParams head;
        head.W = Tensor::gaussian(4, 6, rng, 0.4);
        head.a1 = Tensor::gaussian(4, 1, rng, 0.5);
        head.a2 = Tensor::gaussian(4, 1, rng, 0.5);
        const Tensor hi = Tensor::gaussian(6, 1, rng, 0.3);
        const Tensor hj = Tensor::gaussian(6, 1, rng, 0.3);
        // independent route: b = W'a, x = b1'h_i + b2'h_j
        double x = 0.0;
        for (int c = 0; c < 6; ++c) {
            double b1c = 0.0, b2c = 0.0;
            for (int r = 0; r < 4; ++r) {
                b1c += head.a1.data[static_cast<std::size_t>(r)] * head.W.at(r, c);
                b2c += head.a2.data[static_cast<std::size_t>(r)] * head.W.at(r, c);
            }
            x += b1c * hi.data[static_cast<std::size_t>(c)] + b2c * hj.data[static_cast<std::size_t>(c)];
        }
        const Activation psi = Activation::leaky_relu(0.2);
        const double expected = std::exp(psi(x));
        CHECK(attention_score(head, psi, hi, hj) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("attention score explodes loudly on parameter blow-up") {
    HeadParams head;
    head.W = Tensor(1, 1, {1e6});
    head.a1 = Tensor(1, 1, {1e6});
    head.a2 = Tensor(1, 1, {1e6});
    const Tensor h = Tensor::col({1.0});
    CHECK_THROWS_AS(attention_score(head, Activation::identity(), h, h), std::runtime_error);
}

TEST_CASE("attention coefficients normalize") {
    const auto equal = attention_coeffs({2.0, 2.0, 2.0, 2.0});
    for (double a : equal) CHECK(a == doctest::Approx(0.25));
    const auto single = attention_coeffs({5.0});
    CHECK(single[0] == 1.0);
    CHECK_THROWS_AS(attention_coeffs({}), std::invalid_argument);
}

TEST_CASE("coefficients match a softmax-of-logits oracle") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> logits(6);
        std::vector<double> scores(6);
        for (int i = 0; i < 6; ++i) {
            logits[static_cast<std::size_t>(i)] = dist(rng);
            scores[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)]);
        }
        const auto got = attention_coeffs(scores);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        for (int i = 0; i < 6; ++i) {
            const double expected = std::exp(logits[static_cast<std::size_t>(i)] - mx) / z;
            CHECK(std::abs(got[static_cast<std::size_t>(i)] - expected) < 1e-14);
        }
    }
}

TEST_CASE("single self-loop node with identity weights passes features through") {
    Graph g;
    g.n_nodes = 1;
    g.feat_dim = 2;
    g.n_classes = 2;
    g.features = Tensor(1, 2, {0.4, -0.3});
    g.labels = {0};
    g.train_mask = {0};
    g.val_mask = {};
    g.test_mask = {};

    GatConfig cfg;
    cfg.in_dim = 2;
    cfg.n_classes = 2;
    cfg.layers = 1;
    cfg.heads_out = 1;
    ModelParams params = ModelParams::init(cfg, 1);
    params.layers[0][0].W = Tensor(2, 2, {1, 0, 0, 1});
    params.layers[0][0].a1 = Tensor(2, 1);
    params.layers[0][0].a2 = Tensor(2, 1);
    const Tensor out = gat_forward(g, params);
    CHECK(out.at(0, 0) == doctest::Approx(0.4));
    CHECK(out.at(0, 1) == doctest::Approx(-0.3));
}

TEST_CASE("two-node path with equal features produces equal embeddings") {
    Graph g;
    g.n_nodes = 2;
    g.feat_dim = 2;
    g.n_classes = 2;
    g.features = Tensor(2, 2, {0.5, 0.1, 0.5, 0.1});
    g.labels = {0, 1};
    g.edges = {{0, 1}};
    g.train_mask = {0};
    g.val_mask = {1};
    g.test_mask = {};
    GatConfig cfg = small_config(2, 2);
    cfg.layers = 1;
    const ModelParams params = ModelParams::init(cfg, 3);
    const Tensor out = gat_forward(g, params);
    for (int c = 0; c < out.n_cols; ++c) CHECK(out.at(0, c) == doctest::Approx(out.at(1, c)));
}

TEST_CASE("single layer matches the dense-matrix oracle") {
    const Graph g = generate_sbm(5, 2, 0.8, 0.5, 3, 0.4, 17);
    GatConfig cfg;
    cfg.in_dim = 3;
    cfg.n_classes = 3;
    cfg.layers = 1;
    cfg.heads_out = 1;
    const ModelParams params = ModelParams::init(cfg, 4);
    const Tensor got = gat_forward(g, params);

    // Dense formulation: phi(A_att H W') with A_att the row-normalized score
    // matrix over the self-loop-augmented adjacency.
    const HeadParams& head = params.layers[0][0];
    const auto adj = g.adjacency();
    Tensor att(g.n_nodes, g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i) {
        std::vector<int> nb = adj[static_cast<std::size_t>(i)];
        nb.push_back(i);
        double total = 0.0;
        for (int j : nb) {
            Tensor hi(g.feat_dim, 1), hj(g.feat_dim, 1);
            for (int c = 0; c < g.feat_dim; ++c) {
                hi.data[static_cast<std::size_t>(c)] = g.features.at(i, c);
                hj.data[static_cast<std::size_t>(c)] = g.features.at(j, c);
            }
            const double e = attention_score(head, cfg.psi, hi, hj);
            att.at(i, j) = e;
            total += e;
        }
        for (int j = 0; j < g.n_nodes; ++j) att.at(i, j) /= total;
    }
    Tensor expected(g.n_nodes, 3);
    for (int i = 0; i < g.n_nodes; ++i) {
        for (int r = 0; r < 3; ++r) {
            double acc = 0.0;
            for (int j = 0; j < g.n_nodes; ++j) {
                double wh = 0.0;
                for (int c = 0; c < g.feat_dim; ++c) wh += head.W.at(r, c) * g.features.at(j, c);
                acc += att.at(i, j) * wh;
            }
            expected.at(i, r) = acc;  // output layer phi = identity
        }
    }
    CHECK(max_abs_diff(got, expected) < 1e-12);
}

TEST_CASE("attention rows are stochastic for every node and head") {
    const Graph g = generate_sbm(30, 3, 0.3, 0.1, 5, 0.4, 23);
    GatConfig cfg = small_config(5, 3);
    const ModelParams params = ModelParams::init(cfg, 7);
    const auto adj = g.adjacency();
    for (const auto& layer : params.layers) {
        for (const auto& head : layer) {
            if (head.W.n_cols != g.feat_dim) continue;  // only layer 1 sees raw features
            for (int i = 0; i < g.n_nodes; ++i) {
                std::vector<int> nb = adj[static_cast<std::size_t>(i)];
                nb.push_back(i);
                std::vector<double> scores;
                for (int j : nb) {
                    Tensor hi(g.feat_dim, 1), hj(g.feat_dim, 1);
                    for (int c = 0; c < g.feat_dim; ++c) {
                        hi.data[static_cast<std::size_t>(c)] = g.features.at(i, c);
                        hj.data[static_cast<std::size_t>(c)] = g.features.at(j, c);
                    }
                    scores.push_back(attention_score(head, cfg.psi, hi, hj));
                }
                const auto alpha = attention_coeffs(scores);
                double total = 0.0;
                for (double a : alpha) {
                    CHECK(a > 0.0);
                    total += a;
                }
                CHECK(std::abs(total - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("permutation equivariance of the full forward") {
    const Graph g = generate_sbm(18, 3, 0.4, 0.1, 4, 0.4, 29);
    GatConfig cfg = small_config(4, 3);
    const ModelParams params = ModelParams::init(cfg, 11);
    const Tensor base = gat_forward(g, params);

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> perm(static_cast<std::size_t>(g.n_nodes));
        for (int i = 0; i < g.n_nodes; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);

        Graph pg = g;
        for (int i = 0; i < g.n_nodes; ++i) {
            const int pi = perm[static_cast<std::size_t>(i)];
            pg.labels[static_cast<std::size_t>(pi)] = g.labels[static_cast<std::size_t>(i)];
            for (int c = 0; c < g.feat_dim; ++c) pg.features.at(pi, c) = g.features.at(i, c);
        }
        pg.edges.clear();
        for (const auto& [u, v] : g.edges) {
            int pu = perm[static_cast<std::size_t>(u)], pv = perm[static_cast<std::size_t>(v)];
            if (pu > pv) std::swap(pu, pv);
            pg.edges.emplace_back(pu, pv);
        }
        std::sort(pg.edges.begin(), pg.edges.end());
        const Tensor permuted = gat_forward(pg, params);
        double worst = 0.0;
        for (int i = 0; i < g.n_nodes; ++i) {
            for (int c = 0; c < base.n_cols; ++c) {
                worst = std::max(worst, std::abs(permuted.at(perm[static_cast<std::size_t>(i)], c) - base.at(i, c)));
            }
        }
        CHECK(worst < 1e-11);
    }
}

TEST_CASE("single-client dist forward equals the centralized forward") {
    const Graph g = generate_sbm(24, 3, 0.3, 0.1, 4, 0.4, 37);
    GatConfig cfg = small_config(4, 3);
    const ModelParams params = ModelParams::init(cfg, 13);
    const auto plan = expand_l_hop(g, std::vector<int>(24, 0), 1, 2);
    CHECK(max_abs_diff(dist_gat_forward(g, plan, params), gat_forward(g, params)) < 1e-14);
}

TEST_CASE("class-partitioned block graph with no cross edges: dist equals central") {
    const Graph g = generate_sbm(40, 4, 0.4, 0.0, 6, 0.3, 41);
    GatConfig cfg = small_config(6, 4);
    const ModelParams params = ModelParams::init(cfg, 17);
    const auto plan = expand_l_hop(g, g.labels, 4, 2);  // owner = class
    CHECK(plan.cross_edges.empty());
    CHECK(max_abs_diff(dist_gat_forward(g, plan, params), gat_forward(g, params)) < 1e-14);
}

TEST_CASE("dist forward differs from central when cross edges exist") {
    const Graph g = generate_sbm(40, 4, 0.3, 0.1, 6, 0.3, 43);
    GatConfig cfg = small_config(6, 4);
    const ModelParams params = ModelParams::init(cfg, 19);
    const auto owner = dirichlet_partition(g, 4, 1.0, 44);
    const auto plan = expand_l_hop(g, owner, 4, 2);
    REQUIRE(!plan.cross_edges.empty());
    CHECK(max_abs_diff(dist_gat_forward(g, plan, params), gat_forward(g, params)) > 1e-8);
}

TEST_CASE("norm projection clamps spectral and vector norms") {
    std::mt19937_64 rng(47);
    GatConfig cfg = small_config(6, 3);
    ModelParams params = ModelParams::init(cfg, 23);
    for (auto& layer : params.layers) {
        for (auto& head : layer) {
            for (auto& v : head.W.data) v *= 5.0;
            for (auto& v : head.a1.data) v *= 5.0;
        }
    }
    params.project_norms();
    CHECK(params.max_spectral_norm() <= 1.0 + 1e-9);
    for (const auto& layer : params.layers) {
        for (const auto& head : layer) {
            CHECK(head.a1.l2_norm() <= 1.0 + 1e-12);
            CHECK(head.a2.l2_norm() <= 1.0 + 1e-12);
        }
    }
    (void)rng;
}

TEST_CASE("power iteration recovers the top singular value of a diagonal matrix") {
    Tensor m(3, 3);
    m.at(0, 0) = 0.3;
    m.at(1, 1) = 2.5;
    m.at(2, 2) = 1.0;
    CHECK(spectral_norm(m, 50) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("checkpoint round trip is bit exact") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("fedgat_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    GatConfig cfg = small_config(5, 3);
    const ModelParams params = ModelParams::init(cfg, 29);
    const std::string stem = (dir / "model").string();
    save_checkpoint(params, stem);
    const ModelParams loaded = load_checkpoint(stem);
    const auto a = params.flat();
    const auto b = loaded.flat();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
    fs::remove_all(dir);
}
