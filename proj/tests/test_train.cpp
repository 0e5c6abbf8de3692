#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fedgat/graph.hpp"
#include "fedgat/package.hpp"
#include "fedgat/train.hpp"

using namespace fedgat;

namespace {

GatConfig tiny_model(int in_dim, int classes) {
    GatConfig cfg;
    cfg.in_dim = in_dim;
    cfg.n_classes = classes;
    cfg.layers = 2;
    cfg.hidden_dim = 4;
    cfg.heads = 2;
    cfg.heads_out = 1;
    return cfg;
}

TrainConfig tiny_train(const Graph& g, ForwardVariant variant, std::uint64_t seed) {
    TrainConfig tc;
    tc.rounds = 3;
    tc.local_epochs = 2;
    tc.variant = variant;
    tc.seed = seed;
    tc.opt.lr = 0.02;
    tc.model = tiny_model(g.feat_dim, g.n_classes);
    return tc;
}

}  // namespace

TEST_CASE("cross entropy of uniform logits is ln C") {
    Tensor logits(4, 3);  // all zeros -> uniform
    const std::vector<int> labels{0, 1, 2, 0};
    const std::vector<int> mask{0, 1, 2, 3};
    CHECK(cross_entropy_loss(logits, labels, mask) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("confident correct logits give near-zero loss") {
    Tensor logits(2, 3);
    logits.at(0, 1) = 50.0;
    logits.at(1, 2) = 50.0;
    CHECK(cross_entropy_loss(logits, {1, 2}, {0, 1}) < 1e-12);
}

TEST_CASE("cross entropy matches a long-double direct route") {
    std::mt19937_64 rng(3);
    Tensor logits = Tensor::gaussian(8, 5, rng);
    std::vector<int> labels(8);
    for (auto& l : labels) l = static_cast<int>(rng() % 5);
    const std::vector<int> mask{0, 2, 3, 5, 7};
    long double total = 0.0L;
    for (int r : mask) {
        long double z = 0.0L;
        for (int c = 0; c < 5; ++c) z += std::exp(static_cast<long double>(logits.at(r, c)));
        const long double p = std::exp(static_cast<long double>(logits.at(r, labels[static_cast<std::size_t>(r)]))) / z;
        total += -std::log(p);
    }
    const double expected = static_cast<double>(total / mask.size());
    CHECK(cross_entropy_loss(logits, labels, mask) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cross entropy requires a mask") {
    Tensor logits(2, 2);
    CHECK_THROWS_AS(cross_entropy_loss(logits, {0, 1}, {}), std::invalid_argument);
}

TEST_CASE("sgd with lr=0 leaves parameters unchanged") {
    GatConfig cfg = tiny_model(4, 3);
    ModelParams params = ModelParams::init(cfg, 1);
    const ModelParams before = params;
    std::vector<Tensor> grads;
    std::mt19937_64 rng(2);
    for (const Tensor* t : params.flat()) grads.push_back(Tensor::gaussian(t->n_rows, t->n_cols, rng));
    OptimizerConfig opt;
    opt.kind = OptimizerConfig::Kind::sgd;
    opt.lr = 0.0;
    opt.weight_decay = 0.0;
    AdamState state;
    optimizer_step(params, grads, opt, state);
    const auto a = params.flat();
    const auto b = before.flat();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
}

TEST_CASE("one sgd step is exactly theta - lr*(g + wd*theta)") {
    GatConfig cfg = tiny_model(3, 2);
    ModelParams params = ModelParams::init(cfg, 5);
    const ModelParams before = params;
    std::vector<Tensor> grads;
    std::mt19937_64 rng(6);
    for (const Tensor* t : params.flat()) grads.push_back(Tensor::gaussian(t->n_rows, t->n_cols, rng));
    OptimizerConfig opt;
    opt.kind = OptimizerConfig::Kind::sgd;
    opt.lr = 0.1;
    opt.weight_decay = 0.01;
    AdamState state;
    optimizer_step(params, grads, opt, state);
    const auto a = params.flat();
    const auto b = before.flat();
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i]->size(); ++j) {
            const double expected =
                b[i]->data[j] - 0.1 * (grads[i].data[j] + 0.01 * b[i]->data[j]);
            CHECK(a[i]->data[j] == doctest::Approx(expected).epsilon(1e-15));
        }
    }
}

TEST_CASE("fedavg of identical parameter sets is the identity") {
    GatConfig cfg = tiny_model(3, 2);
    const ModelParams p = ModelParams::init(cfg, 7);
    const ModelParams avg = fedavg_aggregate({&p, &p, &p});
    const auto a = avg.flat();
    const auto b = p.flat();
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i]->size(); ++j)
            CHECK(a[i]->data[j] == doctest::Approx(b[i]->data[j]).epsilon(1e-15));
    }
}

TEST_CASE("fedavg of theta and -theta vanishes") {
    GatConfig cfg = tiny_model(3, 2);
    const ModelParams p = ModelParams::init(cfg, 9);
    ModelParams neg = p;
    for (Tensor* t : neg.flat()) {
        for (auto& v : t->data) v = -v;
    }
    const ModelParams avg = fedavg_aggregate({&p, &neg});
    for (const Tensor* t : avg.flat()) CHECK(t->max_abs() < 1e-15);
}

TEST_CASE("fedavg is permutation invariant up to roundoff") {
    GatConfig cfg = tiny_model(4, 3);
    const ModelParams a = ModelParams::init(cfg, 11);
    const ModelParams b = ModelParams::init(cfg, 12);
    const ModelParams c = ModelParams::init(cfg, 13);
    const ModelParams abc = fedavg_aggregate({&a, &b, &c});
    const ModelParams cba = fedavg_aggregate({&c, &b, &a});
    const auto fa = abc.flat();
    const auto fb = cba.flat();
    for (std::size_t i = 0; i < fa.size(); ++i) {
        for (std::size_t j = 0; j < fa[i]->size(); ++j)
            CHECK(std::abs(fa[i]->data[j] - fb[i]->data[j]) < 1e-15);
    }
}

TEST_CASE("fedavg rejects an empty contribution set") {
    CHECK_THROWS_AS(fedavg_aggregate({}), std::invalid_argument);
}

TEST_CASE("accuracy: perfect logits score 1.0") {
    Tensor logits(3, 2);
    logits.at(0, 1) = 1.0;
    logits.at(1, 0) = 1.0;
    logits.at(2, 1) = 1.0;
    CHECK(evaluate_accuracy(logits, {1, 0, 1}, {0, 1, 2}) == 1.0);
}

TEST_CASE("accuracy: constant logits tie-break to the lowest class id") {
    Tensor logits(4, 2);  // all zeros -> argmax = class 0 everywhere
    const std::vector<int> labels{0, 1, 0, 1};
    CHECK(evaluate_accuracy(logits, labels, {0, 1, 2, 3}) == doctest::Approx(0.5));
}

TEST_CASE("accuracy matches an independent confusion count") {
    std::mt19937_64 rng(17);
    Tensor logits = Tensor::gaussian(30, 4, rng);
    std::vector<int> labels(30);
    for (auto& l : labels) l = static_cast<int>(rng() % 4);
    std::vector<int> mask;
    for (int i = 0; i < 30; i += 2) mask.push_back(i);
    int correct = 0;
    for (int r : mask) {
        int best = 0;
        for (int c = 1; c < 4; ++c) {
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        }
        correct += (best == labels[static_cast<std::size_t>(r)]) ? 1 : 0;
    }
    CHECK(evaluate_accuracy(logits, labels, mask) ==
          doctest::Approx(static_cast<double>(correct) / static_cast<double>(mask.size())));
}

TEST_CASE("training losses decrease on a convex-ish start, centralized") {
    const Graph g = generate_sbm(40, 2, 0.3, 0.05, 6, 0.4, 19);
    const auto plan = expand_l_hop(g, std::vector<int>(40, 0), 1, 2);
    TrainConfig tc = tiny_train(g, ForwardVariant::centralized, 21);
    tc.rounds = 4;
    tc.local_epochs = 3;
    tc.opt.kind = OptimizerConfig::Kind::sgd;
    tc.opt.lr = 0.05;
    tc.opt.weight_decay = 0.0;
    const TrainResult res = train(tc, g, plan, nullptr);
    CHECK(res.history.rounds.back().train_loss < res.history.rounds.front().train_loss);
}

TEST_CASE("seeded reruns reproduce the history bit for bit") {
    const Graph g = generate_sbm(30, 3, 0.3, 0.05, 5, 0.4, 23);
    const auto owner = dirichlet_partition(g, 3, 1.0, 24);
    const auto plan = expand_l_hop(g, owner, 3, 2);
    const PretrainResult pre = pretrain_round(g, plan, PackageVariant::matrix, 25);
    TrainConfig tc = tiny_train(g, ForwardVariant::fedgat_matrix, 26);
    const TrainResult a = train(tc, g, plan, &pre.packages);
    const TrainResult b = train(tc, g, plan, &pre.packages);
    REQUIRE(a.history.rounds.size() == b.history.rounds.size());
    for (std::size_t i = 0; i < a.history.rounds.size(); ++i) {
        CHECK(a.history.rounds[i].train_loss == b.history.rounds[i].train_loss);
        CHECK(a.history.rounds[i].val_acc == b.history.rounds[i].val_acc);
        CHECK(a.history.rounds[i].test_acc == b.history.rounds[i].test_acc);
        CHECK(a.history.rounds[i].exchange_scalars == b.history.rounds[i].exchange_scalars);
    }
    const auto fa = a.params.flat();
    const auto fb = b.params.flat();
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i]->data == fb[i]->data);
}

TEST_CASE("matrix and vector variants trace each other at K=1") {
    const Graph g = generate_sbm(24, 2, 0.3, 0.08, 4, 0.4, 29);
    const auto plan = expand_l_hop(g, std::vector<int>(24, 0), 1, 2);
    const PretrainResult pm = pretrain_round(g, plan, PackageVariant::matrix, 31);
    const PretrainResult pv = pretrain_round(g, plan, PackageVariant::vector, 31);
    TrainConfig tm = tiny_train(g, ForwardVariant::fedgat_matrix, 33);
    TrainConfig tv = tiny_train(g, ForwardVariant::fedgat_vector, 33);
    const TrainResult rm = train(tm, g, plan, &pm.packages);
    const TrainResult rv = train(tv, g, plan, &pv.packages);
    for (std::size_t i = 0; i < rm.history.rounds.size(); ++i) {
        CHECK(std::abs(rm.history.rounds[i].train_loss - rv.history.rounds[i].train_loss) < 1e-6);
    }
}

TEST_CASE("K=1 fedgat with a near-exact series tracks centralized training") {
    // With identity psi the score function is smooth and a degree-20 fit is
    // exact to ~1e-12, so the trajectories should coincide tightly.
    Graph g = generate_sbm(24, 2, 0.3, 0.08, 4, 0.4, 37);
    const auto plan = expand_l_hop(g, std::vector<int>(24, 0), 1, 2);
    GatConfig model = tiny_model(4, 2);
    model.psi = Activation::identity();

    PackageOptions opts;
    const PretrainResult pre = pretrain_round(g, plan, PackageVariant::matrix, 39, opts);
    TrainConfig tf = tiny_train(g, ForwardVariant::fedgat_matrix, 41);
    tf.model = model;
    tf.degree = 20;
    TrainConfig tc = tf;
    tc.variant = ForwardVariant::centralized;
    const TrainResult rf = train(tf, g, plan, &pre.packages);
    const TrainResult rc = train(tc, g, plan, nullptr);
    for (std::size_t i = 0; i < rf.history.rounds.size(); ++i) {
        CHECK(std::abs(rf.history.rounds[i].train_loss - rc.history.rounds[i].train_loss) < 1e-6);
    }
}

TEST_CASE("a client without training nodes is skipped, not averaged") {
    // Three clients, train mask confined to clients 0 and 1.
    Graph g = generate_sbm(30, 3, 0.3, 0.08, 4, 0.4, 43);
    std::vector<int> owner(30);
    for (int i = 0; i < 30; ++i) owner[static_cast<std::size_t>(i)] = i % 3;
    g.train_mask.clear();
    g.val_mask.clear();
    g.test_mask.clear();
    for (int i = 0; i < 30; ++i) {
        if (i % 3 == 2) {
            g.test_mask.push_back(i);
        } else if (i % 6 < 2) {
            g.train_mask.push_back(i);
        } else {
            g.val_mask.push_back(i);
        }
    }
    const auto plan = expand_l_hop(g, owner, 3, 2);
    TrainConfig tc = tiny_train(g, ForwardVariant::distgat, 47);
    tc.rounds = 2;
    const TrainResult res = train(tc, g, plan, nullptr);
    CHECK(res.history.rounds.size() == 2);  // completes despite the idle client
}

TEST_CASE("train validates its configuration") {
    const Graph g = generate_sbm(10, 2, 0.4, 0.1, 3, 0.3, 53);
    const auto plan = expand_l_hop(g, std::vector<int>(10, 0), 1, 2);
    TrainConfig tc = tiny_train(g, ForwardVariant::fedgat_matrix, 55);
    CHECK_THROWS_AS(train(tc, g, plan, nullptr), std::invalid_argument);  // packages missing
    tc.variant = ForwardVariant::centralized;
    tc.rounds = 0;
    CHECK_THROWS_AS(train(tc, g, plan, nullptr), std::invalid_argument);
}
