#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedgat/experiment.hpp"
#include "fedgat/kernels.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void add_dataset_options(CLI::App* cmd, fedgat::DatasetSpec& spec) {
    cmd->add_option("--dataset", spec.kind, "sbm | random-capped | circulant | csv | json");
    cmd->add_option("--dataset-seed", spec.seed, "generator seed for synthetic datasets");
    cmd->add_option("--nodes", spec.n, "synthetic node count");
    cmd->add_option("--classes", spec.classes, "synthetic class count");
    cmd->add_option("--p-in", spec.p_in, "SBM intra-class edge probability");
    cmd->add_option("--p-out", spec.p_out, "SBM inter-class edge probability");
    cmd->add_option("--feat-dim", spec.feat_dim, "synthetic feature dimension");
    cmd->add_option("--noise", spec.noise, "synthetic feature noise scale");
    cmd->add_option("--max-degree", spec.max_degree, "cap for random-capped graphs");
    cmd->add_option("--ring-degree", spec.degree, "degree for circulant graphs");
    cmd->add_option("--edges", spec.edges, "edge CSV path (u,v per line)");
    cmd->add_option("--features", spec.features, "feature CSV path (label,f0,f1,... per line)");
    cmd->add_option("--masks", spec.masks, "mask JSON path (train/val/test id arrays)");
    cmd->add_option("--bundle", spec.bundle, "JSON bundle path");
}

void add_common_options(CLI::App* cmd, fedgat::ExperimentConfig& cfg, std::string& variant,
                        std::string& optimizer, std::string& kernels_backend) {
    cmd->set_config("--config", "", "INI/TOML config file; command-line flags win");
    cmd->add_option("--kernels", kernels_backend, "force kernel backend: scalar | avx2 | neon | auto");
    cmd->add_option("--out", cfg.out_dir, "output directory (default: $FEDGAT_OUT_ROOT/<command>)");
    cmd->add_option("--clients,-K", cfg.clients, "number of clients");
    cmd->add_option("--beta", cfg.beta, "Dirichlet concentration (1 = skewed, 10000 = iid)");
    cmd->add_option("--hops,-L", cfg.hops, "subgraph hop depth (default: model depth)");
    cmd->add_option("--seed", cfg.train.seed, "training / partition seed");
    cmd->add_option("--repeats", cfg.repeats, "number of seeded repeats");
    cmd->add_option("--workers", cfg.workers, "concurrent sweep workers");
    cmd->add_option("--variant", variant, "fedgat-matrix | fedgat-vector | distgat | centralized");
    cmd->add_option("--rounds,-T", cfg.train.rounds, "global training rounds");
    cmd->add_option("--local-epochs,-E", cfg.train.local_epochs, "local epochs per round");
    cmd->add_option("--client-fraction", cfg.train.client_fraction, "client sample fraction per round");
    cmd->add_option("--lr", cfg.train.opt.lr, "learning rate");
    cmd->add_option("--weight-decay", cfg.train.opt.weight_decay, "L2 regularisation");
    cmd->add_option("--optimizer", optimizer, "adam | sgd");
    cmd->add_option("--degree,-p", cfg.train.degree, "polynomial approximation degree");
    cmd->add_option("--interval-radius", cfg.train.interval_radius, "score approximation interval radius");
    cmd->add_flag("--norm-projection", cfg.train.norm_projection, "clamp parameter norms each step");
    cmd->add_flag("--persistent-optimizer", cfg.train.persistent_optimizer,
                  "keep per-client Adam state across rounds (ablation)");
    cmd->add_flag("--weighted-average", cfg.train.weighted_average, "size-weighted FedAvg (ablation)");
    cmd->add_option("--layers", cfg.train.model.layers, "GAT depth");
    cmd->add_option("--hidden", cfg.train.model.hidden_dim, "hidden dimension per head");
    cmd->add_option("--heads", cfg.train.model.heads, "attention heads on hidden layers");
    cmd->add_option("--heads-out", cfg.train.model.heads_out, "attention heads on the output layer");
    cmd->add_flag("!--no-self-loops", cfg.train.model.self_loops, "disable model-level self loops");
    cmd->add_flag("!--no-drop-single-cross", cfg.package_options.drop_single_cross,
                  "keep lone cross-client neighbors in packages");
}

std::string default_out(const std::string& sub) {
    if (const char* root = std::getenv("FEDGAT_OUT_ROOT"); root != nullptr && *root != '\0') {
        return std::string(root) + "/" + sub;
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated GAT training simulator with one-shot pre-training exchange"};
    app.require_subcommand(1);
    std::string kernels_backend;

    fedgat::ExperimentConfig cfg;
    std::string variant = "fedgat-matrix";
    std::string optimizer = "adam";
    std::string packages_dir;

    auto* partition = app.add_subcommand("partition", "partition a graph and write the plan");
    add_dataset_options(partition, cfg.dataset);
    add_common_options(partition, cfg, variant, optimizer, kernels_backend);

    auto* pretrain = app.add_subcommand("pretrain", "run the one-shot package exchange");
    add_dataset_options(pretrain, cfg.dataset);
    add_common_options(pretrain, cfg, variant, optimizer, kernels_backend);

    auto* train_cmd = app.add_subcommand("train", "federated training");
    add_dataset_options(train_cmd, cfg.dataset);
    add_common_options(train_cmd, cfg, variant, optimizer, kernels_backend);
    train_cmd->add_option("--packages", packages_dir, "directory holding manifest.json/payload.bin/plan.json");

    auto* verify = app.add_subcommand("verify", "run the error-bound and accounting checks");
    add_dataset_options(verify, cfg.dataset);
    add_common_options(verify, cfg, variant, optimizer, kernels_backend);
    fedgat::VerifyConfig vcfg;
    verify->add_option("--verify-seed", vcfg.seed, "verification seed");
    verify->add_option("--coeff-instances", vcfg.coeff_instances, "neighborhood instances");
    verify->add_option("--propagation-instances", vcfg.propagation_instances, "two-layer instances");

    auto* sweep = app.add_subcommand("sweep", "grid runs emitting figure-ready CSVs");
    add_dataset_options(sweep, cfg.dataset);
    add_common_options(sweep, cfg, variant, optimizer, kernels_backend);
    sweep->add_option("--sweep-clients", cfg.sweep_clients, "client counts to sweep");
    sweep->add_option("--sweep-degrees", cfg.sweep_degrees, "approximation degrees to sweep");
    sweep->add_option("--sweep-betas", cfg.sweep_betas, "Dirichlet betas to sweep");
    sweep->add_option("--modes", cfg.sweep_modes, "subset of: clients degree comm");

    auto* bench = app.add_subcommand("bench-comm", "communication accounting only (no training)");
    add_dataset_options(bench, cfg.dataset);
    add_common_options(bench, cfg, variant, optimizer, kernels_backend);
    bench->add_option("--sweep-clients", cfg.sweep_clients, "client counts to sweep");
    bench->add_option("--sweep-betas", cfg.sweep_betas, "Dirichlet betas to sweep");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!kernels_backend.empty()) fedgat::kernels::select(kernels_backend);
        if (optimizer == "adam") {
            cfg.train.opt.kind = fedgat::OptimizerConfig::Kind::adam;
        } else if (optimizer == "sgd") {
            cfg.train.opt.kind = fedgat::OptimizerConfig::Kind::sgd;
        } else {
            throw fedgat::ConfigError("--optimizer must be adam or sgd");
        }
        cfg.train.variant = fedgat::parse_variant(variant);
        for (CLI::App* sub : {partition, pretrain, train_cmd, verify, sweep, bench}) {
            if (sub->parsed() && cfg.out_dir.empty()) {
                cfg.out_dir = default_out(sub->get_name());
                if (cfg.out_dir.empty())
                    throw fedgat::ConfigError("--out is required (or set FEDGAT_OUT_ROOT)");
            }
        }

        std::vector<std::string> outputs;
        if (partition->parsed()) {
            outputs = fedgat::run_partition(cfg);
        } else if (pretrain->parsed()) {
            outputs = fedgat::run_pretrain(cfg);
        } else if (train_cmd->parsed()) {
            const bool fed = cfg.train.variant == fedgat::ForwardVariant::fedgat_matrix ||
                             cfg.train.variant == fedgat::ForwardVariant::fedgat_vector;
            if (fed && packages_dir.empty())
                throw fedgat::ConfigError("fedgat variants need --packages (run `pretrain` first)");
            outputs = fedgat::run_train(cfg, packages_dir);
        } else if (verify->parsed()) {
            vcfg.degree = cfg.train.degree;
            vcfg.interval_radius = cfg.train.interval_radius;
            vcfg.psi = cfg.train.model.psi;
            vcfg.phi = cfg.train.model.phi_hidden;
            bool all_pass = false;
            outputs = fedgat::run_verify(cfg, vcfg, &all_pass);
            for (const auto& path : outputs) std::cout << path << '\n';
            if (!all_pass) {
                std::cerr << "verification FAILED (see report)\n";
                return kExitNumeric;
            }
            std::cout << "verification passed\n";
            return 0;
        } else if (sweep->parsed()) {
            outputs = fedgat::run_sweep(cfg);
        } else if (bench->parsed()) {
            outputs = fedgat::run_bench_comm(cfg);
        }
        for (const auto& path : outputs) std::cout << path << '\n';
        return 0;
    } catch (const fedgat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fedgat::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
