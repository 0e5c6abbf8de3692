#include "fedgat/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "fedgat/cheb.hpp"
#include "fedgat/graph_io.hpp"

namespace fedgat {

namespace fs = std::filesystem;
using nlohmann::json;

Graph load_dataset(const DatasetSpec& spec) {
    if (spec.kind == "sbm") {
        return generate_sbm(spec.n, spec.classes, spec.p_in, spec.p_out, spec.feat_dim, spec.noise, spec.seed);
    }
    if (spec.kind == "random-capped") {
        return generate_random_capped(spec.n, spec.max_degree, spec.classes, spec.feat_dim, spec.noise, spec.seed);
    }
    if (spec.kind == "circulant") {
        return generate_circulant(spec.n, spec.degree, spec.feat_dim, spec.seed);
    }
    if (spec.kind == "csv") {
        if (spec.edges.empty() || spec.features.empty() || spec.masks.empty())
            throw ConfigError("csv dataset needs --edges, --features and --masks");
        return load_graph_csv(spec.edges, spec.features, spec.masks);
    }
    if (spec.kind == "json") {
        if (spec.bundle.empty()) throw ConfigError("json dataset needs --bundle");
        return load_graph_json(spec.bundle);
    }
    throw ConfigError("unknown dataset kind '" + spec.kind + "'");
}

json ExperimentConfig::to_json() const {
    json j;
    j["dataset"] = {{"kind", dataset.kind},       {"seed", dataset.seed},
                    {"n", dataset.n},             {"classes", dataset.classes},
                    {"p_in", dataset.p_in},       {"p_out", dataset.p_out},
                    {"feat_dim", dataset.feat_dim}, {"noise", dataset.noise},
                    {"max_degree", dataset.max_degree}, {"degree", dataset.degree},
                    {"edges", dataset.edges},     {"features", dataset.features},
                    {"masks", dataset.masks},     {"bundle", dataset.bundle}};
    j["clients"] = clients;
    j["beta"] = beta;
    j["hops"] = hops;
    j["repeats"] = repeats;
    j["workers"] = workers;
    j["package_options"] = {{"self_loops", package_options.self_loops},
                            {"drop_single_cross", package_options.drop_single_cross}};
    j["train"] = {{"rounds", train.rounds},
                  {"local_epochs", train.local_epochs},
                  {"client_fraction", train.client_fraction},
                  {"seed", train.seed},
                  {"variant", variant_name(train.variant)},
                  {"degree", train.degree},
                  {"interval_radius", train.interval_radius},
                  {"norm_projection", train.norm_projection},
                  {"persistent_optimizer", train.persistent_optimizer},
                  {"weighted_average", train.weighted_average},
                  {"optimizer",
                   {{"kind", train.opt.kind == OptimizerConfig::Kind::adam ? "adam" : "sgd"},
                    {"lr", train.opt.lr},
                    {"weight_decay", train.opt.weight_decay},
                    {"beta1", train.opt.beta1},
                    {"beta2", train.opt.beta2},
                    {"eps", train.opt.eps}}},
                  {"model",
                   {{"layers", train.model.layers},
                    {"hidden_dim", train.model.hidden_dim},
                    {"heads", train.model.heads},
                    {"heads_out", train.model.heads_out},
                    {"self_loops", train.model.self_loops}}}};
    return j;
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

void write_resolved_config(const ExperimentConfig& cfg, const std::string& dir) {
    write_text(dir + "/resolved_config.json", cfg.to_json().dump(2) + "\n");
}

PartitionPlan make_plan(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed) {
    auto owner = dirichlet_partition(g, cfg.clients, cfg.beta, seed);
    const int hops = cfg.hops > 0 ? cfg.hops : cfg.train.model.layers;
    return expand_l_hop(g, std::move(owner), cfg.clients, hops);
}

json ledger_json(const CommLedger& ledger) {
    return json{{"variant", ledger.variant},
                {"upload_total", ledger.upload_total},
                {"download_total", ledger.download_total},
                {"upload_per_client", ledger.upload_per_client},
                {"download_per_client", ledger.download_per_client}};
}

GatConfig resolve_model(const Graph& g, GatConfig model) {
    model.in_dim = g.feat_dim;
    model.n_classes = g.n_classes;
    return model;
}

TrainResult run_one_training(const ExperimentConfig& cfg, const Graph& g, std::uint64_t seed,
                             ForwardVariant variant, double beta, int degree) {
    ExperimentConfig local = cfg;
    local.beta = beta;
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.variant = variant;
    tc.degree = degree;
    tc.model = resolve_model(g, tc.model);

    const int clients = variant == ForwardVariant::centralized ? 1 : cfg.clients;
    local.clients = clients;
    const PartitionPlan plan = make_plan(g, local, seed);

    const bool fed = variant == ForwardVariant::fedgat_matrix || variant == ForwardVariant::fedgat_vector;
    if (fed) {
        const PackageVariant pv =
            variant == ForwardVariant::fedgat_matrix ? PackageVariant::matrix : PackageVariant::vector;
        PackageOptions opts = cfg.package_options;
        opts.self_loops = tc.model.self_loops;
        const PretrainResult pre = pretrain_round(g, plan, pv, seed, opts);
        return train(tc, g, plan, &pre.packages);
    }
    return train(tc, g, plan, nullptr);
}

}  // namespace

void write_history_csv(const std::vector<std::pair<int, TrainHistory>>& runs, const std::string& history_path,
                       const std::string& timings_path) {
    std::ofstream hist(history_path);
    if (!hist) throw IoError("cannot write " + history_path);
    std::ofstream tim(timings_path);
    if (!tim) throw IoError("cannot write " + timings_path);
    hist.precision(17);
    hist << "run,round,train_loss,val_acc,test_acc,exchange_scalars\n";
    tim << "run,round,wall_ms\n";
    for (const auto& [run, history] : runs) {
        for (const auto& rec : history.rounds) {
            hist << run << ',' << rec.round << ',' << rec.train_loss << ',' << rec.val_acc << ',' << rec.test_acc
                 << ',' << rec.exchange_scalars << '\n';
            tim << run << ',' << rec.round << ',' << rec.wall_ms << '\n';
        }
    }
}

std::vector<std::string> run_partition(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    const Graph g = load_dataset(cfg.dataset);
    const PartitionPlan plan = make_plan(g, cfg, cfg.train.seed);

    const std::string plan_path = cfg.out_dir + "/plan.json";
    write_text(plan_path, plan_to_json(plan) + "\n");

    json stats;
    stats["n_clients"] = plan.n_clients;
    stats["hops"] = plan.hops;
    stats["owned_counts"] = plan.owned_counts();
    stats["cross_edges"] = plan.cross_edges.size();
    stats["b_l"] = plan.max_subgraph_size();
    std::vector<std::size_t> sizes;
    for (const auto& nodes : plan.client_nodes) sizes.push_back(nodes.size());
    stats["subgraph_sizes"] = sizes;
    const std::string stats_path = cfg.out_dir + "/partition_stats.json";
    write_text(stats_path, stats.dump(2) + "\n");
    write_resolved_config(cfg, cfg.out_dir);
    return {plan_path, stats_path};
}

std::vector<std::string> run_pretrain(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    const Graph g = load_dataset(cfg.dataset);
    const PartitionPlan plan = make_plan(g, cfg, cfg.train.seed);
    const PackageVariant pv = cfg.train.variant == ForwardVariant::fedgat_vector ? PackageVariant::vector
                                                                                 : PackageVariant::matrix;
    PackageOptions opts = cfg.package_options;
    opts.self_loops = cfg.train.model.self_loops;
    const PretrainResult pre = pretrain_round(g, plan, pv, cfg.train.seed, opts);

    const std::string manifest = cfg.out_dir + "/manifest.json";
    const std::string payload = cfg.out_dir + "/payload.bin";
    save_packages(pre.packages, manifest, payload);
    const std::string ledger_path = cfg.out_dir + "/ledger.json";
    write_text(ledger_path, ledger_json(pre.ledger).dump(2) + "\n");
    write_text(cfg.out_dir + "/plan.json", plan_to_json(plan) + "\n");
    // The shared score series the clients will evaluate, for reproducibility.
    const PowerSeries ps =
        fit_score_series(cfg.train.model.psi, cfg.train.interval_radius, cfg.train.degree);
    write_text(cfg.out_dir + "/score_series.json", power_series_to_json(ps) + "\n");
    write_resolved_config(cfg, cfg.out_dir);
    return {manifest, payload, ledger_path};
}

std::vector<std::string> run_train(const ExperimentConfig& cfg, const std::string& packages_dir) {
    ensure_dir(cfg.out_dir);
    const Graph g = load_dataset(cfg.dataset);
    TrainConfig tc = cfg.train;
    tc.model = resolve_model(g, tc.model);
    const bool fed =
        tc.variant == ForwardVariant::fedgat_matrix || tc.variant == ForwardVariant::fedgat_vector;

    std::vector<std::pair<int, TrainHistory>> runs;
    std::vector<double> final_test, final_val;
    ModelParams last_params;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        const std::uint64_t seed = cfg.train.seed + static_cast<std::uint64_t>(rep);
        TrainResult res;
        if (fed && !packages_dir.empty()) {
            // Pretrain-once workflow: reuse stored packages and plan.
            const PretrainPackages pkgs =
                load_packages(packages_dir + "/manifest.json", packages_dir + "/payload.bin");
            std::ifstream pin(packages_dir + "/plan.json");
            if (!pin) throw IoError("cannot open " + packages_dir + "/plan.json");
            std::string text((std::istreambuf_iterator<char>(pin)), std::istreambuf_iterator<char>());
            const PartitionPlan plan = plan_from_json(text);
            TrainConfig tcr = tc;
            tcr.seed = seed;
            res = train(tcr, g, plan, &pkgs);
        } else {
            res = run_one_training(cfg, g, seed, tc.variant, cfg.beta, tc.degree);
        }
        final_test.push_back(res.history.rounds.back().test_acc);
        final_val.push_back(res.history.rounds.back().val_acc);
        runs.emplace_back(rep, std::move(res.history));
        if (rep == cfg.repeats - 1) last_params = std::move(res.params);
    }

    const std::string history = cfg.out_dir + "/history.csv";
    const std::string timings = cfg.out_dir + "/timings.csv";
    write_history_csv(runs, history, timings);

    auto mean_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto [test_mean, test_std] = mean_std(final_test);
    const auto [val_mean, val_std] = mean_std(final_val);
    json summary;
    summary["repeats"] = cfg.repeats;
    summary["variant"] = variant_name(tc.variant);
    summary["final_test_acc"] = {{"mean", test_mean}, {"std", test_std}, {"values", final_test}};
    summary["final_val_acc"] = {{"mean", val_mean}, {"std", val_std}, {"values", final_val}};
    const std::string summary_path = cfg.out_dir + "/summary.json";
    write_text(summary_path, summary.dump(2) + "\n");

    save_checkpoint(last_params, cfg.out_dir + "/model");
    write_resolved_config(cfg, cfg.out_dir);
    return {history, timings, summary_path, cfg.out_dir + "/model.json", cfg.out_dir + "/model.bin"};
}

std::vector<std::string> run_verify(const ExperimentConfig& cfg, const VerifyConfig& vcfg, bool* all_pass) {
    ensure_dir(cfg.out_dir);
    const VerifyReport report = run_verification(vcfg);
    const std::string path = cfg.out_dir + "/verify_report.json";
    write_text(path, report.to_json().dump(2) + "\n");
    write_resolved_config(cfg, cfg.out_dir);
    if (all_pass != nullptr) *all_pass = report.all_pass();
    return {path};
}

std::vector<std::string> run_sweep(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    const Graph g = load_dataset(cfg.dataset);
    write_resolved_config(cfg, cfg.out_dir);

    struct Cell {
        std::string mode;
        int clients = 1;
        double beta = 1.0;
        int degree = 16;
        std::string variant;
        std::uint64_t seed = 1;
    };
    std::vector<Cell> cells;
    const bool want = [&cfg](const std::string& m) {
        return std::find(cfg.sweep_modes.begin(), cfg.sweep_modes.end(), m) != cfg.sweep_modes.end();
    }("clients");
    if (want) {
        for (int K : cfg.sweep_clients) {
            for (double beta : cfg.sweep_betas) {
                for (const std::string& variant : {std::string("fedgat-matrix"), std::string("distgat")}) {
                    for (int rep = 0; rep < cfg.repeats; ++rep) {
                        cells.push_back({"clients", K, beta, cfg.train.degree, variant,
                                         cfg.train.seed + static_cast<std::uint64_t>(rep)});
                    }
                }
            }
        }
    }
    if (std::find(cfg.sweep_modes.begin(), cfg.sweep_modes.end(), "degree") != cfg.sweep_modes.end()) {
        for (int p : cfg.sweep_degrees) {
            for (double beta : cfg.sweep_betas) {
                for (int rep = 0; rep < cfg.repeats; ++rep) {
                    cells.push_back({"degree", cfg.clients, beta, p, "fedgat-matrix",
                                     cfg.train.seed + static_cast<std::uint64_t>(rep)});
                }
            }
        }
    }
    if (std::find(cfg.sweep_modes.begin(), cfg.sweep_modes.end(), "comm") != cfg.sweep_modes.end()) {
        for (int K : cfg.sweep_clients) {
            for (double beta : cfg.sweep_betas) {
                for (const std::string& variant : {std::string("fedgat-matrix"), std::string("fedgat-vector")}) {
                    for (int rep = 0; rep < cfg.repeats; ++rep) {
                        cells.push_back({"comm", K, beta, cfg.train.degree, variant,
                                         cfg.train.seed + static_cast<std::uint64_t>(rep)});
                    }
                }
            }
        }
    }

    struct CellResult {
        bool ok = false;
        std::string error;
        double test_acc = 0.0;
        std::int64_t download = 0;
        std::int64_t upload = 0;
    };
    std::vector<CellResult> results(cells.size());

    std::mutex next_mutex;
    std::size_t next_cell = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next_cell >= cells.size()) return;
                idx = next_cell++;
            }
            const Cell& cell = cells[idx];
            CellResult& res = results[idx];
            try {
                if (cell.mode == "comm") {
                    ExperimentConfig local = cfg;
                    local.clients = cell.clients;
                    local.beta = cell.beta;
                    const PartitionPlan plan = make_plan(g, local, cell.seed);
                    PackageOptions opts = cfg.package_options;
                    opts.self_loops = cfg.train.model.self_loops;
                    const PackageVariant pv = cell.variant == "fedgat-vector" ? PackageVariant::vector
                                                                              : PackageVariant::matrix;
                    const CommLedger ledger = comm_ledger_only(g, plan, pv, opts);
                    res.download = ledger.download_total;
                    res.upload = ledger.upload_total;
                } else {
                    ExperimentConfig local = cfg;
                    local.clients = cell.clients;
                    local.beta = cell.beta;
                    const TrainResult tr =
                        run_one_training(local, g, cell.seed, parse_variant(cell.variant), cell.beta, cell.degree);
                    res.test_acc = tr.history.rounds.back().test_acc;
                }
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };
    const int n_workers = std::max(1, cfg.workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<std::string> outputs;
    json failures = json::array();
    {
        std::ofstream acc_clients(cfg.out_dir + "/acc_vs_clients.csv");
        std::ofstream acc_degree(cfg.out_dir + "/acc_vs_degree.csv");
        std::ofstream comm(cfg.out_dir + "/comm_vs_clients.csv");
        if (!acc_clients || !acc_degree || !comm) throw IoError("cannot write sweep outputs");
        acc_clients.precision(17);
        acc_degree.precision(17);
        acc_clients << "clients,beta,variant,seed,test_acc\n";
        acc_degree << "degree,beta,seed,test_acc\n";
        comm << "clients,beta,variant,seed,download_scalars,upload_scalars\n";
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const Cell& cell = cells[i];
            const CellResult& res = results[i];
            if (!res.ok) {
                failures.push_back({{"mode", cell.mode},
                                    {"clients", cell.clients},
                                    {"beta", cell.beta},
                                    {"degree", cell.degree},
                                    {"variant", cell.variant},
                                    {"seed", cell.seed},
                                    {"error", res.error}});
                continue;
            }
            if (cell.mode == "clients") {
                acc_clients << cell.clients << ',' << cell.beta << ',' << cell.variant << ',' << cell.seed << ','
                            << res.test_acc << '\n';
            } else if (cell.mode == "degree") {
                acc_degree << cell.degree << ',' << cell.beta << ',' << cell.seed << ',' << res.test_acc << '\n';
            } else {
                comm << cell.clients << ',' << cell.beta << ',' << cell.variant << ',' << cell.seed << ','
                     << res.download << ',' << res.upload << '\n';
            }
        }
        outputs = {cfg.out_dir + "/acc_vs_clients.csv", cfg.out_dir + "/acc_vs_degree.csv",
                   cfg.out_dir + "/comm_vs_clients.csv"};
    }
    write_text(cfg.out_dir + "/failures.json", failures.dump(2) + "\n");
    outputs.push_back(cfg.out_dir + "/failures.json");
    return outputs;
}

std::vector<std::string> run_bench_comm(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    const Graph g = load_dataset(cfg.dataset);
    write_resolved_config(cfg, cfg.out_dir);
    const std::string path = cfg.out_dir + "/comm_vs_clients.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "clients,beta,variant,seed,download_scalars,upload_scalars\n";
    for (int K : cfg.sweep_clients) {
        for (double beta : cfg.sweep_betas) {
            for (int rep = 0; rep < cfg.repeats; ++rep) {
                const std::uint64_t seed = cfg.train.seed + static_cast<std::uint64_t>(rep);
                ExperimentConfig local = cfg;
                local.clients = K;
                local.beta = beta;
                const PartitionPlan plan = make_plan(g, local, seed);
                PackageOptions opts = cfg.package_options;
                opts.self_loops = cfg.train.model.self_loops;
                for (PackageVariant pv : {PackageVariant::matrix, PackageVariant::vector}) {
                    const CommLedger ledger = comm_ledger_only(g, plan, pv, opts);
                    out << K << ',' << beta << ',' << (pv == PackageVariant::matrix ? "fedgat-matrix" : "fedgat-vector")
                        << ',' << seed << ',' << ledger.download_total << ',' << ledger.upload_total << '\n';
                }
            }
        }
    }
    return {path};
}

}  // namespace fedgat
