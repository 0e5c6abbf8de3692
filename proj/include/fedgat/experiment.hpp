#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedgat/bounds.hpp"
#include "fedgat/graph.hpp"
#include "fedgat/package.hpp"
#include "fedgat/train.hpp"

namespace fedgat {

// Distinct error classes so the CLI can map them to exit codes.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    std::string kind = "sbm";  // sbm | random-capped | circulant | csv | json
    std::uint64_t seed = 1;
    // synthetic parameters
    int n = 600;
    int classes = 4;
    double p_in = 0.05;
    double p_out = 0.005;
    int feat_dim = 32;
    double noise = 0.6;
    int max_degree = 8;  // random-capped
    int degree = 8;      // circulant
    // file-based parameters
    std::string edges;
    std::string features;
    std::string masks;
    std::string bundle;
};

Graph load_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
    DatasetSpec dataset;
    int clients = 10;
    double beta = 10000.0;
    int hops = 2;  // defaults follow the model depth
    TrainConfig train;
    PackageOptions package_options;
    std::string out_dir;
    int repeats = 1;
    int workers = 1;
    // sweep grids
    std::vector<int> sweep_clients = {1, 2, 5, 10};
    std::vector<int> sweep_degrees = {8, 16, 24};
    std::vector<double> sweep_betas = {1.0, 10000.0};
    std::vector<std::string> sweep_modes = {"clients", "degree", "comm"};

    nlohmann::json to_json() const;
};

// Each run_* writes its artifacts under cfg.out_dir and returns the paths it
// produced. They throw ConfigError / IoError / std::runtime_error; the CLI
// maps those to exit codes.
std::vector<std::string> run_partition(const ExperimentConfig& cfg);
std::vector<std::string> run_pretrain(const ExperimentConfig& cfg);
std::vector<std::string> run_train(const ExperimentConfig& cfg, const std::string& packages_dir);
std::vector<std::string> run_verify(const ExperimentConfig& cfg, const VerifyConfig& vcfg, bool* all_pass);
std::vector<std::string> run_sweep(const ExperimentConfig& cfg);
std::vector<std::string> run_bench_comm(const ExperimentConfig& cfg);

// Training history serialization: deterministic metrics in history.csv, wall
// times split into timings.csv so reruns are byte-comparable.
void write_history_csv(const std::vector<std::pair<int, TrainHistory>>& runs, const std::string& history_path,
                       const std::string& timings_path);

}  // namespace fedgat
