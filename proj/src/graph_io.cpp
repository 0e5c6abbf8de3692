#include "fedgat/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedgat {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

int parse_int(const std::string& s, const std::string& path, std::size_t line) {
    int v = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{}) parse_fail(path, line, "expected integer, got '" + s + "'");
    return v;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "expected number, got '" + s + "'");
    }
}

Graph finish(Graph g) {
    g.normalize_features();
    g.validate();
    return g;
}

}  // namespace

Graph load_graph_csv(const std::string& edge_path, const std::string& feature_path,
                     const std::string& mask_path) {
    Graph g;

    // Features and labels; row index is the node id.
    {
        std::ifstream in = open_or_throw(feature_path);
        std::string line;
        std::size_t lineno = 0;
        std::vector<double> flat;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto fields = split_csv(line);
            if (fields.size() < 2) parse_fail(feature_path, lineno, "need label plus at least one feature");
            if (g.feat_dim == 0) {
                g.feat_dim = static_cast<int>(fields.size()) - 1;
            } else if (static_cast<int>(fields.size()) - 1 != g.feat_dim) {
                parse_fail(feature_path, lineno, "inconsistent feature count");
            }
            g.labels.push_back(parse_int(fields[0], feature_path, lineno));
            for (std::size_t i = 1; i < fields.size(); ++i)
                flat.push_back(parse_double(fields[i], feature_path, lineno));
        }
        g.n_nodes = static_cast<int>(g.labels.size());
        if (g.n_nodes == 0) throw std::runtime_error(feature_path + ": no nodes");
        g.features = Tensor(g.n_nodes, g.feat_dim, std::move(flat));
        g.n_classes = *std::max_element(g.labels.begin(), g.labels.end()) + 1;
        for (std::size_t i = 0; i < g.labels.size(); ++i) {
            if (g.labels[i] < 0) parse_fail(feature_path, i + 1, "negative label");
        }
    }

    // Edges, deduplicated and normalized to u < v; self-loops rejected.
    {
        std::ifstream in = open_or_throw(edge_path);
        std::string line;
        std::size_t lineno = 0;
        std::set<std::pair<int, int>> seen;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto fields = split_csv(line);
            if (fields.size() != 2) parse_fail(edge_path, lineno, "expected 'u,v'");
            int u = parse_int(fields[0], edge_path, lineno);
            int v = parse_int(fields[1], edge_path, lineno);
            if (u < 0 || v < 0 || u >= g.n_nodes || v >= g.n_nodes)
                parse_fail(edge_path, lineno, "edge endpoint out of range");
            if (u == v) parse_fail(edge_path, lineno, "self-loop not allowed");
            if (u > v) std::swap(u, v);
            seen.emplace(u, v);
        }
        g.edges.assign(seen.begin(), seen.end());
    }

    // Masks.
    {
        std::ifstream in = open_or_throw(mask_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw std::runtime_error(mask_path + ": " + e.what());
        }
        g.train_mask = j.at("train").get<std::vector<int>>();
        g.val_mask = j.at("val").get<std::vector<int>>();
        g.test_mask = j.at("test").get<std::vector<int>>();
        std::sort(g.train_mask.begin(), g.train_mask.end());
        std::sort(g.val_mask.begin(), g.val_mask.end());
        std::sort(g.test_mask.begin(), g.test_mask.end());
    }
    return finish(std::move(g));
}

Graph load_graph_json(const std::string& bundle_path) {
    std::ifstream in = open_or_throw(bundle_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(bundle_path + ": " + e.what());
    }
    Graph g;
    g.n_nodes = j.at("n_nodes").get<int>();
    g.feat_dim = j.at("feat_dim").get<int>();
    g.n_classes = j.at("n_classes").get<int>();
    g.labels = j.at("labels").get<std::vector<int>>();
    auto flat = j.at("features").get<std::vector<double>>();
    g.features = Tensor(g.n_nodes, g.feat_dim, std::move(flat));
    std::set<std::pair<int, int>> seen;
    for (const auto& e : j.at("edges")) {
        int u = e.at(0).get<int>();
        int v = e.at(1).get<int>();
        if (u == v) throw std::runtime_error(bundle_path + ": self-loop in edge list");
        if (u > v) std::swap(u, v);
        seen.emplace(u, v);
    }
    g.edges.assign(seen.begin(), seen.end());
    g.train_mask = j.at("train").get<std::vector<int>>();
    g.val_mask = j.at("val").get<std::vector<int>>();
    g.test_mask = j.at("test").get<std::vector<int>>();
    std::sort(g.train_mask.begin(), g.train_mask.end());
    std::sort(g.val_mask.begin(), g.val_mask.end());
    std::sort(g.test_mask.begin(), g.test_mask.end());
    return finish(std::move(g));
}

void save_graph_json(const Graph& g, const std::string& bundle_path) {
    json j;
    j["n_nodes"] = g.n_nodes;
    j["feat_dim"] = g.feat_dim;
    j["n_classes"] = g.n_classes;
    j["labels"] = g.labels;
    j["features"] = g.features.data;
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    j["train"] = g.train_mask;
    j["val"] = g.val_mask;
    j["test"] = g.test_mask;
    std::ofstream out(bundle_path);
    if (!out) throw std::runtime_error("cannot write " + bundle_path);
    out << j.dump() << '\n';
}

void save_graph_csv(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                    const std::string& mask_path) {
    {
        std::ofstream out(edge_path);
        if (!out) throw std::runtime_error("cannot write " + edge_path);
        for (const auto& [u, v] : g.edges) out << u << ',' << v << '\n';
    }
    {
        std::ofstream out(feature_path);
        if (!out) throw std::runtime_error("cannot write " + feature_path);
        out.precision(17);
        for (int i = 0; i < g.n_nodes; ++i) {
            out << g.labels[static_cast<std::size_t>(i)];
            const double* row = g.features.row_ptr(i);
            for (int c = 0; c < g.feat_dim; ++c) out << ',' << row[c];
            out << '\n';
        }
    }
    {
        json j;
        j["train"] = g.train_mask;
        j["val"] = g.val_mask;
        j["test"] = g.test_mask;
        std::ofstream out(mask_path);
        if (!out) throw std::runtime_error("cannot write " + mask_path);
        out << j.dump() << '\n';
    }
}

}  // namespace fedgat
