#pragma once

#include <string>

#include "fedgat/graph.hpp"

namespace fedgat {

// CSV pair format: one "u,v" edge per line; a feature file whose row i is
// "label,f0,f1,..." for node i; and a JSON mask file with "train"/"val"/
// "test" id arrays. Features are L2-clamped on load.
Graph load_graph_csv(const std::string& edge_path, const std::string& feature_path,
                     const std::string& mask_path);

// Single-file JSON bundle holding the same content.
Graph load_graph_json(const std::string& bundle_path);

void save_graph_json(const Graph& g, const std::string& bundle_path);
void save_graph_csv(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                    const std::string& mask_path);

}  // namespace fedgat
