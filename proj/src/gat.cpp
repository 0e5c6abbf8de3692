#include "fedgat/gat.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedgat {

using nlohmann::json;

std::vector<LayerConfig> make_layer_configs(const GatConfig& cfg) {
    if (cfg.layers < 1) throw std::invalid_argument("gat: need at least one layer");
    std::vector<LayerConfig> out;
    int in_dim = cfg.in_dim;
    for (int l = 0; l < cfg.layers; ++l) {
        LayerConfig lc;
        lc.in_dim = in_dim;
        lc.psi = cfg.psi;
        const bool last = (l == cfg.layers - 1);
        if (last) {
            lc.out_dim = cfg.n_classes;
            lc.heads = cfg.heads_out;
            lc.phi = Activation::identity();  // logits feed the softmax loss
            lc.merge = HeadMerge::average;
        } else {
            lc.out_dim = cfg.hidden_dim;
            lc.heads = cfg.heads;
            lc.phi = cfg.phi_hidden;
            lc.merge = HeadMerge::concat;
        }
        out.push_back(lc);
        in_dim = last ? lc.out_dim : lc.out_dim * lc.heads;
    }
    return out;
}

ModelParams ModelParams::init(const GatConfig& cfg, std::uint64_t seed) {
    ModelParams p;
    p.config = cfg;
    p.layer_cfgs = make_layer_configs(cfg);
    std::mt19937_64 rng(seed);
    for (const auto& lc : p.layer_cfgs) {
        std::vector<HeadParams> heads;
        const double w_std = std::sqrt(2.0 / static_cast<double>(lc.in_dim + lc.out_dim));
        const double a_std = std::sqrt(1.0 / static_cast<double>(lc.out_dim));
        for (int h = 0; h < lc.heads; ++h) {
            HeadParams hp;
            hp.W = Tensor::gaussian(lc.out_dim, lc.in_dim, rng, w_std);
            hp.a1 = Tensor::gaussian(lc.out_dim, 1, rng, a_std);
            hp.a2 = Tensor::gaussian(lc.out_dim, 1, rng, a_std);
            heads.push_back(std::move(hp));
        }
        p.layers.push_back(std::move(heads));
    }
    return p;
}

std::vector<Tensor*> ModelParams::flat() {
    std::vector<Tensor*> out;
    for (auto& layer : layers) {
        for (auto& head : layer) {
            out.push_back(&head.W);
            out.push_back(&head.a1);
            out.push_back(&head.a2);
        }
    }
    return out;
}

std::vector<const Tensor*> ModelParams::flat() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers) {
        for (const auto& head : layer) {
            out.push_back(&head.W);
            out.push_back(&head.a1);
            out.push_back(&head.a2);
        }
    }
    return out;
}

double spectral_norm(const Tensor& m, int power_iterations) {
    // Power iteration on M'M with a deterministic start vector.
    std::vector<double> v(static_cast<std::size_t>(m.n_cols), 1.0 / std::sqrt(static_cast<double>(m.n_cols)));
    std::vector<double> mv(static_cast<std::size_t>(m.n_rows), 0.0);
    double sigma = 0.0;
    for (int it = 0; it < power_iterations; ++it) {
        for (std::int64_t r = 0; r < m.n_rows; ++r) {
            double s = 0.0;
            const double* row = m.row_ptr(r);
            for (std::int64_t c = 0; c < m.n_cols; ++c) s += row[c] * v[static_cast<std::size_t>(c)];
            mv[static_cast<std::size_t>(r)] = s;
        }
        std::vector<double> w(static_cast<std::size_t>(m.n_cols), 0.0);
        for (std::int64_t r = 0; r < m.n_rows; ++r) {
            const double* row = m.row_ptr(r);
            for (std::int64_t c = 0; c < m.n_cols; ++c) w[static_cast<std::size_t>(c)] += row[c] * mv[static_cast<std::size_t>(r)];
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / norm;
        double mv_norm = 0.0;
        for (double x : mv) mv_norm += x * x;
        sigma = std::sqrt(mv_norm);
    }
    return sigma;
}

void ModelParams::project_norms(int power_iterations) {
    for (auto& layer : layers) {
        for (auto& head : layer) {
            const double sigma = spectral_norm(head.W, power_iterations);
            if (sigma > 1.0) {
                for (auto& v : head.W.data) v /= sigma;
            }
            for (Tensor* a : {&head.a1, &head.a2}) {
                const double norm = a->l2_norm();
                if (norm > 1.0) {
                    for (auto& v : a->data) v /= norm;
                }
            }
        }
    }
}

double ModelParams::max_spectral_norm(int power_iterations) const {
    double worst = 0.0;
    for (const auto& layer : layers) {
        for (const auto& head : layer) worst = std::max(worst, spectral_norm(head.W, power_iterations));
    }
    return worst;
}

double attention_score(const HeadParams& head, Activation psi, const Tensor& h_i, const Tensor& h_j) {
    const std::int64_t out = head.W.n_rows;
    const std::int64_t in = head.W.n_cols;
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t r = 0; r < out; ++r) {
        const double* row = head.W.row_ptr(r);
        double wi = 0.0, wj = 0.0;
        for (std::int64_t c = 0; c < in; ++c) {
            wi += row[c] * h_i.data[static_cast<std::size_t>(c)];
            wj += row[c] * h_j.data[static_cast<std::size_t>(c)];
        }
        s1 += head.a1.data[static_cast<std::size_t>(r)] * wi;
        s2 += head.a2.data[static_cast<std::size_t>(r)] * wj;
    }
    const double e = std::exp(psi(s1 + s2));
    if (!std::isfinite(e)) throw std::runtime_error("attention_score: non-finite score (parameter blow-up?)");
    return e;
}

std::vector<double> attention_coeffs(const std::vector<double>& scores) {
    if (scores.empty()) throw std::invalid_argument("attention_coeffs: empty neighborhood");
    double total = 0.0;
    for (double s : scores) total += s;
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] / total;
    return out;
}

PairList build_pairs(const std::vector<std::vector<int>>& adj, const std::vector<int>& nodes, bool self_loops) {
    // Local index per global node.
    std::vector<int> local(adj.size(), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);

    std::vector<int> dst;
    std::vector<int> src;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int g = nodes[i];
        if (self_loops) {
            dst.push_back(static_cast<int>(i));
            src.push_back(static_cast<int>(i));
        }
        for (int nb : adj[static_cast<std::size_t>(g)]) {
            const int lj = local[static_cast<std::size_t>(nb)];
            if (lj >= 0) {
                dst.push_back(static_cast<int>(i));
                src.push_back(lj);
            }
        }
    }
    PairList out;
    out.dst = make_indices(std::move(dst));
    out.src = make_indices(std::move(src));
    out.n_nodes = static_cast<int>(nodes.size());
    return out;
}

NodeId gat_layer(Tape& tape, NodeId h, const std::vector<std::vector<NodeId>>& head_param_ids, int layer,
                 const LayerConfig& cfg, const PairList& pairs) {
    std::vector<NodeId> head_outputs;
    for (int hd = 0; hd < cfg.heads; ++hd) {
        const auto& ids = head_param_ids[static_cast<std::size_t>(hd)];
        const NodeId w = ids[0], a1 = ids[1], a2 = ids[2];
        const NodeId z = tape.matmul(h, tape.transpose(w));     // m x out
        const NodeId s1 = tape.matmul(z, a1);                   // m x 1
        const NodeId s2 = tape.matmul(z, a2);                   // m x 1
        const NodeId x = tape.add(tape.gather_rows(s1, pairs.dst), tape.gather_rows(s2, pairs.src));
        const NodeId e = tape.activation(tape.activation(x, cfg.psi), Activation::exp());
        const NodeId den = tape.segment_sum_rows(e, pairs.dst, pairs.n_nodes);
        const NodeId zj = tape.gather_rows(z, pairs.src);
        const NodeId num = tape.segment_sum_rows(tape.rowscale(zj, e), pairs.dst, pairs.n_nodes);
        head_outputs.push_back(tape.activation(tape.rowdiv(num, den), cfg.phi));
    }
    (void)layer;
    if (cfg.heads == 1) return head_outputs[0];
    if (cfg.merge == HeadMerge::concat) return tape.concat_cols(head_outputs);
    NodeId acc = head_outputs[0];
    for (std::size_t i = 1; i < head_outputs.size(); ++i) acc = tape.add(acc, head_outputs[i]);
    return tape.scale(acc, 1.0 / static_cast<double>(cfg.heads));
}

std::vector<std::vector<std::vector<NodeId>>> param_leaves(Tape& tape, const ModelParams& params, bool trainable) {
    std::vector<std::vector<std::vector<NodeId>>> ids;
    for (const auto& layer : params.layers) {
        std::vector<std::vector<NodeId>> layer_ids;
        for (const auto& head : layer) {
            layer_ids.push_back({tape.leaf(head.W, trainable), tape.leaf(head.a1, trainable),
                                 tape.leaf(head.a2, trainable)});
        }
        ids.push_back(std::move(layer_ids));
    }
    return ids;
}

NodeId gat_forward_tape(Tape& tape, const Graph& g, const ModelParams& params,
                        const std::vector<std::vector<std::vector<NodeId>>>& ids) {
    std::vector<int> nodes(static_cast<std::size_t>(g.n_nodes));
    for (int i = 0; i < g.n_nodes; ++i) nodes[static_cast<std::size_t>(i)] = i;
    const PairList pairs = build_pairs(g.adjacency(), nodes, params.config.self_loops);
    NodeId h = tape.constant(g.features);
    for (std::size_t l = 0; l < params.layer_cfgs.size(); ++l) {
        h = gat_layer(tape, h, ids[l], static_cast<int>(l), params.layer_cfgs[l], pairs);
    }
    return h;
}

Tensor gat_forward(const Graph& g, const ModelParams& params) {
    Tape tape;
    const auto ids = param_leaves(tape, params, false);
    const NodeId logits = gat_forward_tape(tape, g, params, ids);
    return tape.value(logits);
}

Tensor dist_gat_forward(const Graph& g, const PartitionPlan& plan, const ModelParams& params) {
    Tensor logits(g.n_nodes, g.n_classes);
    const auto adj = g.adjacency();
    const auto owned = plan.owned_nodes();
    for (int k = 0; k < plan.n_clients; ++k) {
        const auto& nodes = owned[static_cast<std::size_t>(k)];
        if (nodes.empty()) continue;
        // Intra-client edges only: the pair builder already restricts to the
        // node list, which here is exactly the owned set.
        const PairList pairs = build_pairs(adj, nodes, params.config.self_loops);
        Tape tape;
        const auto ids = param_leaves(tape, params, false);
        Tensor feats(static_cast<std::int64_t>(nodes.size()), g.feat_dim);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            std::copy_n(g.features.row_ptr(nodes[i]), g.feat_dim, feats.row_ptr(static_cast<std::int64_t>(i)));
        }
        NodeId h = tape.constant(std::move(feats));
        for (std::size_t l = 0; l < params.layer_cfgs.size(); ++l) {
            h = gat_layer(tape, h, ids[l], static_cast<int>(l), params.layer_cfgs[l], pairs);
        }
        const Tensor& local = tape.value(h);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            std::copy_n(local.row_ptr(static_cast<std::int64_t>(i)), g.n_classes, logits.row_ptr(nodes[i]));
        }
    }
    return logits;
}

void save_checkpoint(const ModelParams& params, const std::string& stem) {
    json header;
    header["format"] = "fedgat-checkpoint-v1";
    header["dtype"] = "f64-le";
    header["config"] = {
        {"in_dim", params.config.in_dim},     {"n_classes", params.config.n_classes},
        {"layers", params.config.layers},     {"hidden_dim", params.config.hidden_dim},
        {"heads", params.config.heads},       {"heads_out", params.config.heads_out},
        {"self_loops", params.config.self_loops},
        {"phi_hidden", params.config.phi_hidden.name()},
        {"phi_param", params.config.phi_hidden.param},
        {"psi", params.config.psi.name()},
        {"psi_param", params.config.psi.param},
    };
    json tensors = json::array();
    std::size_t offset = 0;
    const auto flat = params.flat();
    for (const Tensor* t : flat) {
        tensors.push_back({{"rows", t->n_rows}, {"cols", t->n_cols}, {"offset", offset}});
        offset += t->size();
    }
    header["tensors"] = std::move(tensors);
    std::ofstream hout(stem + ".json");
    if (!hout) throw std::runtime_error("cannot write " + stem + ".json");
    hout << header.dump(2) << '\n';

    std::ofstream bout(stem + ".bin", std::ios::binary);
    if (!bout) throw std::runtime_error("cannot write " + stem + ".bin");
    for (const Tensor* t : flat) {
        bout.write(reinterpret_cast<const char*>(t->data.data()),
                   static_cast<std::streamsize>(t->size() * sizeof(double)));
    }
}

ModelParams load_checkpoint(const std::string& stem) {
    std::ifstream hin(stem + ".json");
    if (!hin) throw std::runtime_error("cannot open " + stem + ".json");
    json header;
    hin >> header;
    if (header.at("format").get<std::string>() != "fedgat-checkpoint-v1")
        throw std::runtime_error("checkpoint: unknown format");

    GatConfig cfg;
    const auto& jc = header.at("config");
    cfg.in_dim = jc.at("in_dim").get<int>();
    cfg.n_classes = jc.at("n_classes").get<int>();
    cfg.layers = jc.at("layers").get<int>();
    cfg.hidden_dim = jc.at("hidden_dim").get<int>();
    cfg.heads = jc.at("heads").get<int>();
    cfg.heads_out = jc.at("heads_out").get<int>();
    cfg.self_loops = jc.at("self_loops").get<bool>();
    const auto act = [](const std::string& name, double param) {
        if (name == "identity") return Activation::identity();
        if (name == "leaky_relu") return Activation::leaky_relu(param);
        if (name == "elu") return Activation::elu(param);
        if (name == "exp") return Activation::exp();
        throw std::runtime_error("checkpoint: unknown activation " + name);
    };
    cfg.phi_hidden = act(jc.at("phi_hidden").get<std::string>(), jc.at("phi_param").get<double>());
    cfg.psi = act(jc.at("psi").get<std::string>(), jc.at("psi_param").get<double>());

    ModelParams params = ModelParams::init(cfg, 0);
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + stem + ".bin");
    const auto flat = params.flat();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != flat.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const auto rows = tensors[i].at("rows").get<std::int64_t>();
        const auto cols = tensors[i].at("cols").get<std::int64_t>();
        if (rows != flat[i]->n_rows || cols != flat[i]->n_cols)
            throw std::runtime_error("checkpoint: tensor shape mismatch");
        bin.read(reinterpret_cast<char*>(flat[i]->data.data()),
                 static_cast<std::streamsize>(flat[i]->size() * sizeof(double)));
        if (!bin) throw std::runtime_error("checkpoint: payload truncated");
    }
    return params;
}

}  // namespace fedgat
