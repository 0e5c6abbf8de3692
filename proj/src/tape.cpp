#include "fedgat/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fedgat/kernels.hpp"

namespace fedgat {

namespace {

[[noreturn]] void fail(const std::string& op, const std::string& what) {
    throw std::runtime_error("tape: " + op + ": " + what);
}

const char* op_name(Tape::Op op) {
    switch (op) {
        case Tape::Op::leaf: return "leaf";
        case Tape::Op::matmul: return "matmul";
        case Tape::Op::transpose: return "transpose";
        case Tape::Op::add: return "add";
        case Tape::Op::sub: return "sub";
        case Tape::Op::mul: return "mul";
        case Tape::Op::div: return "div";
        case Tape::Op::scale: return "scale";
        case Tape::Op::activation: return "activation";
        case Tape::Op::sum: return "sum";
        case Tape::Op::gather_rows: return "gather_rows";
        case Tape::Op::segment_sum_rows: return "segment_sum_rows";
        case Tape::Op::rowscale: return "rowscale";
        case Tape::Op::rowdiv: return "rowdiv";
        case Tape::Op::concat_rows: return "concat_rows";
        case Tape::Op::concat_cols: return "concat_cols";
        case Tape::Op::reshape: return "reshape";
        case Tape::Op::softmax_xent: return "softmax_xent";
    }
    return "?";
}

}  // namespace

NodeId Tape::push(Node n) {
    n.value = eval(n);
    if (!n.value.all_finite()) fail(op_name(n.op), "non-finite output");
    if (n.op != Op::leaf) {
        bool rg = false;
        if (n.a >= 0) rg = rg || nodes_[static_cast<std::size_t>(n.a)].requires_grad;
        if (n.b >= 0) rg = rg || nodes_[static_cast<std::size_t>(n.b)].requires_grad;
        for (NodeId p : n.parts) rg = rg || nodes_[static_cast<std::size_t>(p)].requires_grad;
        n.requires_grad = rg;
    }
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor t, bool trainable) {
    if (!t.all_finite()) fail("leaf", "non-finite input");
    Node n;
    n.op = Op::leaf;
    n.requires_grad = trainable;
    n.value = std::move(t);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor Tape::eval(const Node& n) const {
    auto& kb = kernels::active();
    auto val = [&](NodeId id) -> const Tensor& { return nodes_[static_cast<std::size_t>(id)].value; };
    switch (n.op) {
        case Op::leaf:
            return n.value;
        case Op::matmul: {
            const Tensor& a = val(n.a);
            const Tensor& b = val(n.b);
            if (a.n_cols != b.n_rows)
                fail("matmul", "inner dimensions disagree: " + std::to_string(a.n_cols) + " vs " +
                                   std::to_string(b.n_rows));
            Tensor c(a.n_rows, b.n_cols);
            kernels::matmul(a.data.data(), b.data.data(), c.data.data(), static_cast<std::size_t>(a.n_rows),
                            static_cast<std::size_t>(a.n_cols), static_cast<std::size_t>(b.n_cols));
            return c;
        }
        case Op::transpose:
            return val(n.a).transposed();
        case Op::add: {
            const Tensor& a = val(n.a);
            const Tensor& b = val(n.b);
            if (!a.same_shape(b)) fail("add", "shape mismatch");
            Tensor c(a.n_rows, a.n_cols);
            kb.add(a.data.data(), b.data.data(), c.data.data(), a.size());
            return c;
        }
        case Op::sub: {
            const Tensor& a = val(n.a);
            const Tensor& b = val(n.b);
            if (!a.same_shape(b)) fail("sub", "shape mismatch");
            Tensor c(a.n_rows, a.n_cols);
            kb.sub(a.data.data(), b.data.data(), c.data.data(), a.size());
            return c;
        }
        case Op::mul: {
            const Tensor& a = val(n.a);
            const Tensor& b = val(n.b);
            if (!a.same_shape(b)) fail("mul", "shape mismatch");
            Tensor c(a.n_rows, a.n_cols);
            kb.mul(a.data.data(), b.data.data(), c.data.data(), a.size());
            return c;
        }
        case Op::div: {
            const Tensor& a = val(n.a);
            const Tensor& b = val(n.b);
            if (!a.same_shape(b)) fail("div", "shape mismatch");
            Tensor c(a.n_rows, a.n_cols);
            for (std::size_t i = 0; i < a.size(); ++i) c.data[i] = a.data[i] / b.data[i];
            return c;
        }
        case Op::scale: {
            const Tensor& a = val(n.a);
            Tensor c(a.n_rows, a.n_cols);
            kb.scale(a.data.data(), n.scalar, c.data.data(), a.size());
            return c;
        }
        case Op::activation: {
            const Tensor& a = val(n.a);
            Tensor c(a.n_rows, a.n_cols);
            for (std::size_t i = 0; i < a.size(); ++i) c.data[i] = n.act(a.data[i]);
            return c;
        }
        case Op::sum: {
            const Tensor& a = val(n.a);
            return Tensor::scalar(kb.sum(a.data.data(), a.size()));
        }
        case Op::gather_rows: {
            const Tensor& a = val(n.a);
            const auto& rows = *n.indices;
            Tensor c(static_cast<std::int64_t>(rows.size()), a.n_cols);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r] < 0 || rows[r] >= a.n_rows) fail("gather_rows", "row index out of range");
                std::memcpy(c.row_ptr(static_cast<std::int64_t>(r)), a.row_ptr(rows[r]),
                            static_cast<std::size_t>(a.n_cols) * sizeof(double));
            }
            return c;
        }
        case Op::segment_sum_rows: {
            const Tensor& a = val(n.a);
            const auto& seg = *n.indices;
            if (seg.size() != static_cast<std::size_t>(a.n_rows)) fail("segment_sum_rows", "segment list length mismatch");
            Tensor c(n.segments, a.n_cols);
            for (std::int64_t r = 0; r < a.n_rows; ++r) {
                const int s = seg[static_cast<std::size_t>(r)];
                if (s < 0 || s >= n.segments) fail("segment_sum_rows", "segment id out of range");
                kb.axpy(1.0, a.row_ptr(r), c.row_ptr(s), static_cast<std::size_t>(a.n_cols));
            }
            return c;
        }
        case Op::rowscale: {
            const Tensor& a = val(n.a);
            const Tensor& v = val(n.b);
            if (v.n_rows != a.n_rows || v.n_cols != 1) fail("rowscale", "scaler must be m x 1");
            Tensor c(a.n_rows, a.n_cols);
            for (std::int64_t r = 0; r < a.n_rows; ++r) {
                kb.scale(a.row_ptr(r), v.data[static_cast<std::size_t>(r)], c.row_ptr(r),
                         static_cast<std::size_t>(a.n_cols));
            }
            return c;
        }
        case Op::rowdiv: {
            const Tensor& a = val(n.a);
            const Tensor& v = val(n.b);
            if (v.n_rows != a.n_rows || v.n_cols != 1) fail("rowdiv", "divisor must be m x 1");
            Tensor c(a.n_rows, a.n_cols);
            for (std::int64_t r = 0; r < a.n_rows; ++r) {
                kb.scale(a.row_ptr(r), 1.0 / v.data[static_cast<std::size_t>(r)], c.row_ptr(r),
                         static_cast<std::size_t>(a.n_cols));
            }
            return c;
        }
        case Op::concat_rows: {
            std::int64_t rows = 0;
            const std::int64_t cols = val(n.parts.front()).n_cols;
            for (NodeId p : n.parts) {
                if (val(p).n_cols != cols) fail("concat_rows", "column mismatch");
                rows += val(p).n_rows;
            }
            Tensor c(rows, cols);
            std::int64_t at = 0;
            for (NodeId p : n.parts) {
                const Tensor& t = val(p);
                std::memcpy(c.row_ptr(at), t.data.data(), t.size() * sizeof(double));
                at += t.n_rows;
            }
            return c;
        }
        case Op::concat_cols: {
            std::int64_t cols = 0;
            const std::int64_t rows = val(n.parts.front()).n_rows;
            for (NodeId p : n.parts) {
                if (val(p).n_rows != rows) fail("concat_cols", "row mismatch");
                cols += val(p).n_cols;
            }
            Tensor c(rows, cols);
            std::int64_t at = 0;
            for (NodeId p : n.parts) {
                const Tensor& t = val(p);
                for (std::int64_t r = 0; r < rows; ++r) {
                    std::memcpy(c.row_ptr(r) + at, t.row_ptr(r), static_cast<std::size_t>(t.n_cols) * sizeof(double));
                }
                at += t.n_cols;
            }
            return c;
        }
        case Op::reshape: {
            const Tensor& a = val(n.a);
            Tensor c = a;
            c.n_rows = static_cast<std::int64_t>(n.scalar);
            c.n_cols = static_cast<std::int64_t>(a.size()) / c.n_rows;
            return c;
        }
        case Op::softmax_xent: {
            const Tensor& logits = val(n.a);
            const auto& labels = *n.indices;
            const auto& mask = *n.mask;
            if (labels.size() != static_cast<std::size_t>(logits.n_rows)) fail("softmax_xent", "label count mismatch");
            if (mask.empty()) fail("softmax_xent", "empty mask");
            double total = 0.0;
            for (int r : mask) {
                if (r < 0 || r >= logits.n_rows) fail("softmax_xent", "mask row out of range");
                const int y = labels[static_cast<std::size_t>(r)];
                if (y < 0 || y >= logits.n_cols) fail("softmax_xent", "label out of range");
                const double* row = logits.row_ptr(r);
                double mx = row[0];
                for (std::int64_t c = 1; c < logits.n_cols; ++c) mx = std::max(mx, row[c]);
                double lse = 0.0;
                for (std::int64_t c = 0; c < logits.n_cols; ++c) lse += std::exp(row[c] - mx);
                total += mx + std::log(lse) - row[y];
            }
            return Tensor::scalar(total / static_cast<double>(mask.size()));
        }
    }
    fail("eval", "unknown op");
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
    Node n;
    n.op = Op::transpose;
    n.a = a;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Tape::div(NodeId a, NodeId b) {
    Node n;
    n.op = Op::div;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.scalar = c;
    return push(std::move(n));
}

NodeId Tape::activation(NodeId a, Activation act) {
    Node n;
    n.op = Op::activation;
    n.a = a;
    n.act = act;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = Op::sum;
    n.a = a;
    return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, IndexList rows) {
    Node n;
    n.op = Op::gather_rows;
    n.a = a;
    n.indices = std::move(rows);
    return push(std::move(n));
}

NodeId Tape::segment_sum_rows(NodeId a, IndexList segment_of_row, int n_segments) {
    Node n;
    n.op = Op::segment_sum_rows;
    n.a = a;
    n.indices = std::move(segment_of_row);
    n.segments = n_segments;
    return push(std::move(n));
}

NodeId Tape::rowscale(NodeId a, NodeId v) {
    Node n;
    n.op = Op::rowscale;
    n.a = a;
    n.b = v;
    return push(std::move(n));
}

NodeId Tape::rowdiv(NodeId a, NodeId v) {
    Node n;
    n.op = Op::rowdiv;
    n.a = a;
    n.b = v;
    return push(std::move(n));
}

NodeId Tape::concat_rows(std::span<const NodeId> parts) {
    if (parts.empty()) fail("concat_rows", "no inputs");
    Node n;
    n.op = Op::concat_rows;
    n.parts.assign(parts.begin(), parts.end());
    return push(std::move(n));
}

NodeId Tape::concat_cols(std::span<const NodeId> parts) {
    if (parts.empty()) fail("concat_cols", "no inputs");
    Node n;
    n.op = Op::concat_cols;
    n.parts.assign(parts.begin(), parts.end());
    return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, std::int64_t rows, std::int64_t cols) {
    const Tensor& t = nodes_[static_cast<std::size_t>(a)].value;
    if (rows * cols != static_cast<std::int64_t>(t.size())) fail("reshape", "element count mismatch");
    Node n;
    n.op = Op::reshape;
    n.a = a;
    n.scalar = static_cast<double>(rows);
    return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, IndexList labels, IndexList mask_rows) {
    Node n;
    n.op = Op::softmax_xent;
    n.a = logits;
    n.indices = std::move(labels);
    n.mask = std::move(mask_rows);
    return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_live) fail("grad", "no gradient recorded for node");
    return n.grad;
}

Tensor& Tape::grad_buffer(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_live) {
        n.grad = Tensor(n.value.n_rows, n.value.n_cols);
        n.grad_live = true;
    }
    return n.grad;
}

void Tape::accumulate(NodeId id, const Tensor& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    Tensor& buf = grad_buffer(id);
    kernels::active().axpy(1.0, g.data.data(), buf.data.data(), g.size());
}

void Tape::backward(NodeId loss) {
    auto& kb = kernels::active();
    Node& ln = nodes_[static_cast<std::size_t>(loss)];
    if (ln.value.size() != 1) fail("backward", "loss must be scalar");
    for (auto& n : nodes_) n.grad_live = false;
    if (!ln.requires_grad) return;
    grad_buffer(loss).data[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_live || !n.requires_grad || n.op == Op::leaf) continue;
        const Tensor& g = n.grad;
        auto in = [&](NodeId x) -> Node& { return nodes_[static_cast<std::size_t>(x)]; };
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul: {
                const Tensor& a = in(n.a).value;
                const Tensor& b = in(n.b).value;
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    // dA[i,l] += dot(g[i,:], B[l,:])
                    for (std::int64_t i = 0; i < a.n_rows; ++i) {
                        double* darow = da.row_ptr(i);
                        const double* grow = g.row_ptr(i);
                        for (std::int64_t l = 0; l < a.n_cols; ++l) {
                            darow[l] += kb.dot(grow, b.row_ptr(l), static_cast<std::size_t>(b.n_cols));
                        }
                    }
                }
                if (in(n.b).requires_grad) {
                    Tensor& db = grad_buffer(n.b);
                    // dB[l,:] += A[i,l] * g[i,:]
                    for (std::int64_t i = 0; i < a.n_rows; ++i) {
                        const double* arow = a.row_ptr(i);
                        const double* grow = g.row_ptr(i);
                        for (std::int64_t l = 0; l < a.n_cols; ++l) {
                            kb.axpy(arow[l], grow, db.row_ptr(l), static_cast<std::size_t>(b.n_cols));
                        }
                    }
                }
                break;
            }
            case Op::transpose:
                accumulate(n.a, g.transposed());
                break;
            case Op::add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::sub: {
                accumulate(n.a, g);
                if (in(n.b).requires_grad) {
                    Tensor& db = grad_buffer(n.b);
                    kb.axpy(-1.0, g.data.data(), db.data.data(), g.size());
                }
                break;
            }
            case Op::mul: {
                const Tensor& a = in(n.a).value;
                const Tensor& b = in(n.b).value;
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i] * b.data[i];
                }
                if (in(n.b).requires_grad) {
                    Tensor& db = grad_buffer(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) db.data[i] += g.data[i] * a.data[i];
                }
                break;
            }
            case Op::div: {
                const Tensor& b = in(n.b).value;
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i] / b.data[i];
                }
                if (in(n.b).requires_grad) {
                    Tensor& db = grad_buffer(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        db.data[i] -= g.data[i] * n.value.data[i] / b.data[i];
                }
                break;
            }
            case Op::scale: {
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    kb.axpy(n.scalar, g.data.data(), da.data.data(), g.size());
                }
                break;
            }
            case Op::activation: {
                if (in(n.a).requires_grad) {
                    const Tensor& a = in(n.a).value;
                    Tensor& da = grad_buffer(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data[i] += g.data[i] * n.act.derivative(a.data[i]);
                }
                break;
            }
            case Op::sum: {
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    const double gv = g.data[0];
                    for (auto& v : da.data) v += gv;
                }
                break;
            }
            case Op::gather_rows: {
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    const auto& rows = *n.indices;
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        kb.axpy(1.0, g.row_ptr(static_cast<std::int64_t>(r)), da.row_ptr(rows[r]),
                                static_cast<std::size_t>(da.n_cols));
                    }
                }
                break;
            }
            case Op::segment_sum_rows: {
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    const auto& seg = *n.indices;
                    for (std::int64_t r = 0; r < da.n_rows; ++r) {
                        kb.axpy(1.0, g.row_ptr(seg[static_cast<std::size_t>(r)]), da.row_ptr(r),
                                static_cast<std::size_t>(da.n_cols));
                    }
                }
                break;
            }
            case Op::rowscale: {
                const Tensor& a = in(n.a).value;
                const Tensor& v = in(n.b).value;
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    for (std::int64_t r = 0; r < a.n_rows; ++r) {
                        kb.axpy(v.data[static_cast<std::size_t>(r)], g.row_ptr(r), da.row_ptr(r),
                                static_cast<std::size_t>(a.n_cols));
                    }
                }
                if (in(n.b).requires_grad) {
                    Tensor& dv = grad_buffer(n.b);
                    for (std::int64_t r = 0; r < a.n_rows; ++r) {
                        dv.data[static_cast<std::size_t>(r)] +=
                            kb.dot(g.row_ptr(r), a.row_ptr(r), static_cast<std::size_t>(a.n_cols));
                    }
                }
                break;
            }
            case Op::rowdiv: {
                const Tensor& v = in(n.b).value;
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    for (std::int64_t r = 0; r < n.value.n_rows; ++r) {
                        kb.axpy(1.0 / v.data[static_cast<std::size_t>(r)], g.row_ptr(r), da.row_ptr(r),
                                static_cast<std::size_t>(n.value.n_cols));
                    }
                }
                if (in(n.b).requires_grad) {
                    Tensor& dv = grad_buffer(n.b);
                    for (std::int64_t r = 0; r < n.value.n_rows; ++r) {
                        const double num =
                            kb.dot(g.row_ptr(r), n.value.row_ptr(r), static_cast<std::size_t>(n.value.n_cols));
                        dv.data[static_cast<std::size_t>(r)] -= num / v.data[static_cast<std::size_t>(r)];
                    }
                }
                break;
            }
            case Op::concat_rows: {
                std::int64_t at = 0;
                for (NodeId p : n.parts) {
                    Node& pn = in(p);
                    if (pn.requires_grad) {
                        Tensor& dp = grad_buffer(p);
                        kb.axpy(1.0, g.row_ptr(at), dp.data.data(), dp.size());
                    }
                    at += pn.value.n_rows;
                }
                break;
            }
            case Op::concat_cols: {
                std::int64_t at = 0;
                for (NodeId p : n.parts) {
                    Node& pn = in(p);
                    if (pn.requires_grad) {
                        Tensor& dp = grad_buffer(p);
                        for (std::int64_t r = 0; r < dp.n_rows; ++r) {
                            kb.axpy(1.0, g.row_ptr(r) + at, dp.row_ptr(r), static_cast<std::size_t>(dp.n_cols));
                        }
                    }
                    at += pn.value.n_cols;
                }
                break;
            }
            case Op::reshape: {
                if (in(n.a).requires_grad) {
                    Tensor& da = grad_buffer(n.a);
                    kb.axpy(1.0, g.data.data(), da.data.data(), g.size());
                }
                break;
            }
            case Op::softmax_xent: {
                if (in(n.a).requires_grad) {
                    const Tensor& logits = in(n.a).value;
                    Tensor& dl = grad_buffer(n.a);
                    const auto& labels = *n.indices;
                    const auto& mask = *n.mask;
                    const double gv = g.data[0] / static_cast<double>(mask.size());
                    for (int r : mask) {
                        const double* row = logits.row_ptr(r);
                        double mx = row[0];
                        for (std::int64_t c = 1; c < logits.n_cols; ++c) mx = std::max(mx, row[c]);
                        double lse = 0.0;
                        for (std::int64_t c = 0; c < logits.n_cols; ++c) lse += std::exp(row[c] - mx);
                        double* drow = dl.row_ptr(r);
                        for (std::int64_t c = 0; c < logits.n_cols; ++c) {
                            drow[c] += gv * std::exp(row[c] - mx) / lse;
                        }
                        drow[labels[static_cast<std::size_t>(r)]] -= gv;
                    }
                }
                break;
            }
        }
    }
}

bool Tape::replay_matches() const {
    for (const auto& n : nodes_) {
        if (n.op == Op::leaf) continue;
        Tensor again = eval(n);
        if (again.data != n.value.data) return false;
    }
    return true;
}

double grad_check(const std::function<NodeId(Tape&, const std::vector<NodeId>&)>& build,
                  const std::vector<Tensor>& params, double eps) {
    if (!(eps > 0.0) || eps > 1e-2) throw std::invalid_argument("grad_check: eps must be in (0, 1e-2]");

    auto run = [&](const std::vector<Tensor>& p, std::vector<Tensor>* grads) -> double {
        Tape tape;
        std::vector<NodeId> ids;
        ids.reserve(p.size());
        for (const auto& t : p) ids.push_back(tape.leaf(t, true));
        const NodeId loss = build(tape, ids);
        if (grads != nullptr) {
            tape.backward(loss);
            grads->clear();
            for (NodeId id : ids) grads->push_back(tape.grad(id));
        }
        return tape.value(loss).data[0];
    };

    std::vector<Tensor> grads;
    run(params, &grads);

    double max_rel = 0.0;
    std::vector<Tensor> work = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t i = 0; i < params[pi].size(); ++i) {
            const double orig = work[pi].data[i];
            work[pi].data[i] = orig + eps;
            const double lp = run(work, nullptr);
            work[pi].data[i] = orig - eps;
            const double lm = run(work, nullptr);
            work[pi].data[i] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double ad = grads[pi].data[i];
            // The floor keeps cancellation noise on dead coordinates (true
            // gradient 0, fd = loss roundoff / eps) from dominating the max.
            const double rel = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-3});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace fedgat
