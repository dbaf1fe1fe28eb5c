#include "gpsql/tape.hpp"

#include <algorithm>
#include <cmath>

#include "gpsql/errors.hpp"

namespace gpsql {

// ---- GradBuffer ----------------------------------------------------------------

Vec& GradBuffer::at(int param_id, std::size_t size) {
    if (param_id < 0) throw IndexOutOfRange("negative parameter id");
    if (by_id_.size() <= static_cast<std::size_t>(param_id)) by_id_.resize(param_id + 1);
    Vec& v = by_id_[param_id];
    if (v.empty()) v.assign(size, 0.0);
    if (v.size() != size)
        throw ShapeMismatch("gradient for parameter " + std::to_string(param_id) + " has size " +
                            std::to_string(v.size()) + ", expected " + std::to_string(size));
    return v;
}

const Vec* GradBuffer::find(int param_id) const {
    if (param_id < 0 || static_cast<std::size_t>(param_id) >= by_id_.size()) return nullptr;
    return by_id_[param_id].empty() ? nullptr : &by_id_[param_id];
}

void GradBuffer::clear() { by_id_.clear(); }

double GradBuffer::global_norm() const {
    double sq = 0.0;
    for (const Vec& v : by_id_)
        for (double x : v) sq += x * x;
    return std::sqrt(sq);
}

void GradBuffer::scale_all(double s) {
    for (Vec& v : by_id_)
        for (double& x : v) x *= s;
}

bool GradBuffer::finite() const {
    for (const Vec& v : by_id_)
        for (double x : v)
            if (!std::isfinite(x)) return false;
    return true;
}

// ---- Tape internals --------------------------------------------------------------

int Tape::push(Vec value) {
    nodes_.push_back(Node{std::move(value), {}, {}, -1, 0, 0});
    return static_cast<int>(nodes_.size()) - 1;
}

Tape::Node& Tape::node(NodeRef r) {
    if (r.id < 0 || static_cast<std::size_t>(r.id) >= nodes_.size())
        throw IndexOutOfRange("tape node " + std::to_string(r.id));
    return nodes_[r.id];
}
const Tape::Node& Tape::node(NodeRef r) const {
    if (r.id < 0 || static_cast<std::size_t>(r.id) >= nodes_.size())
        throw IndexOutOfRange("tape node " + std::to_string(r.id));
    return nodes_[r.id];
}

Vec& Tape::grad_of(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

const Vec& Tape::value(NodeRef r) const { return node(r).value; }

double Tape::scalar(NodeRef r) const {
    const Vec& v = value(r);
    if (v.size() != 1)
        throw ShapeMismatch("scalar() on a node of size " + std::to_string(v.size()));
    return v[0];
}

// ---- leaves -----------------------------------------------------------------------

NodeRef Tape::input(Vec v) { return {push(std::move(v))}; }

NodeRef Tape::zeros(std::size_t n) { return {push(Vec(n, 0.0))}; }

NodeRef Tape::param(int param_id, const Vec& value) {
    int id = push(value);
    nodes_[id].param_id = param_id;
    nodes_[id].param_offset = 0;
    nodes_[id].param_full = value.size();
    return {id};
}

NodeRef Tape::param_row(int param_id, const Vec& matrix, std::size_t rows, std::size_t cols,
                        std::size_t row) {
    if (matrix.size() != rows * cols)
        throw ShapeMismatch("parameter matrix size " + std::to_string(matrix.size()) +
                            " != " + std::to_string(rows) + "x" + std::to_string(cols));
    if (row >= rows) throw IndexOutOfRange("parameter row " + std::to_string(row));
    Vec v(matrix.begin() + row * cols, matrix.begin() + (row + 1) * cols);
    int id = push(std::move(v));
    nodes_[id].param_id = param_id;
    nodes_[id].param_offset = row * cols;
    nodes_[id].param_full = rows * cols;
    return {id};
}

// ---- elementwise ops ------------------------------------------------------------

NodeRef Tape::add(NodeRef a, NodeRef b) {
    const Vec& va = value(a);
    const Vec& vb = value(b);
    if (va.size() != vb.size()) throw ShapeMismatch("add operand sizes differ");
    Vec v(va.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = va[i] + vb[i];
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, b = b.id] {
            const Vec& g = nodes_[id].grad;
            Vec& ga = grad_of(a);
            Vec& gb = grad_of(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        };
    }
    return {id};
}

NodeRef Tape::sub(NodeRef a, NodeRef b) {
    const Vec& va = value(a);
    const Vec& vb = value(b);
    if (va.size() != vb.size()) throw ShapeMismatch("sub operand sizes differ");
    Vec v(va.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = va[i] - vb[i];
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, b = b.id] {
            const Vec& g = nodes_[id].grad;
            Vec& ga = grad_of(a);
            Vec& gb = grad_of(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] -= g[i];
            }
        };
    }
    return {id};
}

NodeRef Tape::mul(NodeRef a, NodeRef b) {
    const Vec& va = value(a);
    const Vec& vb = value(b);
    if (va.size() != vb.size()) throw ShapeMismatch("mul operand sizes differ");
    Vec v(va.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = va[i] * vb[i];
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, b = b.id] {
            const Vec& g = nodes_[id].grad;
            const Vec& va = nodes_[a].value;
            const Vec& vb = nodes_[b].value;
            Vec& ga = grad_of(a);
            Vec& gb = grad_of(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * vb[i];
                gb[i] += g[i] * va[i];
            }
        };
    }
    return {id};
}

NodeRef Tape::scale(NodeRef a, double s) {
    Vec v = value(a);
    for (double& x : v) x *= s;
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, s] {
            const Vec& g = nodes_[id].grad;
            Vec& ga = grad_of(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
        };
    }
    return {id};
}

// ---- linear algebra ---------------------------------------------------------------

NodeRef Tape::affine(NodeRef W, NodeRef x, NodeRef b, std::size_t rows, std::size_t cols) {
    const Vec& w = value(W);
    const Vec& vx = value(x);
    if (w.size() != rows * cols)
        throw ShapeMismatch("affine weight size " + std::to_string(w.size()) + " != " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    if (vx.size() != cols) throw ShapeMismatch("affine input size != cols");
    const Vec* vb = nullptr;
    if (b.id >= 0) {
        vb = &value(b);
        if (vb->size() != rows) throw ShapeMismatch("affine bias size != rows");
    }
    Vec v(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = vb ? (*vb)[i] : 0.0;
        const double* wrow = w.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * vx[j];
        v[i] = acc;
    }
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, W = W.id, x = x.id, b = b.id, rows, cols] {
            const Vec& g = nodes_[id].grad;
            const Vec& w = nodes_[W].value;
            const Vec& vx = nodes_[x].value;
            Vec& gw = grad_of(W);
            Vec& gx = grad_of(x);
            for (std::size_t i = 0; i < rows; ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                double* gwrow = gw.data() + i * cols;
                const double* wrow = w.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) {
                    gwrow[j] += gi * vx[j];
                    gx[j] += gi * wrow[j];
                }
            }
            if (b >= 0) {
                Vec& gb = grad_of(b);
                for (std::size_t i = 0; i < rows; ++i) gb[i] += g[i];
            }
        };
    }
    return {id};
}

NodeRef Tape::matvec(NodeRef W, NodeRef x, std::size_t rows, std::size_t cols) {
    return affine(W, x, NodeRef{-1}, rows, cols);
}

// ---- nonlinearities ---------------------------------------------------------------

NodeRef Tape::sigmoid(NodeRef a) {
    Vec v = value(a);
    for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id] {
            const Vec& g = nodes_[id].grad;
            const Vec& s = nodes_[id].value;
            Vec& ga = grad_of(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s[i] * (1.0 - s[i]);
        };
    }
    return {id};
}

NodeRef Tape::tanh_op(NodeRef a) {
    Vec v = value(a);
    for (double& x : v) x = std::tanh(x);
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id] {
            const Vec& g = nodes_[id].grad;
            const Vec& t = nodes_[id].value;
            Vec& ga = grad_of(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - t[i] * t[i]);
        };
    }
    return {id};
}

// ---- structure ops ----------------------------------------------------------------

NodeRef Tape::slice(NodeRef a, std::size_t begin, std::size_t len) {
    const Vec& va = value(a);
    if (begin + len > va.size()) throw IndexOutOfRange("slice past the end");
    Vec v(va.begin() + begin, va.begin() + begin + len);
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, begin] {
            const Vec& g = nodes_[id].grad;
            Vec& ga = grad_of(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[begin + i] += g[i];
        };
    }
    return {id};
}

NodeRef Tape::concat(const std::vector<NodeRef>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat of zero parts");
    Vec v;
    std::vector<int> ids;
    for (NodeRef p : parts) {
        const Vec& vp = value(p);
        v.insert(v.end(), vp.begin(), vp.end());
        ids.push_back(p.id);
    }
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, ids] {
            const Vec& g = nodes_[id].grad;
            std::size_t off = 0;
            for (int pid : ids) {
                Vec& gp = grad_of(pid);
                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
                off += gp.size();
            }
        };
    }
    return {id};
}

NodeRef Tape::dot(NodeRef a, NodeRef b) {
    const Vec& va = value(a);
    const Vec& vb = value(b);
    if (va.size() != vb.size()) throw ShapeMismatch("dot operand sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
    int id = push(Vec{acc});
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = a.id, b = b.id] {
            const double g = nodes_[id].grad[0];
            const Vec& va = nodes_[a].value;
            const Vec& vb = nodes_[b].value;
            Vec& ga = grad_of(a);
            Vec& gb = grad_of(b);
            for (std::size_t i = 0; i < va.size(); ++i) {
                ga[i] += g * vb[i];
                gb[i] += g * va[i];
            }
        };
    }
    return {id};
}

NodeRef Tape::stack_scalars(const std::vector<NodeRef>& xs) {
    if (xs.empty()) throw ShapeMismatch("stack of zero scalars");
    Vec v(xs.size());
    std::vector<int> ids;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec& vx = value(xs[i]);
        if (vx.size() != 1) throw ShapeMismatch("stack_scalars input is not scalar");
        v[i] = vx[0];
        ids.push_back(xs[i].id);
    }
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, ids] {
            const Vec& g = nodes_[id].grad;
            for (std::size_t i = 0; i < ids.size(); ++i) grad_of(ids[i])[0] += g[i];
        };
    }
    return {id};
}

// ---- softmax family ---------------------------------------------------------------

Vec softmax_value(const Vec& logits) {
    if (logits.empty()) throw ShapeMismatch("softmax of an empty vector");
    double mx = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

double softmax_nll_value(const Vec& logits, int gold) {
    if (gold < 0 || static_cast<std::size_t>(gold) >= logits.size())
        throw IndexOutOfRange("gold index " + std::to_string(gold) + " for " +
                              std::to_string(logits.size()) + " logits");
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double x : logits) z += std::exp(x - mx);
    return std::log(z) - (logits[gold] - mx);
}

NodeRef Tape::softmax(NodeRef logits) {
    Vec p = softmax_value(value(logits));
    int id = push(std::move(p));
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = logits.id] {
            const Vec& g = nodes_[id].grad;
            const Vec& p = nodes_[id].value;
            Vec& ga = grad_of(a);
            double inner = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) inner += g[j] * p[j];
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += p[i] * (g[i] - inner);
        };
    }
    return {id};
}

NodeRef Tape::softmax_nll(NodeRef logits, int gold) {
    const Vec& lv = value(logits);
    double loss = softmax_nll_value(lv, gold);
    Vec probs = softmax_value(lv);
    int id = push(Vec{loss});
    if (!forward_only_) {
        nodes_[id].back = [this, id, a = logits.id, gold, probs = std::move(probs)] {
            const double g = nodes_[id].grad[0];
            Vec& ga = grad_of(a);
            for (std::size_t i = 0; i < probs.size(); ++i) {
                double delta = (static_cast<int>(i) == gold) ? 1.0 : 0.0;
                ga[i] += g * (probs[i] - delta);
            }
        };
    }
    return {id};
}

// ---- aggregation ------------------------------------------------------------------

NodeRef Tape::mean_rows(const std::vector<NodeRef>& rows) {
    if (rows.empty()) throw EmptySpan();
    const std::size_t n = value(rows[0]).size();
    Vec v(n, 0.0);
    std::vector<int> ids;
    for (NodeRef r : rows) {
        const Vec& vr = value(r);
        if (vr.size() != n) throw ShapeMismatch("mean_rows sizes differ");
        for (std::size_t i = 0; i < n; ++i) v[i] += vr[i];
        ids.push_back(r.id);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : v) x *= inv;
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, ids, inv] {
            const Vec& g = nodes_[id].grad;
            for (int rid : ids) {
                Vec& gr = grad_of(rid);
                for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i] * inv;
            }
        };
    }
    return {id};
}

NodeRef Tape::weighted_sum(const std::vector<NodeRef>& rows, NodeRef weights) {
    const Vec& w = value(weights);
    if (rows.empty() || rows.size() != w.size())
        throw ShapeMismatch("weighted_sum rows/weights mismatch");
    const std::size_t n = value(rows[0]).size();
    Vec v(n, 0.0);
    std::vector<int> ids;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Vec& vr = value(rows[k]);
        if (vr.size() != n) throw ShapeMismatch("weighted_sum row sizes differ");
        for (std::size_t i = 0; i < n; ++i) v[i] += w[k] * vr[i];
        ids.push_back(rows[k].id);
    }
    int id = push(std::move(v));
    if (!forward_only_) {
        nodes_[id].back = [this, id, ids, wid = weights.id] {
            const Vec& g = nodes_[id].grad;
            const Vec& w = nodes_[wid].value;
            Vec& gw = grad_of(wid);
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const Vec& vr = nodes_[ids[k]].value;
                Vec& gr = grad_of(ids[k]);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gr[i] += g[i] * w[k];
                    acc += g[i] * vr[i];
                }
                gw[k] += acc;
            }
        };
    }
    return {id};
}

// ---- backward ----------------------------------------------------------------------

void Tape::backward(NodeRef seed, GradBuffer* out, double seed_value) {
    if (forward_only_) throw Error("backward on a forward-only tape");
    Node& s = node(seed);
    if (s.value.size() != 1) throw ShapeMismatch("backward seed must be a scalar node");
    grad_of(seed.id)[0] += seed_value;
    for (int id = seed.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) continue;  // no gradient reached this node
        if (n.back) n.back();
        if (n.param_id >= 0 && out) {
            Vec& g = out->at(n.param_id, n.param_full);
            for (std::size_t i = 0; i < n.grad.size(); ++i) g[n.param_offset + i] += n.grad[i];
        }
    }
}

}  // namespace gpsql
