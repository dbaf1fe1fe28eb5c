#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gpsql {

/// Dense vector of doubles; the single value type flowing through the tape.
using Vec = std::vector<double>;

/// Accumulates gradients keyed by parameter id.
///
/// An entry is "absent" until the first accumulation touches it; absent entries
/// mean "this parameter received no gradient" and optimizers must skip the
/// parameter entirely (no moment updates either).
class GradBuffer {
public:
    /// The gradient vector for `param_id`, zero-filled at `size` on first use.
    Vec& at(int param_id, std::size_t size);

    /// The gradient for `param_id`, or nullptr if none was accumulated.
    const Vec* find(int param_id) const;

    void clear();

    /// L2 norm over every accumulated entry.
    double global_norm() const;

    /// Multiplies every accumulated entry by `s`.
    void scale_all(double s);

    /// False if any accumulated value is NaN or infinite.
    bool finite() const;

    /// One past the largest parameter id ever touched.
    int capacity() const { return static_cast<int>(by_id_.size()); }

private:
    std::vector<Vec> by_id_;  // empty Vec = absent entry
};

/// Handle to a node on a Tape.
struct NodeRef {
    int id = -1;
};

/// Reverse-mode autodiff tape over vector-valued nodes.
///
/// Build a computation by calling the op methods; each returns a NodeRef whose
/// value is available immediately via value()/scalar(). Calling backward() on a
/// scalar node propagates gradients to every node that contributed to it and
/// accumulates parameter-leaf gradients into a GradBuffer.
///
/// A tape constructed with forward_only=true records no backward closures
/// (cheaper; used for decoding); backward() on it throws.
class Tape {
public:
    explicit Tape(bool forward_only = false) : forward_only_(forward_only) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- leaves ---
    NodeRef input(Vec v);
    NodeRef zeros(std::size_t n);
    /// Leaf holding a full parameter array; its gradient lands in GradBuffer::at(param_id, value.size()).
    NodeRef param(int param_id, const Vec& value);
    /// Leaf holding one row of a row-major (rows x cols) parameter matrix; its
    /// gradient lands at the row's offset within the full matrix gradient.
    NodeRef param_row(int param_id, const Vec& matrix, std::size_t rows, std::size_t cols,
                      std::size_t row);

    // --- elementwise ---
    NodeRef add(NodeRef a, NodeRef b);
    NodeRef sub(NodeRef a, NodeRef b);
    NodeRef mul(NodeRef a, NodeRef b);
    NodeRef scale(NodeRef a, double s);

    // --- linear algebra ---
    /// y = W x + b where W is row-major (rows x cols); pass b.id == -1 for no bias.
    NodeRef affine(NodeRef W, NodeRef x, NodeRef b, std::size_t rows, std::size_t cols);
    NodeRef matvec(NodeRef W, NodeRef x, std::size_t rows, std::size_t cols);

    // --- nonlinearities ---
    NodeRef sigmoid(NodeRef a);
    NodeRef tanh_op(NodeRef a);

    // --- structure ---
    NodeRef slice(NodeRef a, std::size_t begin, std::size_t len);
    NodeRef concat(const std::vector<NodeRef>& parts);
    NodeRef dot(NodeRef a, NodeRef b);
    NodeRef stack_scalars(const std::vector<NodeRef>& xs);

    // --- softmax family ---
    NodeRef softmax(NodeRef logits);
    /// Scalar node: negative log softmax probability of `gold`.
    NodeRef softmax_nll(NodeRef logits, int gold);

    // --- aggregation ---
    /// Arithmetic mean of same-sized rows; throws EmptySpan on zero rows.
    NodeRef mean_rows(const std::vector<NodeRef>& rows);
    /// sum_k weights[k] * rows[k]; `weights` is a node of size rows.size().
    NodeRef weighted_sum(const std::vector<NodeRef>& rows, NodeRef weights);

    // --- access ---
    const Vec& value(NodeRef r) const;
    double scalar(NodeRef r) const;
    std::size_t size(NodeRef r) const { return value(r).size(); }
    bool forward_only() const { return forward_only_; }
    std::size_t num_nodes() const { return nodes_.size(); }

    /// Backpropagates from `seed` (must be scalar) with d(seed)=seed_value and
    /// accumulates parameter gradients into `out` (may be nullptr to discard).
    void backward(NodeRef seed, GradBuffer* out, double seed_value = 1.0);

private:
    struct Node {
        Vec value;
        Vec grad;  // lazily sized; empty = no gradient reached it
        std::function<void()> back;
        int param_id = -1;
        std::size_t param_offset = 0;
        std::size_t param_full = 0;
    };

    int push(Vec value);
    Node& node(NodeRef r);
    const Node& node(NodeRef r) const;
    Vec& grad_of(int id);

    std::vector<Node> nodes_;
    bool forward_only_;
};

/// Numerically stable softmax of `logits` as plain values (oracle helper).
Vec softmax_value(const Vec& logits);

/// Numerically stable -log softmax(logits)[gold] as a plain value.
double softmax_nll_value(const Vec& logits, int gold);

}  // namespace gpsql
