#include "gpsql/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gpsql/errors.hpp"

namespace gpsql {

// ---- LSTM ----------------------------------------------------------------------

LstmParams register_lstm(ParamStore& store, const std::string& prefix, std::size_t input,
                         std::size_t hidden, ParamGroup group) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    p.w_x = store.add(prefix + ".w_x", 4 * hidden, input, group, ParamStore::Init::Uniform);
    p.w_h = store.add(prefix + ".w_h", 4 * hidden, hidden, group, ParamStore::Init::Uniform);
    p.b = store.add(prefix + ".b", 4 * hidden, 1, group, ParamStore::Init::Zero);
    return p;
}

LstmNodes lstm_nodes(Tape& tape, const ParamStore& store, const LstmParams& params) {
    LstmNodes n;
    n.w_x = store.use(tape, params.w_x);
    n.w_h = store.use(tape, params.w_h);
    n.b = store.use(tape, params.b);
    n.input = params.input;
    n.hidden = params.hidden;
    return n;
}

LstmStateNodes lstm_zero_state(Tape& tape, std::size_t hidden) {
    return {tape.zeros(hidden), tape.zeros(hidden)};
}

LstmStateNodes lstm_cell(Tape& tape, const LstmNodes& cell, NodeRef input,
                         const LstmStateNodes& state) {
    const std::size_t H = cell.hidden;
    if (tape.size(input) != cell.input)
        throw ShapeMismatch("lstm input size " + std::to_string(tape.size(input)) +
                            ", expected " + std::to_string(cell.input));
    if (tape.size(state.m) != H || tape.size(state.h) != H)
        throw ShapeMismatch("lstm state size != hidden size");
    NodeRef zx = tape.affine(cell.w_x, input, cell.b, 4 * H, cell.input);
    NodeRef zh = tape.matvec(cell.w_h, state.h, 4 * H, H);
    NodeRef z = tape.add(zx, zh);
    NodeRef i = tape.sigmoid(tape.slice(z, 0, H));
    NodeRef f = tape.sigmoid(tape.slice(z, H, H));
    NodeRef o = tape.sigmoid(tape.slice(z, 2 * H, H));
    NodeRef g = tape.tanh_op(tape.slice(z, 3 * H, H));
    NodeRef m_next = tape.add(tape.mul(f, state.m), tape.mul(i, g));
    NodeRef h_next = tape.mul(o, tape.tanh_op(m_next));
    return {m_next, h_next};
}

LstmState lstm_cell(const ParamStore& store, const LstmParams& params, const Vec& input,
                    const LstmState& state) {
    Tape tape(/*forward_only=*/true);
    LstmNodes cell = lstm_nodes(tape, store, params);
    LstmStateNodes s{tape.input(state.m), tape.input(state.h)};
    LstmStateNodes out = lstm_cell(tape, cell, tape.input(input), s);
    return {tape.value(out.m), tape.value(out.h)};
}

// ---- attention -------------------------------------------------------------------

AttentionParams register_attention(ParamStore& store, const std::string& prefix,
                                   std::size_t query_dim, std::size_t mem_dim,
                                   std::size_t model_dim, std::size_t heads, ParamGroup group) {
    if (heads == 0 || model_dim % heads != 0)
        throw ShapeMismatch("attention model dim " + std::to_string(model_dim) +
                            " not divisible by " + std::to_string(heads) + " heads");
    AttentionParams p;
    p.query_dim = query_dim;
    p.mem_dim = mem_dim;
    p.model_dim = model_dim;
    p.heads = heads;
    p.w_q = store.add(prefix + ".w_q", model_dim, query_dim, group, ParamStore::Init::Uniform);
    p.w_k = store.add(prefix + ".w_k", model_dim, mem_dim, group, ParamStore::Init::Uniform);
    p.w_v = store.add(prefix + ".w_v", model_dim, mem_dim, group, ParamStore::Init::Uniform);
    p.w_o = store.add(prefix + ".w_o", model_dim, model_dim, group, ParamStore::Init::Uniform);
    return p;
}

AttentionNodes attention_nodes(Tape& tape, const ParamStore& store,
                               const AttentionParams& params) {
    AttentionNodes n;
    n.w_q = store.use(tape, params.w_q);
    n.w_k = store.use(tape, params.w_k);
    n.w_v = store.use(tape, params.w_v);
    n.w_o = store.use(tape, params.w_o);
    n.dims = params;
    return n;
}

ProjectedMemory project_memory(Tape& tape, const AttentionNodes& block,
                               const std::vector<NodeRef>& memory_rows) {
    const AttentionParams& d = block.dims;
    ProjectedMemory pm;
    pm.keys.reserve(memory_rows.size());
    pm.values.reserve(memory_rows.size());
    for (NodeRef row : memory_rows) {
        if (tape.size(row) != d.mem_dim)
            throw ShapeMismatch("memory row size " + std::to_string(tape.size(row)) +
                                ", expected " + std::to_string(d.mem_dim));
        pm.keys.push_back(tape.matvec(block.w_k, row, d.model_dim, d.mem_dim));
        pm.values.push_back(tape.matvec(block.w_v, row, d.model_dim, d.mem_dim));
    }
    return pm;
}

NodeRef multi_head_attention(Tape& tape, const AttentionNodes& block, NodeRef query,
                             const ProjectedMemory& memory, const std::vector<bool>& mask) {
    const AttentionParams& d = block.dims;
    if (memory.keys.size() != memory.values.size())
        throw ShapeMismatch("projected keys/values count differs");
    if (mask.size() != memory.keys.size())
        throw ShapeMismatch("mask length " + std::to_string(mask.size()) + " != memory rows " +
                            std::to_string(memory.keys.size()));
    if (tape.size(query) != d.query_dim)
        throw ShapeMismatch("query size " + std::to_string(tape.size(query)) + ", expected " +
                            std::to_string(d.query_dim));
    std::vector<std::size_t> visible;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) visible.push_back(i);
    if (visible.empty()) throw AllMasked();

    const std::size_t head_dim = d.model_dim / d.heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    NodeRef q = tape.matvec(block.w_q, query, d.model_dim, d.query_dim);

    std::vector<NodeRef> head_ctx;
    head_ctx.reserve(d.heads);
    for (std::size_t h = 0; h < d.heads; ++h) {
        NodeRef qh = tape.slice(q, h * head_dim, head_dim);
        std::vector<NodeRef> scores;
        std::vector<NodeRef> vals;
        scores.reserve(visible.size());
        vals.reserve(visible.size());
        for (std::size_t idx : visible) {
            NodeRef kh = tape.slice(memory.keys[idx], h * head_dim, head_dim);
            scores.push_back(tape.scale(tape.dot(qh, kh), inv_scale));
            vals.push_back(tape.slice(memory.values[idx], h * head_dim, head_dim));
        }
        NodeRef alpha = tape.softmax(tape.stack_scalars(scores));
        head_ctx.push_back(tape.weighted_sum(vals, alpha));
    }
    NodeRef ctx = (head_ctx.size() == 1) ? head_ctx[0] : tape.concat(head_ctx);
    return tape.matvec(block.w_o, ctx, d.model_dim, d.model_dim);
}

Vec multi_head_attention(const ParamStore& store, const AttentionParams& params, const Vec& query,
                         const std::vector<Vec>& memory, const std::vector<bool>& mask) {
    Tape tape(/*forward_only=*/true);
    AttentionNodes block = attention_nodes(tape, store, params);
    std::vector<NodeRef> rows;
    rows.reserve(memory.size());
    for (const Vec& r : memory) rows.push_back(tape.input(r));
    ProjectedMemory pm = project_memory(tape, block, rows);
    NodeRef out = multi_head_attention(tape, block, tape.input(query), pm, mask);
    return tape.value(out);
}

// ---- finite differences -----------------------------------------------------------

double finite_diff_check(ParamStore& store, const std::function<double(GradBuffer*)>& loss,
                         const FdOptions& opts) {
    if (!(opts.epsilon > 0.0))
        throw std::invalid_argument("finite_diff_check requires epsilon > 0");
    GradBuffer analytic;
    loss(&analytic);

    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    for (int id = 0; id < static_cast<int>(store.count()); ++id) {
        Vec& theta = store.value(id);
        const Vec* g = analytic.find(id);
        std::vector<std::size_t> coords;
        if (theta.size() <= opts.max_coords_per_param) {
            coords.resize(theta.size());
            for (std::size_t j = 0; j < theta.size(); ++j) coords[j] = j;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
            for (std::size_t k = 0; k < opts.max_coords_per_param; ++k)
                coords.push_back(pick(rng));
        }
        for (std::size_t j : coords) {
            const double saved = theta[j];
            theta[j] = saved + opts.epsilon;
            const double plus = loss(nullptr);
            theta[j] = saved - opts.epsilon;
            const double minus = loss(nullptr);
            theta[j] = saved;
            const double numeric = (plus - minus) / (2.0 * opts.epsilon);
            const double analytic_j = g ? (*g)[j] : 0.0;
            const double denom = std::max(std::abs(analytic_j) + std::abs(numeric), 1e-4);
            worst = std::max(worst, std::abs(analytic_j - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace gpsql
