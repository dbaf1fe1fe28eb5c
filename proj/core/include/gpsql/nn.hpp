#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpsql/params.hpp"
#include "gpsql/tape.hpp"

namespace gpsql {

// ---- LSTM cell -------------------------------------------------------------------

/// Ids of one LSTM cell's parameters inside a ParamStore.
struct LstmParams {
    int w_x = -1;  // (4H x input), gate order [i f o g]
    int w_h = -1;  // (4H x H)
    int b = -1;    // (4H)
    std::size_t input = 0;
    std::size_t hidden = 0;
};

/// Registers `prefix.w_x`, `prefix.w_h` (uniform init) and `prefix.b` (zeros).
LstmParams register_lstm(ParamStore& store, const std::string& prefix, std::size_t input,
                         std::size_t hidden, ParamGroup group);

/// The cell's parameter leaves on one tape; create once per tape and reuse
/// for every step so the parameter arrays are copied onto the tape only once.
struct LstmNodes {
    NodeRef w_x;
    NodeRef w_h;
    NodeRef b;
    std::size_t input = 0;
    std::size_t hidden = 0;
};

LstmNodes lstm_nodes(Tape& tape, const ParamStore& store, const LstmParams& params);

/// Cell state (m) and output (h) as nodes on a tape.
struct LstmStateNodes {
    NodeRef m;
    NodeRef h;
};

LstmStateNodes lstm_zero_state(Tape& tape, std::size_t hidden);

/// One step of the standard LSTM recurrence:
///   z = W_x x + W_h h + b, split [i f o g];
///   m' = sigmoid(f) * m + sigmoid(i) * tanh(g);  h' = sigmoid(o) * tanh(m').
LstmStateNodes lstm_cell(Tape& tape, const LstmNodes& cell, NodeRef input,
                         const LstmStateNodes& state);

/// Plain-value convenience: runs one step on a throwaway forward-only tape.
struct LstmState {
    Vec m;
    Vec h;
};
LstmState lstm_cell(const ParamStore& store, const LstmParams& params, const Vec& input,
                    const LstmState& state);

// ---- multi-head attention ------------------------------------------------------

/// Ids and dimensions of one attention block's parameters.
struct AttentionParams {
    int w_q = -1;  // (D x query_dim)
    int w_k = -1;  // (D x mem_dim)
    int w_v = -1;  // (D x mem_dim)
    int w_o = -1;  // (D x D)
    std::size_t query_dim = 0;
    std::size_t mem_dim = 0;
    std::size_t model_dim = 0;  // D, divisible by heads
    std::size_t heads = 0;
};

/// Registers `prefix.w_q|w_k|w_v|w_o`; throws ShapeMismatch unless
/// model_dim % heads == 0.
AttentionParams register_attention(ParamStore& store, const std::string& prefix,
                                   std::size_t query_dim, std::size_t mem_dim,
                                   std::size_t model_dim, std::size_t heads, ParamGroup group);

/// The block's parameter leaves on one tape (create once per tape).
struct AttentionNodes {
    NodeRef w_q;
    NodeRef w_k;
    NodeRef w_v;
    NodeRef w_o;
    AttentionParams dims;
};

AttentionNodes attention_nodes(Tape& tape, const ParamStore& store, const AttentionParams& params);

/// Keys and values projected once per memory; reusable across many queries on
/// the same tape.
struct ProjectedMemory {
    std::vector<NodeRef> keys;    // one node of size D per memory row
    std::vector<NodeRef> values;  // one node of size D per memory row
};

ProjectedMemory project_memory(Tape& tape, const AttentionNodes& block,
                               const std::vector<NodeRef>& memory_rows);

/// Scaled dot-product attention per head over unmasked rows (mask[i] true =
/// row visible), heads concatenated and passed through the output projection.
/// Throws AllMasked when no row is visible, ShapeMismatch on bad sizes.
NodeRef multi_head_attention(Tape& tape, const AttentionNodes& block, NodeRef query,
                             const ProjectedMemory& memory, const std::vector<bool>& mask);

/// Plain-value convenience: projects `memory` and attends on a throwaway
/// forward-only tape.
Vec multi_head_attention(const ParamStore& store, const AttentionParams& params, const Vec& query,
                         const std::vector<Vec>& memory, const std::vector<bool>& mask);

// ---- gradient checking -----------------------------------------------------------

struct FdOptions {
    double epsilon = 1e-5;
    /// Coordinates sampled per parameter array (all of them when the array is
    /// smaller).
    std::size_t max_coords_per_param = 8;
    std::uint64_t seed = 12345;
};

/// Compares the loss function's analytic gradients against central finite
/// differences and returns the worst relative error observed.
///
/// `loss` must be pure: called once with a GradBuffer to collect analytic
/// gradients, then repeatedly with nullptr while single coordinates of `store`
/// are perturbed by ±epsilon (each perturbation is restored afterwards).
/// Throws std::invalid_argument when epsilon <= 0.
double finite_diff_check(ParamStore& store, const std::function<double(GradBuffer*)>& loss,
                         const FdOptions& opts = {});

}  // namespace gpsql
