#pragma once

#include <utility>
#include <vector>

#include "gpsql/ast.hpp"
#include "gpsql/encoder.hpp"
#include "gpsql/grammar.hpp"
#include "gpsql/nn.hpp"
#include "gpsql/params.hpp"
#include "gpsql/tape.hpp"

namespace gpsql {

struct DecoderConfig {
    std::size_t action_embed = 64;
    std::size_t node_embed = 64;
    std::size_t hidden = 128;
    /// Width of encoder memory rows and pooled item vectors; must match the
    /// encoder's memory_dim() when the two are trained together.
    std::size_t memory_dim = 128;
    std::size_t heads = 4;
};

/// Parameter ids of the decoder. The action-embedding table has one row per
/// production followed by four content-independent type rows (SelectColumn,
/// SelectTable, GenValue, GenValueEnd) and one sentinel row used both as the
/// "previous action" at step 0 and as the root's parent-action embedding.
struct DecoderModel {
    DecoderConfig config;
    int num_productions = 0;
    int num_field_kinds = 0;
    int action_embedding = -1;  // (num_productions + 5) x action_embed
    int node_embedding = -1;    // num_field_kinds x node_embed
    int parent_h0 = -1;         // hidden sentinel for h_{p_0}
    LstmParams lstm;
    AttentionParams attention;
    int rule_w = -1;    // num_productions x hidden
    int rule_b = -1;    // num_productions x 1
    int col_proj = -1;  // memory_dim x hidden
    int tab_proj = -1;  // memory_dim x hidden
    int val_proj = -1;  // memory_dim x hidden
    int end_w = -1;     // hidden x 1

    std::size_t action_rows() const { return static_cast<std::size_t>(num_productions) + 5; }
    /// [embed(prev) | context | parent h | embed(parent action) | node type]
    std::size_t lstm_input() const {
        return 2 * config.action_embed + config.memory_dim + config.hidden + config.node_embed;
    }
};

DecoderModel register_decoder(ParamStore& store, const GrammarSpec& grammar,
                              const DecoderConfig& config);

/// Probabilities over exactly the legal actions of the state that produced
/// them; same length as `legal`, nonnegative, summing to 1.
struct ActionDistribution {
    std::vector<Action> legal;
    std::vector<double> probs;
};

/// Step-by-step decoding state (plain values). `history` holds h_0..h_{t-1};
/// the derivation holds every action chosen so far (advance() applies them).
struct DecoderState {
    LstmState lstm;
    int t = 0;
    std::vector<Vec> history;
    DerivationState derivation;
    DecodeMode mode = DecodeMode::Normal;
};

/// Fresh state at the grammar root. NORMAL mode requires a memory (pass the
/// encoded example); GP mode accepts nullptr, meaning the all-zero context.
DecoderState init_state(const GrammarSpec& grammar, const DecoderModel& model,
                        const EncodedMemory* memory, DecodeMode mode);

/// Runs one recurrence step and scores the current frontier. `prev_action`
/// must be the action applied by the latest advance() (ignored at t = 0,
/// where a learned sentinel embedding is fed instead). The returned state has
/// the step recorded but the derivation untouched; pick an action from the
/// distribution and advance().
std::pair<DecoderState, ActionDistribution> step(const DecoderState& state,
                                                 const Action& prev_action,
                                                 const ParamStore& store,
                                                 const DecoderModel& model,
                                                 const EncodedMemory* memory,
                                                 const LegalContext& ctx);

/// Applies the chosen action to the derivation (throws IllegalAction).
DecoderState advance(DecoderState state, const Action& chosen, const LegalContext& ctx);

/// Per-step bookkeeping exposed for verification.
struct StepInfo {
    int parent_step = -1;  // -1 = sentinel h_{p_0}
    int field_kind = -1;
    bool counted = true;  // false for GP terminal steps (forced, zero loss)
    int legal_count = 0;
    int gold_pos = -1;  // gold action's index within the legal list
};

/// Teacher-forced negative log-likelihood of `gold` as one tape node.
/// memory == nullptr means the all-zero context (GP mode only; NORMAL mode
/// throws MissingMemory). In GP mode column/table/value steps are skipped:
/// their probability is treated as 1 and contributes nothing, so the result
/// is bit-identical for ZERO and arbitrary memory.
NodeRef teacher_forced_nll_nodes(Tape& tape, const ParamStore& store, const DecoderModel& model,
                                 const GrammarSpec& grammar, const std::vector<Action>& gold,
                                 const EncodedNodes* memory, const LegalContext& ctx,
                                 std::vector<StepInfo>* trace = nullptr);

/// Value-level convenience on a private forward-only tape.
double teacher_forced_nll(const ParamStore& store, const DecoderModel& model,
                          const GrammarSpec& grammar, const std::vector<Action>& gold,
                          const EncodedMemory* memory, const LegalContext& ctx);

struct DecodeResult {
    std::vector<Action> actions;
    double score = 0.0;  // summed log-probabilities of the chosen actions
};

DecodeResult decode_greedy(const ParamStore& store, const DecoderModel& model,
                           const GrammarSpec& grammar, const EncodedMemory& memory,
                           const LegalContext& ctx, int max_len = kMaxActionLength);

DecodeResult decode_beam(const ParamStore& store, const DecoderModel& model,
                         const GrammarSpec& grammar, const EncodedMemory& memory,
                         const LegalContext& ctx, int width, int max_len = kMaxActionLength);

/// width == 1 dispatches to the greedy path.
DecodeResult decode(const ParamStore& store, const DecoderModel& model,
                    const GrammarSpec& grammar, const EncodedMemory& memory,
                    const LegalContext& ctx, int beam_width = 1,
                    int max_len = kMaxActionLength);

}  // namespace gpsql
