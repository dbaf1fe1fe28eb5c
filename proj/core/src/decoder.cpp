#include "gpsql/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "gpsql/errors.hpp"

namespace gpsql {

DecoderModel register_decoder(ParamStore& store, const GrammarSpec& grammar,
                              const DecoderConfig& config) {
    DecoderModel m;
    m.config = config;
    m.num_productions = grammar.num_productions();
    m.num_field_kinds = grammar.num_field_kinds();
    m.action_embedding = store.add("decoder.action_embedding", m.action_rows(),
                                   config.action_embed, ParamGroup::Decoder,
                                   ParamStore::Init::Uniform);
    m.node_embedding = store.add("decoder.node_embedding",
                                 static_cast<std::size_t>(m.num_field_kinds), config.node_embed,
                                 ParamGroup::Decoder, ParamStore::Init::Uniform);
    m.parent_h0 = store.add("decoder.parent_h0", config.hidden, 1, ParamGroup::Decoder,
                            ParamStore::Init::Uniform);
    m.lstm = register_lstm(store, "decoder.lstm", m.lstm_input(), config.hidden,
                           ParamGroup::Decoder);
    m.attention = register_attention(store, "decoder.attention", config.hidden, config.memory_dim,
                                     config.memory_dim, config.heads, ParamGroup::Decoder);
    m.rule_w = store.add("decoder.rule_w", static_cast<std::size_t>(m.num_productions),
                         config.hidden, ParamGroup::Decoder, ParamStore::Init::Uniform);
    m.rule_b = store.add("decoder.rule_b", static_cast<std::size_t>(m.num_productions), 1,
                         ParamGroup::Decoder, ParamStore::Init::Zero);
    m.col_proj = store.add("decoder.col_proj", config.memory_dim, config.hidden,
                           ParamGroup::Decoder, ParamStore::Init::Uniform);
    m.tab_proj = store.add("decoder.tab_proj", config.memory_dim, config.hidden,
                           ParamGroup::Decoder, ParamStore::Init::Uniform);
    m.val_proj = store.add("decoder.val_proj", config.memory_dim, config.hidden,
                           ParamGroup::Decoder, ParamStore::Init::Uniform);
    m.end_w = store.add("decoder.end_w", config.hidden, 1, ParamGroup::Decoder,
                        ParamStore::Init::Uniform);
    return m;
}

namespace {

/// One decoding/scoring run on a single tape: parameter leaves are created
/// once and shared by every step (and every beam hypothesis).
class Run {
  public:
    Run(Tape& tape, const ParamStore& store, const DecoderModel& model,
        const GrammarSpec& grammar, const EncodedNodes* memory, const LegalContext& ctx)
        : tape_(tape), store_(store), model_(model), grammar_(grammar), memory_(memory),
          ctx_(ctx) {
        if (ctx.mode == DecodeMode::Normal) {
            if (!memory) throw MissingMemory();
            attention_ = attention_nodes(tape, store, model.attention);
            projected_ = project_memory(tape, attention_, memory->rows);
            mask_.assign(memory->rows.size(), true);
            if (ctx.num_columns > static_cast<int>(memory->columns.size()))
                throw ShapeMismatch("context declares " + std::to_string(ctx.num_columns) +
                                    " columns but the memory holds " +
                                    std::to_string(memory->columns.size()));
            if (ctx.num_tables > static_cast<int>(memory->tables.size()))
                throw ShapeMismatch("context declares " + std::to_string(ctx.num_tables) +
                                    " tables but the memory holds " +
                                    std::to_string(memory->tables.size()));
            if (ctx.question_len > static_cast<int>(memory->question.size()))
                throw ShapeMismatch("context declares a question of " +
                                    std::to_string(ctx.question_len) +
                                    " tokens but the memory holds " +
                                    std::to_string(memory->question.size()));
        }
        lstm_ = lstm_nodes(tape, store, model.lstm);
        parent_h0_ = store.use(tape, model.parent_h0);
        end_w_ = store.use(tape, model.end_w);
        col_proj_ = store.use(tape, model.col_proj);
        tab_proj_ = store.use(tape, model.tab_proj);
        val_proj_ = store.use(tape, model.val_proj);
        sentinel_action_ = action_row(static_cast<int>(model.action_rows()) - 1);
    }

    LstmStateNodes zero_state() { return lstm_zero_state(tape_, model_.config.hidden); }

    /// Runs the recurrence once. prev/parent_action are nullptr for the
    /// sentinel; parent_step < 0 selects the sentinel h_{p_0}.
    LstmStateNodes advance_lstm(const LstmStateNodes& state, const Action* prev, int parent_step,
                                const Action* parent_action,
                                const std::vector<NodeRef>& history, FieldKind kind) {
        NodeRef prev_e = prev ? action_embed(*prev) : sentinel_action_;
        NodeRef z = (ctx_.mode == DecodeMode::Gp)
                        ? tape_.zeros(model_.config.memory_dim)
                        : multi_head_attention(tape_, attention_, state.h, projected_, mask_);
        NodeRef hp = parent_step >= 0 ? history[parent_step] : parent_h0_;
        NodeRef ap = parent_action ? action_embed(*parent_action) : sentinel_action_;
        NodeRef nf = node_embed(kind);
        NodeRef input = tape_.concat({prev_e, z, hp, ap, nf});
        return lstm_cell(tape_, lstm_, input, state);
    }

    /// Scalar logits for a legal-action list, stacked into one node.
    NodeRef legal_logits(const std::vector<Action>& legal, NodeRef h) {
        NodeRef col_query{-1}, tab_query{-1}, val_query{-1};
        std::vector<NodeRef> scores;
        scores.reserve(legal.size());
        const auto& d = model_.config;
        for (const Action& a : legal) {
            switch (a.tag) {
                case Action::Tag::ApplyRule: {
                    NodeRef w = store_.use_row(tape_, model_.rule_w,
                                               static_cast<std::size_t>(a.index));
                    NodeRef b = store_.use_row(tape_, model_.rule_b,
                                               static_cast<std::size_t>(a.index));
                    scores.push_back(tape_.add(tape_.dot(w, h), b));
                    break;
                }
                case Action::Tag::SelectColumn: {
                    if (!memory_ || a.index >= static_cast<int>(memory_->columns.size()))
                        throw ShapeMismatch("no pooled vector for column " +
                                            std::to_string(a.index));
                    if (col_query.id < 0)
                        col_query = tape_.matvec(col_proj_, h, d.memory_dim, d.hidden);
                    scores.push_back(tape_.dot(col_query, memory_->columns[a.index]));
                    break;
                }
                case Action::Tag::SelectTable: {
                    if (!memory_ || a.index >= static_cast<int>(memory_->tables.size()))
                        throw ShapeMismatch("no pooled vector for table " +
                                            std::to_string(a.index));
                    if (tab_query.id < 0)
                        tab_query = tape_.matvec(tab_proj_, h, d.memory_dim, d.hidden);
                    scores.push_back(tape_.dot(tab_query, memory_->tables[a.index]));
                    break;
                }
                case Action::Tag::GenValue: {
                    if (!memory_ || a.index >= static_cast<int>(memory_->question.size()))
                        throw ShapeMismatch("no question vector for token " +
                                            std::to_string(a.index));
                    if (val_query.id < 0)
                        val_query = tape_.matvec(val_proj_, h, d.memory_dim, d.hidden);
                    scores.push_back(tape_.dot(val_query, memory_->question[a.index]));
                    break;
                }
                case Action::Tag::GenValueEnd:
                    scores.push_back(tape_.dot(end_w_, h));
                    break;
            }
        }
        return tape_.stack_scalars(scores);
    }

    Tape& tape() { return tape_; }
    const LegalContext& ctx() const { return ctx_; }

  private:
    NodeRef action_row(int row) {
        return store_.use_row(tape_, model_.action_embedding, static_cast<std::size_t>(row));
    }

    NodeRef action_embed(const Action& a) {
        const int P = model_.num_productions;
        switch (a.tag) {
            case Action::Tag::ApplyRule: return action_row(a.index);
            case Action::Tag::SelectColumn: return action_row(P);
            case Action::Tag::SelectTable: return action_row(P + 1);
            case Action::Tag::GenValue: return action_row(P + 2);
            case Action::Tag::GenValueEnd: return action_row(P + 3);
        }
        throw IndexOutOfRange("action tag");
    }

    NodeRef node_embed(FieldKind kind) {
        int id = grammar_.field_kind_id(kind);
        return store_.use_row(tape_, model_.node_embedding, static_cast<std::size_t>(id));
    }

    Tape& tape_;
    const ParamStore& store_;
    const DecoderModel& model_;
    const GrammarSpec& grammar_;
    const EncodedNodes* memory_;
    LegalContext ctx_;
    LstmNodes lstm_;
    AttentionNodes attention_;
    ProjectedMemory projected_;
    std::vector<bool> mask_;
    NodeRef parent_h0_{-1};
    NodeRef end_w_{-1};
    NodeRef col_proj_{-1};
    NodeRef tab_proj_{-1};
    NodeRef val_proj_{-1};
    NodeRef sentinel_action_{-1};
};

/// Lifts plain encoded memory onto a tape as input nodes.
EncodedNodes lift_memory(Tape& tape, const EncodedMemory& memory) {
    EncodedNodes out;
    for (const Vec& r : memory.rows) out.rows.push_back(tape.input(r));
    for (const Vec& r : memory.question) out.question.push_back(tape.input(r));
    for (const Vec& r : memory.columns) out.columns.push_back(tape.input(r));
    for (const Vec& r : memory.tables) out.tables.push_back(tape.input(r));
    return out;
}

bool is_terminal_kind(FieldKind k) { return k.terminal; }

int find_in_legal(const std::vector<Action>& legal, const Action& a) {
    for (std::size_t i = 0; i < legal.size(); ++i)
        if (legal[i] == a) return static_cast<int>(i);
    return -1;
}

}  // namespace

// ---- init / step / advance ---------------------------------------------------------

DecoderState init_state(const GrammarSpec& grammar, const DecoderModel& model,
                        const EncodedMemory* memory, DecodeMode mode) {
    if (mode == DecodeMode::Normal && !memory) throw MissingMemory();
    DecoderState s{LstmState{Vec(model.config.hidden, 0.0), Vec(model.config.hidden, 0.0)}, 0,
                   {}, DerivationState(grammar), mode};
    return s;
}

std::pair<DecoderState, ActionDistribution> step(const DecoderState& state,
                                                 const Action& prev_action,
                                                 const ParamStore& store,
                                                 const DecoderModel& model,
                                                 const EncodedMemory* memory,
                                                 const LegalContext& ctx) {
    if (state.derivation.complete()) throw CompleteDerivation();
    if (ctx.mode != state.mode)
        throw Error("decode mode of the context differs from the state's");
    if (state.mode == DecodeMode::Normal && !memory) throw MissingMemory();
    if (state.derivation.steps() != state.t)
        throw Error("advance() must apply the chosen action before the next step()");
    if (state.t > 0 && !(state.derivation.action_at(state.t - 1) == prev_action))
        throw Error("prev_action does not match the last advanced action");

    Tape tape(/*forward_only=*/true);
    EncodedNodes lifted;
    const EncodedNodes* mem_nodes = nullptr;
    if (memory && state.mode == DecodeMode::Normal) {
        lifted = lift_memory(tape, *memory);
        mem_nodes = &lifted;
    }
    Run run(tape, store, model, state.derivation.grammar(), mem_nodes, ctx);

    std::vector<NodeRef> history;
    history.reserve(state.history.size());
    for (const Vec& h : state.history) history.push_back(tape.input(h));
    LstmStateNodes st{tape.input(state.lstm.m), tape.input(state.lstm.h)};

    FieldKind kind = state.derivation.expected_kind();
    int parent = state.derivation.parent_step();
    const Action* parent_action = parent >= 0 ? &state.derivation.action_at(parent) : nullptr;
    const Action* prev = state.t > 0 ? &prev_action : nullptr;
    LstmStateNodes next = run.advance_lstm(st, prev, parent, parent_action, history, kind);

    std::vector<Action> legal = legal_actions(state.derivation, ctx);
    ActionDistribution dist;
    dist.legal = legal;
    if (ctx.mode == DecodeMode::Gp && is_terminal_kind(kind)) {
        // Forced steps: probability 1 on the single column/table choice;
        // uniform over the (tiny) value set. No memory is consulted.
        dist.probs.assign(legal.size(), 1.0 / static_cast<double>(legal.size()));
    } else {
        NodeRef logits = run.legal_logits(legal, next.h);
        dist.probs = softmax_value(tape.value(logits));
    }

    DecoderState out = state;
    out.lstm = LstmState{tape.value(next.m), tape.value(next.h)};
    out.history.push_back(out.lstm.h);
    out.t += 1;
    return {std::move(out), std::move(dist)};
}

DecoderState advance(DecoderState state, const Action& chosen, const LegalContext& ctx) {
    if (state.derivation.steps() != state.t - 1)
        throw Error("advance() expects exactly one pending step() result");
    state.derivation.apply(chosen, ctx);
    return state;
}

// ---- teacher forcing ----------------------------------------------------------------

NodeRef teacher_forced_nll_nodes(Tape& tape, const ParamStore& store, const DecoderModel& model,
                                 const GrammarSpec& grammar, const std::vector<Action>& gold,
                                 const EncodedNodes* memory, const LegalContext& ctx,
                                 std::vector<StepInfo>* trace) {
    if (ctx.mode == DecodeMode::Normal && !memory) throw MissingMemory();
    Run run(tape, store, model, grammar, memory, ctx);

    DerivationState der(grammar);
    LstmStateNodes st = run.zero_state();
    std::vector<NodeRef> history;
    NodeRef loss{-1};

    for (std::size_t t = 0; t < gold.size(); ++t) {
        if (der.complete())
            throw IllegalGoldSequence(static_cast<int>(t),
                                      "actions continue after the derivation completed");
        FieldKind kind = der.expected_kind();
        int parent = der.parent_step();
        const Action* parent_action = parent >= 0 ? &der.action_at(parent) : nullptr;
        const Action* prev = t > 0 ? &gold[t - 1] : nullptr;
        st = run.advance_lstm(st, prev, parent, parent_action, history, kind);
        history.push_back(st.h);

        std::vector<Action> legal = legal_actions(der, ctx);
        int pos = find_in_legal(legal, gold[t]);
        if (pos < 0)
            throw IllegalGoldSequence(static_cast<int>(t),
                                      to_string(gold[t], &grammar) + " is not legal here");
        bool counted = !(ctx.mode == DecodeMode::Gp && is_terminal_kind(kind));
        if (counted) {
            NodeRef nll = tape.softmax_nll(run.legal_logits(legal, st.h), pos);
            loss = (loss.id < 0) ? nll : tape.add(loss, nll);
        }
        if (trace)
            trace->push_back(StepInfo{parent, grammar.field_kind_id(kind), counted,
                                      static_cast<int>(legal.size()), pos});
        der.apply(gold[t], ctx);
    }
    if (!der.complete())
        throw IllegalGoldSequence(static_cast<int>(gold.size()),
                                  "gold sequence ends before the derivation completes");
    if (loss.id < 0) loss = tape.zeros(1);
    return loss;
}

double teacher_forced_nll(const ParamStore& store, const DecoderModel& model,
                          const GrammarSpec& grammar, const std::vector<Action>& gold,
                          const EncodedMemory* memory, const LegalContext& ctx) {
    Tape tape(/*forward_only=*/true);
    EncodedNodes lifted;
    const EncodedNodes* mem_nodes = nullptr;
    if (memory) {
        lifted = lift_memory(tape, *memory);
        mem_nodes = &lifted;
    }
    return tape.scalar(
        teacher_forced_nll_nodes(tape, store, model, grammar, gold, mem_nodes, ctx));
}

// ---- decoding -----------------------------------------------------------------------

DecodeResult decode_greedy(const ParamStore& store, const DecoderModel& model,
                           const GrammarSpec& grammar, const EncodedMemory& memory,
                           const LegalContext& ctx, int max_len) {
    if (ctx.mode != DecodeMode::Normal) throw Error("decoding runs in NORMAL mode only");
    Tape tape(/*forward_only=*/true);
    EncodedNodes lifted = lift_memory(tape, memory);
    Run run(tape, store, model, grammar, &lifted, ctx);

    DerivationState der(grammar);
    LstmStateNodes st = run.zero_state();
    std::vector<NodeRef> history;
    DecodeResult out;

    for (int t = 0; !der.complete(); ++t) {
        if (t >= max_len) throw MaxLengthExceeded();
        FieldKind kind = der.expected_kind();
        int parent = der.parent_step();
        const Action* parent_action = parent >= 0 ? &der.action_at(parent) : nullptr;
        const Action* prev = t > 0 ? &out.actions.back() : nullptr;
        st = run.advance_lstm(st, prev, parent, parent_action, history, kind);
        history.push_back(st.h);

        std::vector<Action> legal = legal_actions(der, ctx);
        Vec probs = softmax_value(tape.value(run.legal_logits(legal, st.h)));
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = i;
        out.score += std::log(probs[best]);
        der.apply(legal[best], ctx);
        out.actions.push_back(legal[best]);
    }
    return out;
}

DecodeResult decode_beam(const ParamStore& store, const DecoderModel& model,
                         const GrammarSpec& grammar, const EncodedMemory& memory,
                         const LegalContext& ctx, int width, int max_len) {
    if (ctx.mode != DecodeMode::Normal) throw Error("decoding runs in NORMAL mode only");
    if (width < 1) throw IndexOutOfRange("beam width " + std::to_string(width));
    Tape tape(/*forward_only=*/true);
    EncodedNodes lifted = lift_memory(tape, memory);
    Run run(tape, store, model, grammar, &lifted, ctx);

    struct Hyp {
        LstmStateNodes st;
        std::vector<NodeRef> history;
        DerivationState der;
        std::vector<Action> actions;
        double score = 0.0;
    };

    std::vector<Hyp> beam;
    beam.push_back(Hyp{run.zero_state(), {}, DerivationState(grammar), {}, 0.0});
    std::vector<Hyp> finished;

    for (int t = 0; !beam.empty(); ++t) {
        if (t >= max_len) {
            if (finished.empty()) throw MaxLengthExceeded();
            break;
        }
        struct Cand {
            std::size_t hyp;
            Action action;
            double score;
            LstmStateNodes st;
        };
        std::vector<Cand> cands;
        for (std::size_t hi = 0; hi < beam.size(); ++hi) {
            Hyp& hyp = beam[hi];
            FieldKind kind = hyp.der.expected_kind();
            int parent = hyp.der.parent_step();
            const Action* parent_action = parent >= 0 ? &hyp.der.action_at(parent) : nullptr;
            const Action* prev = hyp.actions.empty() ? nullptr : &hyp.actions.back();
            LstmStateNodes st =
                run.advance_lstm(hyp.st, prev, parent, parent_action, hyp.history, kind);
            std::vector<Action> legal = legal_actions(hyp.der, ctx);
            Vec probs = softmax_value(tape.value(run.legal_logits(legal, st.h)));
            for (std::size_t i = 0; i < legal.size(); ++i)
                cands.push_back(Cand{hi, legal[i], hyp.score + std::log(probs[i]), st});
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& a, const Cand& b) { return a.score > b.score; });
        if (static_cast<int>(cands.size()) > width) cands.resize(width);

        std::vector<Hyp> next;
        for (const Cand& c : cands) {
            Hyp h = beam[c.hyp];  // copy: derivation and history fork here
            h.st = c.st;
            h.history.push_back(c.st.h);
            h.der.apply(c.action, ctx);
            h.actions.push_back(c.action);
            h.score = c.score;
            if (h.der.complete())
                finished.push_back(std::move(h));
            else
                next.push_back(std::move(h));
        }
        beam = std::move(next);
    }
    if (finished.empty()) throw MaxLengthExceeded();
    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i)
        if (finished[i].score > finished[best].score) best = i;
    return DecodeResult{std::move(finished[best].actions), finished[best].score};
}

DecodeResult decode(const ParamStore& store, const DecoderModel& model, const GrammarSpec& grammar,
                    const EncodedMemory& memory, const LegalContext& ctx, int beam_width,
                    int max_len) {
    if (beam_width <= 1) return decode_greedy(store, model, grammar, memory, ctx, max_len);
    return decode_beam(store, model, grammar, memory, ctx, beam_width, max_len);
}

}  // namespace gpsql
