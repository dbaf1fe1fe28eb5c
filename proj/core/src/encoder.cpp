#include "gpsql/encoder.hpp"

#include <algorithm>

#include "gpsql/errors.hpp"

namespace gpsql {

EncoderParams register_encoder(ParamStore& store, int vocab_size, const EncoderConfig& config) {
    if (vocab_size < 3) throw ShapeMismatch("vocabulary must hold at least the reserved tokens");
    EncoderParams p;
    p.config = config;
    p.vocab_size = vocab_size;
    p.embedding = store.add("encoder.embedding", static_cast<std::size_t>(vocab_size),
                            config.embed_dim, ParamGroup::Encoder, ParamStore::Init::Uniform);
    p.fwd = register_lstm(store, "encoder.fwd", config.embed_dim, config.hidden,
                          ParamGroup::Encoder);
    p.bwd = register_lstm(store, "encoder.bwd", config.embed_dim, config.hidden,
                          ParamGroup::Encoder);
    return p;
}

std::vector<NodeRef> embed_sequence_nodes(Tape& tape, const ParamStore& store,
                                          const EncoderParams& enc, const Vocab& vocab,
                                          const std::vector<std::string>& tokens) {
    const ParamInfo& info = store.info(enc.embedding);
    std::vector<NodeRef> rows;
    rows.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        std::size_t row = static_cast<std::size_t>(vocab.id(tok));
        rows.push_back(tape.param_row(enc.embedding, store.value(enc.embedding), info.rows,
                                      info.cols, row));
    }
    return rows;
}

std::vector<NodeRef> contextualize_nodes(Tape& tape, const ParamStore& store,
                                         const EncoderParams& enc,
                                         const std::vector<NodeRef>& embeddings) {
    if (embeddings.empty()) throw ShapeMismatch("contextualize of an empty sequence");
    const std::size_t n = embeddings.size();
    LstmNodes fwd = lstm_nodes(tape, store, enc.fwd);
    LstmNodes bwd = lstm_nodes(tape, store, enc.bwd);

    std::vector<NodeRef> fwd_h(n), bwd_h(n);
    LstmStateNodes state = lstm_zero_state(tape, enc.config.hidden);
    for (std::size_t i = 0; i < n; ++i) {
        state = lstm_cell(tape, fwd, embeddings[i], state);
        fwd_h[i] = state.h;
    }
    state = lstm_zero_state(tape, enc.config.hidden);
    for (std::size_t i = n; i-- > 0;) {
        state = lstm_cell(tape, bwd, embeddings[i], state);
        bwd_h[i] = state.h;
    }

    std::vector<NodeRef> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(tape.concat({fwd_h[i], bwd_h[i]}));
    return out;
}

NodeRef pool_segments_nodes(Tape& tape, const std::vector<NodeRef>& rows,
                            const std::vector<Segment>& segments) {
    std::vector<NodeRef> members;
    for (const Segment& s : segments) {
        if (s.begin < 0 || s.end > static_cast<int>(rows.size()) || s.begin > s.end)
            throw IndexOutOfRange("segment [" + std::to_string(s.begin) + ", " +
                                  std::to_string(s.end) + ") outside " +
                                  std::to_string(rows.size()) + " rows");
        for (int i = s.begin; i < s.end; ++i) members.push_back(rows[i]);
    }
    if (members.empty()) throw EmptySpan();
    return tape.mean_rows(members);
}

EncodedNodes encode_nodes(Tape& tape, const ParamStore& store, const EncoderParams& enc,
                          const Vocab& vocab, const LinkedSequence& seq) {
    EncodedNodes out;
    std::vector<NodeRef> embedded = embed_sequence_nodes(tape, store, enc, vocab, seq.tokens);
    out.rows = contextualize_nodes(tape, store, enc, embedded);

    auto [qb, qe] = seq.question_span();
    for (int i = qb; i < qe; ++i) out.question.push_back(out.rows[i]);

    int num_columns = 0;
    int num_tables = 0;
    for (const Segment& s : seq.segments) {
        if (s.kind == SegmentKind::Column) num_columns = std::max(num_columns, s.item + 1);
        if (s.kind == SegmentKind::Table) num_tables = std::max(num_tables, s.item + 1);
    }
    for (int c = 0; c < num_columns; ++c)
        out.columns.push_back(pool_segments_nodes(tape, out.rows, seq.column_segments(c)));
    for (int t = 0; t < num_tables; ++t)
        out.tables.push_back(pool_segments_nodes(tape, out.rows, {seq.table_segment(t)}));
    return out;
}

// ---- value-level -------------------------------------------------------------------

std::vector<Vec> embed_sequence(const ParamStore& store, const EncoderParams& enc,
                                const Vocab& vocab, const LinkedSequence& seq) {
    Tape tape(/*forward_only=*/true);
    std::vector<Vec> out;
    for (NodeRef r : embed_sequence_nodes(tape, store, enc, vocab, seq.tokens))
        out.push_back(tape.value(r));
    return out;
}

std::vector<Vec> contextualize(const ParamStore& store, const EncoderParams& enc,
                               const std::vector<Vec>& embeddings) {
    Tape tape(/*forward_only=*/true);
    std::vector<NodeRef> rows;
    rows.reserve(embeddings.size());
    for (const Vec& e : embeddings) rows.push_back(tape.input(e));
    std::vector<Vec> out;
    for (NodeRef r : contextualize_nodes(tape, store, enc, rows)) out.push_back(tape.value(r));
    return out;
}

Vec pool_item(const std::vector<Vec>& memory, std::pair<int, int> item_span,
              std::optional<std::pair<int, int>> value_span) {
    std::vector<const Vec*> members;
    auto collect = [&](std::pair<int, int> span) {
        if (span.first < 0 || span.second > static_cast<int>(memory.size()) ||
            span.first > span.second)
            throw IndexOutOfRange("span [" + std::to_string(span.first) + ", " +
                                  std::to_string(span.second) + ") outside " +
                                  std::to_string(memory.size()) + " rows");
        for (int i = span.first; i < span.second; ++i) members.push_back(&memory[i]);
    };
    collect(item_span);
    if (value_span) collect(*value_span);
    if (members.empty()) throw EmptySpan();

    Vec mean(members[0]->size(), 0.0);
    for (const Vec* row : members) {
        if (row->size() != mean.size()) throw ShapeMismatch("pooled rows have differing sizes");
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*row)[i];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& x : mean) x *= inv;
    return mean;
}

EncodedMemory encode_memory(const ParamStore& store, const EncoderParams& enc, const Vocab& vocab,
                            const LinkedSequence& seq) {
    Tape tape(/*forward_only=*/true);
    EncodedNodes nodes = encode_nodes(tape, store, enc, vocab, seq);
    EncodedMemory out;
    for (NodeRef r : nodes.rows) out.rows.push_back(tape.value(r));
    for (NodeRef r : nodes.question) out.question.push_back(tape.value(r));
    for (NodeRef r : nodes.columns) out.columns.push_back(tape.value(r));
    for (NodeRef r : nodes.tables) out.tables.push_back(tape.value(r));
    return out;
}

}  // namespace gpsql
