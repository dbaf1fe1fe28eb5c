#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gpsql/encoder.hpp"
#include "gpsql/errors.hpp"
#include "gpsql/link.hpp"
#include "gpsql/schema.hpp"
#include "gpsql/tokenize.hpp"
#include "gpsql/vocab.hpp"

using namespace gpsql;

namespace {

Schema volvo_schema() {
    auto schemas = load_tables_file(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/tables.json");
    return find_schema(schemas, "car_1");
}

DbContent volvo_content(const Schema& s) {
    return DbContent::load(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/db_content/car_1.json",
                           s);
}

Vocab toy_vocab() {
    return Vocab::build({{"what", "is", "the", "horsepower", "of", "volvo", "740", "car", "make",
                          "model", "names", "cars", "data", "id", "*", "alpha", "beta"}});
}

EncoderConfig small_config() {
    EncoderConfig c;
    c.embed_dim = 6;
    c.hidden = 5;
    return c;
}

}  // namespace

TEST_CASE("embed_sequence yields one row per token with lookup semantics") {
    Vocab vocab = toy_vocab();
    ParamStore store(3);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    std::vector<std::string> q = {"what", "is", "the", "horsepower", "of", "volvo", "740", "what"};
    LinkedSequence seq = serialize(q, volvo_schema(), {});
    std::vector<Vec> rows = embed_sequence(store, enc, vocab, seq);

    REQUIRE(rows.size() == seq.tokens.size());
    for (const Vec& r : rows) CHECK(r.size() == 6);

    // Same token twice -> identical rows (positions of the two "what"s).
    auto [qb, qe] = seq.question_span();
    CHECK(rows[qb] == rows[qb + 7]);

    // A ten-token plain list embeds to a 10 x dim matrix.
    LinkedSequence plain;
    plain.tokens = {"what", "is", "the", "alpha", "beta", "car", "make", "model", "id", "*"};
    plain.segments.push_back(Segment{SegmentKind::Question, 0, 10, -1});
    std::vector<Vec> ten = embed_sequence(store, enc, vocab, plain);
    CHECK(ten.size() == 10);
}

TEST_CASE("out-of-vocabulary tokens embed as the UNK row") {
    Vocab vocab = toy_vocab();
    ParamStore store(3);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    LinkedSequence seq;
    seq.tokens = {"zzzz_never_seen", "what"};
    seq.segments.push_back(Segment{SegmentKind::Question, 0, 2, -1});
    std::vector<Vec> rows = embed_sequence(store, enc, vocab, seq);

    const Vec& table = store.value(enc.embedding);
    Vec unk(table.begin() + Vocab::kUnk * 6, table.begin() + (Vocab::kUnk + 1) * 6);
    CHECK(rows[0] == unk);
    CHECK(rows[1] != unk);
}

TEST_CASE("contextualize preserves row count and handles a single token") {
    Vocab vocab = toy_vocab();
    ParamStore store(5);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    std::vector<Vec> one = {Vec(6, 0.25)};
    std::vector<Vec> ctx1 = contextualize(store, enc, one);
    REQUIRE(ctx1.size() == 1);
    CHECK(ctx1[0].size() == enc.config.memory_dim());

    std::vector<Vec> many(7, Vec(6, 0.1));
    CHECK(contextualize(store, enc, many).size() == 7);

    CHECK_THROWS_AS(contextualize(store, enc, {}), ShapeMismatch);
}

TEST_CASE("contextualize with zero parameters produces all-zero rows") {
    Vocab vocab = toy_vocab();
    ParamStore store(5);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());
    for (const char* name : {"encoder.fwd.w_x", "encoder.fwd.w_h", "encoder.bwd.w_x",
                             "encoder.bwd.w_h"}) {
        Vec& w = store.value(store.id(name));
        std::fill(w.begin(), w.end(), 0.0);
    }
    std::vector<Vec> ctx = contextualize(store, enc, {Vec(6, 1.0), Vec(6, -2.0), Vec(6, 0.5)});
    for (const Vec& row : ctx)
        for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("contextualize is order-sensitive: permuting distant tokens changes other rows") {
    Vocab vocab = toy_vocab();
    ParamStore store(11);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    LinkedSequence a, b;
    a.tokens = {"what", "is", "the", "make", "of", "volvo", "car"};
    b.tokens = a.tokens;
    std::swap(b.tokens[0], b.tokens[5]);  // distant swap
    a.segments.push_back(Segment{SegmentKind::Question, 0, 7, -1});
    b.segments = a.segments;

    std::vector<Vec> ca = contextualize(store, enc, embed_sequence(store, enc, vocab, a));
    std::vector<Vec> cb = contextualize(store, enc, embed_sequence(store, enc, vocab, b));

    // A position far from both swapped tokens still sees the change.
    CHECK(ca[3] != cb[3]);
    CHECK(ca[6] != cb[6]);
}

TEST_CASE("pool_item is the arithmetic mean of the span rows") {
    std::vector<Vec> memory = {Vec{1.0, 2.0}, Vec{3.0, 4.0}};
    Vec pooled = pool_item(memory, {0, 2});
    CHECK(pooled[0] == doctest::Approx(2.0));
    CHECK(pooled[1] == doctest::Approx(3.0));

    // One-row span: the row itself.
    CHECK(pool_item(memory, {1, 2}) == memory[1]);
}

TEST_CASE("pool_item averages value rows in and differs from a first/last average") {
    // Two-token column + one-token value; mean of all three rows.
    std::vector<Vec> memory = {Vec{0.0, 0.0}, Vec{6.0, 6.0}, Vec{0.0, 0.0}};
    Vec pooled = pool_item(memory, {0, 2}, std::pair<int, int>{2, 3});
    CHECK(pooled == Vec{2.0, 2.0});

    // The rejected scheme: average of the column's first and last token rows.
    Vec first_last(2);
    for (int i = 0; i < 2; ++i) first_last[i] = (memory[0][i] + memory[1][i]) / 2.0;
    CHECK(first_last == Vec{3.0, 3.0});
    CHECK(pooled != first_last);
}

TEST_CASE("pool_item validates spans") {
    std::vector<Vec> memory = {Vec{1.0}, Vec{2.0}};
    CHECK_THROWS_AS(pool_item(memory, {0, 0}), EmptySpan);
    CHECK_THROWS_AS(pool_item(memory, {0, 3}), IndexOutOfRange);
    CHECK_THROWS_AS(pool_item(memory, {-1, 1}), IndexOutOfRange);
    CHECK_THROWS_AS(pool_item(memory, {0, 1}, std::pair<int, int>{1, 3}), IndexOutOfRange);
}

TEST_CASE("pool_item is permutation-invariant over its span set and linear in rows") {
    std::vector<Vec> memory = {Vec{1.0, -2.0}, Vec{4.0, 0.5}, Vec{-3.0, 7.0}};
    Vec ab = pool_item(memory, {0, 1}, std::pair<int, int>{2, 3});
    Vec ba = pool_item(memory, {2, 3}, std::pair<int, int>{0, 1});
    CHECK(ab == ba);

    std::vector<Vec> doubled = memory;
    for (Vec& r : doubled)
        for (double& x : r) x *= 2.0;
    Vec scaled = pool_item(doubled, {0, 1}, std::pair<int, int>{2, 3});
    for (std::size_t i = 0; i < scaled.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(2.0 * ab[i]).epsilon(1e-12));
}

TEST_CASE("encode_memory row counts match the linked sequence and schema") {
    Schema schema = volvo_schema();
    DbContent content = volvo_content(schema);
    Vocab vocab = toy_vocab();
    ParamStore store(21);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    std::vector<std::string> q = tokenize("What is the horsepower of volvo 740?");
    LinkedSequence with_values = serialize(q, schema, match_values(q, schema, content));
    LinkedSequence without = serialize(q, schema, {});
    REQUIRE(with_values.tokens.size() > without.tokens.size());  // a value was appended

    EncodedMemory a = encode_memory(store, enc, vocab, with_values);
    EncodedMemory b = encode_memory(store, enc, vocab, without);

    auto [qb, qe] = with_values.question_span();
    CHECK(a.question.size() == static_cast<std::size_t>(qe - qb));
    CHECK(a.question.size() == q.size());
    CHECK(a.rows.size() == with_values.tokens.size());
    CHECK(a.columns.size() == static_cast<std::size_t>(schema.num_columns()));
    CHECK(a.tables.size() == static_cast<std::size_t>(schema.num_tables()));

    // Item-vector cardinality is independent of appended values.
    CHECK(a.columns.size() == b.columns.size());
    CHECK(a.tables.size() == b.tables.size());

    for (const Vec& r : a.rows)
        for (double v : r) CHECK(std::isfinite(v));
    for (const Vec& r : a.columns) CHECK(r.size() == enc.config.memory_dim());
    for (const Vec& r : a.tables) CHECK(r.size() == enc.config.memory_dim());
}

TEST_CASE("encoded column vectors equal a hand-computed mean over their segments") {
    Schema schema = volvo_schema();
    DbContent content = volvo_content(schema);
    Vocab vocab = toy_vocab();
    ParamStore store(21);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());

    std::vector<std::string> q = tokenize("What is the horsepower of volvo 740?");
    LinkedSequence seq = serialize(q, schema, match_values(q, schema, content));
    EncodedMemory mem = encode_memory(store, enc, vocab, seq);

    for (int c = 0; c < schema.num_columns(); ++c) {
        std::vector<Segment> segs = seq.column_segments(c);
        REQUIRE(!segs.empty());
        // Independent oracle: plain loops over the retained full-sequence rows.
        Vec want(enc.config.memory_dim(), 0.0);
        int count = 0;
        for (const Segment& s : segs)
            for (int i = s.begin; i < s.end; ++i) {
                for (std::size_t d = 0; d < want.size(); ++d) want[d] += mem.rows[i][d];
                ++count;
            }
        for (double& x : want) x /= count;
        for (std::size_t d = 0; d < want.size(); ++d)
            CHECK(mem.columns[c][d] == doctest::Approx(want[d]).epsilon(1e-12));
    }

    for (int t = 0; t < schema.num_tables(); ++t) {
        Segment s = seq.table_segment(t);
        Vec want(enc.config.memory_dim(), 0.0);
        for (int i = s.begin; i < s.end; ++i)
            for (std::size_t d = 0; d < want.size(); ++d) want[d] += mem.rows[i][d];
        for (double& x : want) x /= (s.end - s.begin);
        for (std::size_t d = 0; d < want.size(); ++d)
            CHECK(mem.tables[t][d] == doctest::Approx(want[d]).epsilon(1e-12));
    }
}

TEST_CASE("encoding is deterministic") {
    Schema schema = volvo_schema();
    Vocab vocab = toy_vocab();
    ParamStore store(21);
    EncoderParams enc = register_encoder(store, vocab.size(), small_config());
    std::vector<std::string> q = tokenize("What is the make of every car?");
    LinkedSequence seq = serialize(q, schema, {});
    EncodedMemory a = encode_memory(store, enc, vocab, seq);
    EncodedMemory b = encode_memory(store, enc, vocab, seq);
    CHECK(a.rows == b.rows);
    CHECK(a.columns == b.columns);
    CHECK(a.tables == b.tables);
}

TEST_CASE("pooled encoder gradients match finite differences") {
    Schema schema = volvo_schema();
    DbContent content = volvo_content(schema);
    Vocab vocab = toy_vocab();
    ParamStore store(77);
    EncoderConfig cfg;
    cfg.embed_dim = 4;
    cfg.hidden = 3;
    EncoderParams enc = register_encoder(store, vocab.size(), cfg);

    std::vector<std::string> q = tokenize("What is the horsepower of volvo 740?");
    LinkedSequence seq = serialize(q, schema, match_values(q, schema, content));

    Vec probe(cfg.memory_dim());
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = 0.3 - 0.1 * static_cast<double>(i);

    auto loss = [&](GradBuffer* out) {
        Tape t;
        EncodedNodes nodes = encode_nodes(t, store, enc, vocab, seq);
        NodeRef p = t.input(probe);
        NodeRef l = t.dot(nodes.columns[3], p);
        l = t.add(l, t.dot(nodes.tables[0], p));
        l = t.add(l, t.dot(nodes.question[2], p));
        double v = t.scalar(l);
        if (out) t.backward(l, out);
        return v;
    };

    FdOptions opts;
    opts.max_coords_per_param = 10;
    CHECK(finite_diff_check(store, loss, opts) < 1e-4);
}
