#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gpsql/errors.hpp"
#include "gpsql/link.hpp"
#include "gpsql/schema.hpp"
#include "gpsql/tokenize.hpp"
#include "gpsql/vocab.hpp"
#include "json.hpp"

using namespace gpsql;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Schema volvo_schema() {
    auto schemas = load_tables_file(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/tables.json");
    return find_schema(schemas, "car_1");
}

DbContent volvo_content(const Schema& s) {
    return DbContent::load(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/db_content/car_1.json",
                           s);
}

// ---- independent matcher oracle -------------------------------------------
// Enumerates every candidate (span, column, grade) via joined-string equality,
// then greedily keeps candidates per column sorted by (length desc, start asc).

std::string join_range(const std::vector<std::string>& toks, int begin, int n) {
    std::string out;
    for (int j = 0; j < n; ++j) {
        if (j) out += ' ';
        out += toks[begin + j];
    }
    return out;
}

std::vector<ValueMatch> oracle_match(const std::vector<std::string>& q, const Schema& schema,
                                     const DbContent& content) {
    struct Cand {
        int s, n;
        MatchGrade grade;
        std::string cell;
    };
    std::vector<ValueMatch> out;
    const int qlen = static_cast<int>(q.size());
    for (int c = 0; c < schema.num_columns(); ++c) {
        std::vector<Cand> cands;
        for (int s = 0; s < qlen; ++s) {
            for (int n = 1; n <= 6 && s + n <= qlen; ++n) {
                std::string span = join_range(q, s, n);
                std::string cem, cpm;
                for (const auto& cell : content.cells(c)) {
                    if (join_range(cell.tokens, 0, static_cast<int>(cell.tokens.size())) == span) {
                        cem = cell.normalized;
                        break;
                    }
                }
                if (cem.empty()) {
                    for (const auto& cell : content.cells(c)) {
                        const int m = static_cast<int>(cell.tokens.size());
                        if (m <= n) continue;
                        for (int off = 0; off + n <= m && cpm.empty(); ++off)
                            if (join_range(cell.tokens, off, n) == span) cpm = cell.normalized;
                        if (!cpm.empty()) break;
                    }
                }
                if (!cem.empty())
                    cands.push_back({s, n, MatchGrade::Cem, cem});
                else if (!cpm.empty())
                    cands.push_back({s, n, MatchGrade::Cpm, cpm});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.n != b.n) return a.n > b.n;
            return a.s < b.s;
        });
        std::vector<bool> taken(q.size(), false);
        for (const auto& cand : cands) {
            bool free = true;
            for (int j = cand.s; j < cand.s + cand.n; ++j)
                if (taken[j]) free = false;
            if (!free) continue;
            for (int j = cand.s; j < cand.s + cand.n; ++j) taken[j] = true;
            out.push_back(ValueMatch{cand.s, cand.s + cand.n, c, cand.cell, cand.grade});
        }
    }
    std::sort(out.begin(), out.end(), [](const ValueMatch& a, const ValueMatch& b) {
        if (a.column != b.column) return a.column < b.column;
        return a.span_begin < b.span_begin;
    });
    return out;
}

Schema tiny_schema(int num_plain_columns) {
    json record = {{"db_id", "tiny"},
                   {"table_names_original", {"t"}},
                   {"column_names_original", json::array({json::array({-1, "*"})})},
                   {"column_types", json::array({"text"})}};
    for (int i = 0; i < num_plain_columns; ++i) {
        record["column_names_original"].push_back(json::array({0, "c" + std::to_string(i)}));
        record["column_types"].push_back("text");
    }
    return load_schema(record);
}

}  // namespace

TEST_CASE("load_schema accepts a minimal record") {
    json record = {{"db_id", "mini"},
                   {"table_names_original", {"t"}},
                   {"column_names_original", {json::array({-1, "*"}), json::array({0, "a"})}},
                   {"column_types", {"text", "text"}}};
    Schema s = load_schema(record);
    CHECK(s.num_tables() == 1);
    CHECK(s.num_columns() == 2);
    CHECK(s.columns[0].table == -1);
    CHECK(s.columns[1].name_tokens == std::vector<std::string>{"a"});
}

TEST_CASE("load_schema copies keys and validates them") {
    json record = {{"db_id", "two"},
                   {"table_names_original", {"left_t", "right_t"}},
                   {"column_names_original",
                    {json::array({-1, "*"}), json::array({0, "Id"}), json::array({0, "Name"}),
                     json::array({1, "Left_Id"})}},
                   {"column_types", {"text", "number", "text", "number"}},
                   {"primary_keys", {1}},
                   {"foreign_keys", {json::array({3, 1})}}};
    Schema s = load_schema(record);
    CHECK(s.foreign_keys == std::vector<ForeignKey>{{3, 1}});
    CHECK(s.primary_keys == std::vector<int>{1});
    CHECK(s.tables[0].name_tokens == std::vector<std::string>{"left", "t"});
    CHECK(s.table_index("LEFT_T") == 0);
    CHECK(s.column_index(0, "name") == 2);
    CHECK(s.column_index(1, "name") == -1);

    SUBCASE("foreign key out of range") {
        record["foreign_keys"] = {json::array({3, 99})};
        CHECK_THROWS_AS(load_schema(record), MalformedSchema);
    }
    SUBCASE("foreign key within one table") {
        record["foreign_keys"] = {json::array({1, 2})};
        CHECK_THROWS_AS(load_schema(record), MalformedSchema);
    }
    SUBCASE("missing field") {
        record.erase("column_types");
        CHECK_THROWS_AS(load_schema(record), MalformedSchema);
    }
    SUBCASE("star column must come first") {
        record["column_names_original"][0] = json::array({0, "x"});
        CHECK_THROWS_AS(load_schema(record), MalformedSchema);
    }
    SUBCASE("column table index out of range") {
        record["column_names_original"][1] = json::array({7, "x"});
        CHECK_THROWS_AS(load_schema(record), MalformedSchema);
    }
}

TEST_CASE("db content normalizes, dedupes, and caps cells") {
    Schema s = tiny_schema(1);
    DbContent content = DbContent::from_json(
        json{{"t", {{"c0", {"  Big   Apple ", "big apple", "98.0", "98", 98, true}}}}}, s);
    const auto& cells = content.cells(1);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].normalized == "big apple");
    CHECK(cells[0].tokens == std::vector<std::string>{"big", "apple"});
    CHECK(cells[1].normalized == "98");
    CHECK(cells[2].normalized == "1");

    SUBCASE("unknown tables and columns are ignored") {
        DbContent c2 =
            DbContent::from_json(json{{"ghost", {{"c0", {"x"}}}}, {"t", {{"ghost", {"y"}}}}}, s);
        CHECK(c2.cells(0).empty());
        CHECK(c2.cells(1).empty());
    }
    SUBCASE("cap on distinct values") {
        json many = json::array();
        for (int i = 0; i < DbContent::kMaxDistinctPerColumn + 100; ++i)
            many.push_back("v" + std::to_string(i));
        DbContent c3 = DbContent::from_json(json{{"t", {{"c0", many}}}}, s);
        CHECK(static_cast<int>(c3.cells(1).size()) == DbContent::kMaxDistinctPerColumn);
    }
}

TEST_CASE("value matching grades the volvo fixture") {
    Schema s = volvo_schema();
    DbContent content = volvo_content(s);
    auto q = tokenize(slurp(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/question.txt"));
    CHECK(q == std::vector<std::string>{"which", "volvo", "has", "the", "minimum", "horsepower",
                                        "?"});
    auto matches = match_values(q, s, content);
    REQUIRE(matches.size() == 2);
    // make: part of "volvo 740"; model: exact cell "volvo"
    CHECK(matches[0] == ValueMatch{1, 2, 1, "volvo 740", MatchGrade::Cpm});
    CHECK(matches[1] == ValueMatch{1, 2, 2, "volvo", MatchGrade::Cem});
    CHECK(matches == oracle_match(q, s, content));
}

TEST_CASE("no shared n-gram yields no matches") {
    Schema s = volvo_schema();
    DbContent content = volvo_content(s);
    auto q = tokenize("how many cars are there?");
    CHECK(match_values(q, s, content).empty());
}

TEST_CASE("longest-first matching suppresses sub-span matches") {
    Schema s = tiny_schema(1);
    DbContent content =
        DbContent::from_json(json{{"t", {{"c0", {"new york", "new"}}}}}, s);
    auto q = tokenize("people in new york today");
    auto matches = match_values(q, s, content);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0] == ValueMatch{2, 4, 1, "new york", MatchGrade::Cem});
    CHECK(matches == oracle_match(q, s, content));
}

TEST_CASE("exact match beats part match on the same span") {
    Schema s = tiny_schema(1);
    DbContent content = DbContent::from_json(json{{"t", {{"c0", {"volvo", "volvo 740"}}}}}, s);
    auto q = tokenize("is it a volvo ?");
    auto matches = match_values(q, s, content);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].grade == MatchGrade::Cem);
    CHECK(matches[0].cell == "volvo");
    CHECK(matches == oracle_match(q, s, content));
}

TEST_CASE("matcher agrees with the brute-force oracle on random fixtures") {
    std::mt19937_64 rng(20260817);
    const std::vector<std::string> words = {"red", "blue", "fox", "dog", "one", "two", "ann", "bo"};
    auto pick = [&](int n) { return static_cast<int>(rng() % n); };
    for (int trial = 0; trial < 200; ++trial) {
        int ncols = 1 + pick(3);
        Schema s = tiny_schema(ncols);
        json cells_by_col = json::object();
        for (int c = 0; c < ncols; ++c) {
            json arr = json::array();
            int ncells = pick(5);
            for (int k = 0; k < ncells; ++k) {
                int len = 1 + pick(3);
                std::string cell;
                for (int j = 0; j < len; ++j) {
                    if (j) cell += ' ';
                    cell += words[pick(static_cast<int>(words.size()))];
                }
                arr.push_back(cell);
            }
            cells_by_col["c" + std::to_string(c)] = arr;
        }
        DbContent content = DbContent::from_json(json{{"t", cells_by_col}}, s);
        int qlen = 3 + pick(8);
        std::vector<std::string> q;
        for (int j = 0; j < qlen; ++j) q.push_back(words[pick(static_cast<int>(words.size()))]);

        auto got = match_values(q, s, content);
        auto want = oracle_match(q, s, content);
        REQUIRE(got == want);

        // invariants: spans in bounds, grades consistent, no dual grade per (column, span)
        std::set<std::pair<int, std::pair<int, int>>> seen;
        for (const auto& m : got) {
            CHECK(m.span_begin < m.span_end);
            CHECK(m.span_end <= qlen);
            auto cell_tokens = tokenize(m.cell);
            std::vector<std::string> span(q.begin() + m.span_begin, q.begin() + m.span_end);
            if (m.grade == MatchGrade::Cem) {
                CHECK(span == cell_tokens);
            } else {
                CHECK(span.size() < cell_tokens.size());
                bool contained = false;
                for (size_t off = 0; off + span.size() <= cell_tokens.size(); ++off) {
                    if (std::equal(span.begin(), span.end(), cell_tokens.begin() + off))
                        contained = true;
                }
                CHECK(contained);
            }
            CHECK(seen.insert({m.column, {m.span_begin, m.span_end}}).second);
        }
    }
}

TEST_CASE("serialization matches the handwritten golden file") {
    Schema s = volvo_schema();
    DbContent content = volvo_content(s);
    auto q = tokenize(slurp(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/question.txt"));
    LinkedSequence seq = serialize(q, s, match_values(q, s, content));
    CHECK(seq.dump() == slurp(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/golden.txt"));
}

TEST_CASE("serialization layout invariants hold with and without matches") {
    Schema s = volvo_schema();
    DbContent content = volvo_content(s);
    auto q = tokenize("how many cars are there?");
    LinkedSequence seq = serialize(q, s, match_values(q, s, content));

    int columns = 0, tables = 0, values = 0, questions = 0;
    for (const auto& seg : seq.segments) {
        switch (seg.kind) {
            case SegmentKind::Column: ++columns; break;
            case SegmentKind::Table: ++tables; break;
            case SegmentKind::Value: ++values; break;
            case SegmentKind::Question: ++questions; break;
            case SegmentKind::Separator: break;
        }
    }
    CHECK(columns == s.num_columns());
    CHECK(tables == s.num_tables());
    CHECK(values == 0);
    CHECK(questions == 1);
    CHECK(seq.tokens.front() == kBos);
    CHECK(seq.tokens.back() == kEos);
    auto [qb, qe] = seq.question_span();
    CHECK(qe - qb == static_cast<int>(q.size()));
    CHECK(std::vector<std::string>(seq.tokens.begin() + qb, seq.tokens.begin() + qe) == q);
}

TEST_CASE("part-only matches serialize exactly like no matches") {
    Schema s = tiny_schema(2);
    DbContent content = DbContent::from_json(json{{"t", {{"c0", {"volvo 740"}}}}}, s);
    auto q = tokenize("the volvo is fast");
    auto matches = match_values(q, s, content);
    REQUIRE(matches.size() == 1);
    REQUIRE(matches[0].grade == MatchGrade::Cpm);
    LinkedSequence with_part = serialize(q, s, matches);
    LinkedSequence without = serialize(q, s, {});
    CHECK(with_part == without);
    CHECK(with_part.dump() == without.dump());
}

TEST_CASE("multiple exact values on one column append in span order") {
    Schema s = tiny_schema(1);
    DbContent content =
        DbContent::from_json(json{{"t", {{"c0", {"paris", "tokyo"}}}}}, s);
    auto q = tokenize("from tokyo to paris");
    auto matches = match_values(q, s, content);
    REQUIRE(matches.size() == 2);
    LinkedSequence seq = serialize(q, s, matches);
    auto col_segments = seq.column_segments(1);
    REQUIRE(col_segments.size() == 3);  // name + two values
    CHECK(col_segments[0].kind == SegmentKind::Column);
    CHECK(seq.tokens[col_segments[1].begin] == "tokyo");
    CHECK(seq.tokens[col_segments[2].begin] == "paris");
}

TEST_CASE("serialization is deterministic") {
    Schema s = volvo_schema();
    DbContent content = volvo_content(s);
    auto q = tokenize(slurp(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/question.txt"));
    auto m1 = match_values(q, s, content);
    auto m2 = match_values(q, s, content);
    CHECK(m1 == m2);
    CHECK(serialize(q, s, m1) == serialize(q, s, m2));
}

TEST_CASE("vocabulary reserves control tokens and sorts the rest") {
    Vocab v = Vocab::build({{"zebra", "apple"}, {"mango", "apple", "<s>"}});
    CHECK(v.size() == 6);
    CHECK(v.id("<unk>") == Vocab::kUnk);
    CHECK(v.id("<s>") == Vocab::kBosId);
    CHECK(v.id("</s>") == Vocab::kEosId);
    CHECK(v.token(3) == "apple");
    CHECK(v.token(4) == "mango");
    CHECK(v.token(5) == "zebra");
    CHECK(v.id("missing") == Vocab::kUnk);

    std::string path = std::string(GPSQL_TEST_TMP_DIR) + "/vocab.txt";
    v.save(path);
    Vocab loaded = Vocab::load(path);
    CHECK(loaded == v);
}

TEST_CASE("vocabulary load rejects files without the reserved prefix") {
    std::string path = std::string(GPSQL_TEST_TMP_DIR) + "/bad_vocab.txt";
    {
        std::ofstream out(path);
        out << "apple\nbanana\n";
    }
    CHECK_THROWS_AS(Vocab::load(path), MalformedInput);
    CHECK_THROWS_AS(Vocab::load("/nonexistent/vocab.txt"), FileNotFound);
}

TEST_CASE("find_schema and tables file errors") {
    CHECK_THROWS_AS(load_tables_file("/nonexistent/tables.json"), FileNotFound);
    auto schemas = load_tables_file(std::string(GPSQL_DATA_DIR) + "/fixtures/volvo/tables.json");
    CHECK_THROWS_AS(find_schema(schemas, "other_db"), UnknownIdentifier);
    CHECK(find_schema(schemas, "car_1").db_id == "car_1");
}
