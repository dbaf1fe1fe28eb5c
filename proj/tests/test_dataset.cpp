#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gpsql/canonical.hpp"
#include "gpsql/dataset.hpp"
#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"
#include "gpsql/tokenize.hpp"
#include "gpsql/toy.hpp"
#include "gpsql/vocab.hpp"
#include "json.hpp"

using namespace gpsql;

namespace {

std::string data_path(const std::string& rel) { return std::string(GPSQL_DATA_DIR) + "/" + rel; }

std::string tmp_path(const std::string& name) {
    return std::string(GPSQL_TEST_TMP_DIR) + "/" + name;
}

std::string write_tmp(const std::string& name, const std::string& text) {
    std::string path = tmp_path(name);
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const GrammarSpec& standard_grammar() {
    static GrammarSpec g = SqlGrammar::standard().grammar();
    return g;
}

}  // namespace

TEST_CASE("load_examples_file parses records and rejects malformed input") {
    std::string good = write_tmp("examples_good.json", R"([
      {"db_id": "car_1", "question": "how many cars are there", "query": "SELECT count(*) FROM cars_data"},
      {"db_id": "car_1", "question": "list every make", "query": "SELECT Make FROM car_names"}
    ])");
    std::vector<RawExample> raws = load_examples_file(good);
    REQUIRE(raws.size() == 2);
    CHECK(raws[0].db_id == "car_1");
    CHECK(raws[0].question == "how many cars are there");
    CHECK(raws[1].query == "SELECT Make FROM car_names");

    CHECK(load_examples_file(write_tmp("examples_empty.json", "[]")).empty());

    CHECK_THROWS_AS(load_examples_file(tmp_path("no_such_examples.json")), FileNotFound);
    CHECK_THROWS_AS(load_examples_file(write_tmp("examples_not_array.json", R"({"a": 1})")),
                    MalformedInput);
    CHECK_THROWS_AS(load_examples_file(write_tmp("examples_bad_json.json", "[{]")),
                    MalformedInput);
    CHECK_THROWS_AS(
        load_examples_file(write_tmp("examples_missing_field.json",
                                     R"([{"db_id": "car_1", "question": "hi"}])")),
        MalformedInput);
    CHECK_THROWS_AS(
        load_examples_file(write_tmp(
            "examples_nonstring.json",
            R"([{"db_id": "car_1", "question": 7, "query": "SELECT * FROM cars_data"}])")),
        MalformedInput);
}

TEST_CASE("prepare_example tokenizes, links values, and linearizes gold") {
    std::vector<Schema> schemas = load_tables_file(data_path("fixtures/volvo/tables.json"));
    const Schema& schema = schemas.at(0);
    std::map<std::string, DbContent> content;
    content.emplace("car_1", DbContent::load(data_path("fixtures/volvo/db_content/car_1.json"),
                                             schema));

    RawExample raw{"car_1", "which model is the volvo 740",
                   "SELECT Model FROM car_names WHERE Make = 'Volvo 740'"};
    PreparedExample ex = prepare_example(raw, schemas, content, standard_grammar());

    CHECK(ex.db_id == "car_1");
    CHECK(ex.gold_sql == raw.query);
    CHECK(ex.question_tokens == tokenize(raw.question));
    CHECK(ex.ctx.num_columns == schema.num_columns());
    CHECK(ex.ctx.num_tables == schema.num_tables());
    CHECK(ex.ctx.question_len == static_cast<int>(ex.question_tokens.size()));
    CHECK(ex.ctx.mode == DecodeMode::Normal);
    REQUIRE(!ex.gold.empty());

    // The gold action sequence reproduces the query.
    SqlAst round = actions_to_ast(ex.gold, standard_grammar(), ex.question_tokens);
    CHECK(render_sql(round, schema) == render_sql(parse_sql(raw.query, schema), schema));

    // "volvo 740" exact-matches the Make cell "Volvo 740", so the serialized
    // sequence carries a value span for that column.
    int make = schema.column_index(schema.table_index("car_names"), "Make");
    REQUIRE(make > 0);
    bool has_value = false;
    for (const Segment& seg : ex.seq.segments)
        if (seg.kind == SegmentKind::Value && seg.item == make) has_value = true;
    CHECK(has_value);

    // Without content there is nothing to link.
    PreparedExample plain = prepare_example(raw, schemas, {}, standard_grammar());
    for (const Segment& seg : plain.seq.segments) CHECK(seg.kind != SegmentKind::Value);

    RawExample ghost{"no_such_db", "hi", "SELECT 1"};
    CHECK_THROWS_AS(prepare_example(ghost, schemas, content, standard_grammar()),
                    MalformedInput);
}

TEST_CASE("ingest loads a bundle and excludes only broken gold") {
    std::string tables = data_path("fixtures/volvo/tables.json");
    std::string content_dir = data_path("fixtures/volvo/db_content");

    std::string examples = write_tmp("ingest_mixed.json", R"([
      {"db_id": "car_1", "question": "list every make", "query": "SELECT Make FROM car_names"},
      {"db_id": "car_1", "question": "broken", "query": "SELECT FROM WHERE"},
      {"db_id": "car_1", "question": "unknown column", "query": "SELECT Banana FROM car_names"},
      {"db_id": "car_1", "question": "which model", "query": "SELECT Model FROM car_names WHERE Make = 'Peugeot'"}
    ])");

    DatasetBundle bundle = ingest(tables, examples, standard_grammar(), content_dir);
    CHECK(bundle.schemas.size() == 1);
    CHECK(bundle.content.count("car_1") == 1);
    CHECK(bundle.loaded() == 1);
    CHECK(bundle.excluded() == 3);
    REQUIRE(bundle.skipped.size() == 3);
    CHECK(bundle.skipped[0].find("example 1") != std::string::npos);
    CHECK(bundle.skipped[1].find("example 2") != std::string::npos);
    CHECK(bundle.skipped[2].find("example 3") != std::string::npos);
    for (const std::string& line : bundle.skipped)
        CHECK(line.find("car_1") != std::string::npos);

    // The copy-miss (a literal absent from the question) names the literal.
    CHECK(bundle.skipped[2].find("peugeot") != std::string::npos);

    // An example naming an unknown database poisons the whole dataset.
    std::string ghost = write_tmp("ingest_ghost.json", R"([
      {"db_id": "volcano_9", "question": "hi", "query": "SELECT * FROM lava"}
    ])");
    CHECK_THROWS_AS(ingest(tables, ghost, standard_grammar(), content_dir), MalformedInput);

    // Empty datasets load as empty bundles.
    DatasetBundle empty =
        ingest(tables, write_tmp("ingest_empty.json", "[]"), standard_grammar(), content_dir);
    CHECK(empty.loaded() == 0);
    CHECK(empty.excluded() == 0);
    CHECK(empty.schemas.size() == 1);

    // Content is optional: without a directory nothing is linked but
    // everything still loads.
    DatasetBundle no_content = ingest(tables, examples, standard_grammar());
    CHECK(no_content.content.empty());
    CHECK(no_content.loaded() == 1);

    CHECK_THROWS_AS(ingest(tables, tmp_path("no_such.json"), standard_grammar()), FileNotFound);
    CHECK_THROWS_AS(ingest(tmp_path("no_tables.json"), examples, standard_grammar()),
                    FileNotFound);
}

TEST_CASE("toy corpus generation is deterministic and matches the shipped files") {
    ToyCorpus a = generate_toy_corpus();
    ToyCorpus b = generate_toy_corpus();
    CHECK(a.tables == b.tables);
    CHECK(a.content == b.content);
    CHECK(a.train == b.train);
    CHECK(a.dev == b.dev);

    // A different seed reshuffles the examples (the schemas are fixed data).
    ToyCorpus c = generate_toy_corpus(kToySeed + 1);
    CHECK(c.tables == a.tables);
    CHECK(c.train != a.train);

    // Shipped corpus files are exactly what the generator produces.
    std::string dir = tmp_path("toy_regen");
    std::filesystem::remove_all(dir);
    write_toy_corpus(a, dir);
    for (std::string name : {"tables.json", "train.json", "dev.json"})
        CHECK(slurp(dir + "/" + name) == slurp(data_path("toy/" + name)));
    for (const auto& [db_id, dump] : a.content) {
        (void)dump;
        std::string rel = "db_content/" + db_id + ".json";
        CHECK(slurp(dir + "/" + rel) == slurp(data_path("toy/" + rel)));
    }
}

TEST_CASE("toy corpus shape: sizes, family variety, distinct value pools") {
    ToyCorpus corpus = generate_toy_corpus();
    CHECK(corpus.tables.size() == 20);
    CHECK(corpus.content.size() == 20);
    CHECK(corpus.train.size() == 2200);
    CHECK(corpus.dev.size() == 100);

    // Every database contributes to both splits.
    std::set<std::string> train_dbs, dev_dbs;
    for (const RawExample& e : corpus.train) train_dbs.insert(e.db_id);
    for (const RawExample& e : corpus.dev) dev_dbs.insert(e.db_id);
    CHECK(train_dbs.size() == 20);
    CHECK(dev_dbs.size() == 20);

    // All template families appear.
    auto count_sub = [&](const std::string& needle) {
        int hits = 0;
        for (const RawExample& e : corpus.train)
            if (e.query.find(needle) != std::string::npos) ++hits;
        return hits;
    };
    CHECK(count_sub("WHERE") >= 80);
    CHECK(count_sub("JOIN") >= 40);
    CHECK(count_sub("GROUP BY") >= 40);
    CHECK(count_sub("ORDER BY") >= 40);
    CHECK(count_sub("LIMIT") >= 40);
    CHECK(count_sub("DISTINCT") >= 40);
    CHECK(count_sub("count(*)") >= 80);
    CHECK(count_sub("max(") + count_sub("min(") + count_sub("avg(") + count_sub("sum(") >= 40);
    CHECK(count_sub("AND") >= 30);
    CHECK(count_sub("SELECT *") >= 40);

    // Distinct cell values within each database, so value linking is
    // unambiguous between text columns.
    for (const auto& [db_id, dump] : corpus.content) {
        (void)db_id;
        std::set<std::string> seen;
        int total = 0;
        for (const auto& [table, cols] : dump.items()) {
            (void)table;
            for (const auto& [col, values] : cols.items()) {
                (void)col;
                for (const auto& v : values) {
                    if (!v.is_string()) continue;  // numbers may repeat across columns
                    seen.insert(v.get<std::string>());
                    ++total;
                }
            }
        }
        CHECK(static_cast<int>(seen.size()) == total);
    }
}

TEST_CASE("shipped toy corpus ingests with zero exclusions and round-trips") {
    const GrammarSpec& grammar = standard_grammar();
    DatasetBundle train = ingest(data_path("toy/tables.json"), data_path("toy/train.json"),
                                 grammar, data_path("toy/db_content"));
    DatasetBundle dev = ingest(data_path("toy/tables.json"), data_path("toy/dev.json"), grammar,
                               data_path("toy/db_content"));

    CHECK(train.schemas.size() == 20);
    CHECK(train.loaded() == 2200);
    CHECK(train.excluded() == 0);
    CHECK(dev.loaded() == 100);
    CHECK(dev.excluded() == 0);
    CHECK(train.content.size() == 20);

    auto check_split = [&](const DatasetBundle& bundle) {
        for (const PreparedExample& ex : bundle.examples) {
            const Schema& schema = find_schema(bundle.schemas, ex.db_id);
            REQUIRE(!ex.gold.empty());
            CHECK(static_cast<int>(ex.gold.size()) <= kMaxActionLength);
            CHECK(ex.ctx.num_columns == schema.num_columns());
            CHECK(ex.ctx.num_tables == schema.num_tables());
            CHECK(ex.ctx.question_len == static_cast<int>(ex.question_tokens.size()));

            // Action sequence -> AST -> SQL reproduces the gold query
            // exactly under canonicalization.
            SqlAst round = actions_to_ast(ex.gold, grammar, ex.question_tokens);
            SqlAst direct = parse_sql(ex.gold_sql, schema);
            CHECK(render_sql(round, schema) == render_sql(direct, schema));
            CHECK(exact_match(round, direct));

            // Quoted literals come from cell content quoted in the question,
            // so they must have produced a value link.
            if (ex.gold_sql.find('\'') != std::string::npos) {
                bool has_value = false;
                for (const Segment& seg : ex.seq.segments)
                    if (seg.kind == SegmentKind::Value) has_value = true;
                CHECK(has_value);
            }
        }
    };
    check_split(train);
    check_split(dev);

    // A vocabulary built from the serialized training sequences is
    // deterministic and desk-sized.
    std::vector<std::vector<std::string>> token_lists;
    for (const PreparedExample& ex : train.examples) token_lists.push_back(ex.seq.tokens);
    Vocab vocab = Vocab::build(token_lists);
    CHECK(vocab.size() > 100);
    CHECK(vocab.size() < 2000);
    CHECK(vocab == Vocab::build(token_lists));
}
