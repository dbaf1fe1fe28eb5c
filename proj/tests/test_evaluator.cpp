#include <algorithm>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gpsql/canonical.hpp"
#include "gpsql/errors.hpp"
#include "gpsql/tokenize.hpp"

using namespace gpsql;

namespace {

std::vector<Schema> eval_schemas() {
    return load_tables_file(std::string(GPSQL_DATA_DIR) + "/fixtures/eval/tables.json");
}

nlohmann::json fixture_cases() {
    std::ifstream f(std::string(GPSQL_DATA_DIR) + "/fixtures/eval/exact_match_cases.json");
    REQUIRE(f.good());
    return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("hand-labelled fixture cases all agree") {
    auto schemas = eval_schemas();
    auto cases = fixture_cases();
    REQUIRE(cases.size() == 20);
    for (const auto& c : cases) {
        CAPTURE(c["note"].get<std::string>());
        const Schema& s = find_schema(schemas, c["db_id"].get<std::string>());
        SqlQuery pred = parse_sql_text(c["pred"].get<std::string>(), s);
        SqlQuery gold = parse_sql_text(c["gold"].get<std::string>(), s);
        CHECK(exact_match_ir(pred, gold) == c["match"].get<bool>());
        // symmetry
        CHECK(exact_match_ir(gold, pred) == c["match"].get<bool>());
        // reflexivity on both sides
        CHECK(exact_match_ir(pred, pred));
        CHECK(exact_match_ir(gold, gold));
    }
}

TEST_CASE("ast-level exact_match agrees with the ir level") {
    auto schemas = eval_schemas();
    const Schema& s = find_schema(schemas, "car_1");
    const SqlGrammar& sg = SqlGrammar::standard();
    SqlAst a = parse_sql("SELECT Make, Model FROM car_names", s, sg);
    SqlAst b = parse_sql("SELECT Model, Make FROM car_names", s, sg);
    SqlAst c = parse_sql("SELECT Model FROM car_names", s, sg);
    CHECK(exact_match(a, b, sg));
    CHECK_FALSE(exact_match(a, c, sg));
    CHECK(canonicalize(a, sg) == canonicalize(b, sg));
}

TEST_CASE("canonicalization is idempotent") {
    auto schemas = eval_schemas();
    auto cases = fixture_cases();
    for (const auto& c : cases) {
        const Schema& s = find_schema(schemas, c["db_id"].get<std::string>());
        for (const char* side : {"pred", "gold"}) {
            SqlQuery q = parse_sql_text(c[side].get<std::string>(), s);
            SqlQuery once = canonical_ir(q);
            CHECK(canonical_ir(once) == once);
            SqlQuery once_iv = canonical_ir(q, true);
            CHECK(canonical_ir(once_iv, true) == once_iv);
        }
    }
}

TEST_CASE("sorted conjuncts equal every permutation (oracle)") {
    auto schemas = eval_schemas();
    const Schema& s = find_schema(schemas, "car_1");
    SqlQuery base = parse_sql_text(
        "SELECT Id FROM cars_data WHERE Horsepower = 98 AND Id = 1 AND Horsepower < 200", s);
    REQUIRE(base.where->atoms.size() == 3);
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end());
    int permutations = 0;
    do {
        SqlQuery variant = base;
        for (int i = 0; i < 3; ++i) variant.where->atoms[i] = base.where->atoms[order[i]];
        CHECK(exact_match_ir(variant, base));
        ++permutations;
    } while (std::next_permutation(order.begin(), order.end()));
    CHECK(permutations == 6);
}

TEST_CASE("select item multiset equals every permutation (oracle)") {
    auto schemas = eval_schemas();
    const Schema& s = find_schema(schemas, "car_1");
    SqlQuery base = parse_sql_text("SELECT Make, Model, count(*) FROM car_names", s);
    REQUIRE(base.select.size() == 3);
    std::vector<int> order = {0, 1, 2};
    do {
        SqlQuery variant = base;
        for (int i = 0; i < 3; ++i) variant.select[i] = base.select[order[i]];
        CHECK(exact_match_ir(variant, base));
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("order by stays order sensitive") {
    auto schemas = eval_schemas();
    const Schema& s = find_schema(schemas, "car_1");
    SqlQuery a = parse_sql_text("SELECT Make FROM car_names ORDER BY Make, Model", s);
    SqlQuery b = a;
    std::swap(b.order_by[0], b.order_by[1]);
    CHECK_FALSE(exact_match_ir(a, b));
    // but identical keys still match reflexively
    CHECK(exact_match_ir(b, b));
}

TEST_CASE("ignore-values mode masks literals only") {
    auto schemas = eval_schemas();
    const Schema& s = find_schema(schemas, "car_1");
    SqlQuery a = parse_sql_text("SELECT Id FROM cars_data WHERE Horsepower = 98", s);
    SqlQuery b = parse_sql_text("SELECT Id FROM cars_data WHERE Horsepower = 120", s);
    SqlQuery c = parse_sql_text("SELECT Id FROM cars_data WHERE Id = 98", s);
    CHECK_FALSE(exact_match_ir(a, b));
    CHECK(exact_match_ir(a, b, true));
    CHECK_FALSE(exact_match_ir(a, c, true));  // column still matters
    // limit counts are structural, not masked
    SqlQuery l1 = parse_sql_text("SELECT Make FROM car_names ORDER BY Model LIMIT 1", s);
    SqlQuery l2 = parse_sql_text("SELECT Make FROM car_names ORDER BY Model LIMIT 2", s);
    CHECK_FALSE(exact_match_ir(l1, l2, true));
}

TEST_CASE("canonicalization survives random grammar rollouts") {
    const SqlGrammar& sg = SqlGrammar::standard();
    const GrammarSpec& g = sg.grammar();
    LegalContext ctx{5, 2, 4, DecodeMode::Normal};
    std::vector<std::string> question = {"alpha", "beta", "gamma", "7"};
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        std::vector<Action> seq;
        try {
            seq = random_rollout(g, ctx, rng, kMaxActionLength);
        } catch (const TruncatedSequence&) {
            continue;
        }
        SqlQuery q = ast_to_query(actions_to_ast(seq, g, question), sg);
        SqlQuery once = canonical_ir(q);
        CHECK(canonical_ir(once) == once);
        CHECK(exact_match_ir(q, q));
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("evaluate scores an aligned batch") {
    auto schemas = eval_schemas();
    std::vector<GoldExample> gold = {
        {"car_1", "SELECT Make FROM car_names"},
        {"car_1", "SELECT Id FROM cars_data WHERE Horsepower = 98 AND Id = 1"},
        {"car_1", "SELECT Make FROM car_names ORDER BY Make, Model"},
        {"music", "SELECT Name FROM singer JOIN song"},
    };
    std::vector<PredictedQuery> preds = {
        {"car_1", "SELECT Make FROM car_names"},
        {"car_1", "SELECT Id FROM cars_data WHERE Id = 1 AND Horsepower = 98"},
        {"car_1", "SELECT Make FROM car_names ORDER BY Model, Make"},
        {"music", "SELECT Name FROM song JOIN singer"},
    };
    EvalReport r = evaluate(preds, gold, schemas);
    CHECK(r.total == 4);
    CHECK(r.matched == 3);
    CHECK(r.accuracy == doctest::Approx(0.75));
    CHECK(r.failed_parses == 0);
    CHECK(r.per_db.at("car_1") == DbTally{2, 3});
    CHECK(r.per_db.at("music") == DbTally{1, 1});

    nlohmann::json j = r.to_json();
    CHECK(j["total"] == 4);
    CHECK(j["matched"] == 3);
    CHECK(j["per_db"]["car_1"]["matched"] == 2);
    CHECK(r.summary().find("3/4") != std::string::npos);
}

TEST_CASE("evaluate handles oracle, garbage and misalignment") {
    auto schemas = eval_schemas();
    std::vector<GoldExample> gold = {
        {"car_1", "SELECT Make FROM car_names"},
        {"music", "SELECT Title FROM song"},
    };
    // gold as predictions → 1.0
    std::vector<PredictedQuery> oracle = {{"car_1", gold[0].sql}, {"music", gold[1].sql}};
    CHECK(evaluate(oracle, gold, schemas).accuracy == doctest::Approx(1.0));

    // unparsable predictions → 0.0, counted
    std::vector<PredictedQuery> garbage = {{"car_1", "SELECT FROM WHERE"}, {"music", "???"}};
    EvalReport r = evaluate(garbage, gold, schemas);
    CHECK(r.accuracy == doctest::Approx(0.0));
    CHECK(r.failed_parses == 2);

    // db misalignment → IdMismatch
    std::vector<PredictedQuery> wrong_db = {{"music", gold[0].sql}, {"car_1", gold[1].sql}};
    CHECK_THROWS_AS(evaluate(wrong_db, gold, schemas), IdMismatch);
    std::vector<PredictedQuery> short_list = {{"car_1", gold[0].sql}};
    CHECK_THROWS_AS(evaluate(short_list, gold, schemas), IdMismatch);
}
