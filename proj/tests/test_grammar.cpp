#include <algorithm>
#include <set>

#include "doctest.h"
#include "gpsql/ast.hpp"
#include "gpsql/errors.hpp"
#include "gpsql/grammar.hpp"
#include "gpsql/tokenize.hpp"

using namespace gpsql;

namespace {

const char* kMiniGrammar = R"(
# mini query grammar used across these tests
query -> select:select_clause from:from_clause where:where_clause?
select_clause -> first:sel rest:sel*
sel -> col:COLUMN
sel -> agg:AggCount col:COLUMN
AggCount ->
from_clause -> t:TABLE
where_clause -> col:COLUMN op:OpEq val:VALUE
OpEq ->
)";

GrammarSpec mini() { return GrammarSpec::parse(kMiniGrammar); }

std::vector<std::string> words(std::initializer_list<const char*> xs) {
    return std::vector<std::string>(xs.begin(), xs.end());
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation into single tokens") {
    CHECK(tokenize("List all Singers!") == words({"list", "all", "singers", "!"}));
    CHECK(tokenize("price >= 1.50?") == words({"price", ">", "=", "1.50", "?"}));
    CHECK(tokenize("  spaced\tout \n") == words({"spaced", "out"}));
    CHECK(tokenize("") == words({}));
    CHECK(tokenize("a4 x") == words({"a4", "x"}));
    CHECK(tokenize("4a") == words({"4", "a"}));
}

TEST_CASE("tokenize keeps decimal numbers whole") {
    CHECK(tokenize("1.5") == words({"1.5"}));
    CHECK(tokenize("3.") == words({"3", "."}));
    CHECK(tokenize("1.5.2") == words({"1.5", ".", "2"}));
    CHECK(tokenize("v1.2") == words({"v1", ".", "2"}));
}

TEST_CASE("tokenize_name treats underscores as spaces") {
    CHECK(tokenize_name("car_names") == words({"car", "names"}));
    CHECK(tokenize_name("Make") == words({"make"}));
    CHECK(tokenize_name("_id_") == words({"id"}));
}

TEST_CASE("normalize_cell trims, lowercases, collapses, canonicalizes numbers") {
    CHECK(normalize_cell("  Volvo   740 ") == "volvo 740");
    CHECK(normalize_cell("ABC") == "abc");
    CHECK(normalize_cell("007.500") == "7.5");
    CHECK(normalize_cell("-0.0") == "0");
    CHECK(normalize_cell("00") == "0");
    CHECK(normalize_cell("1.") == "1");
    CHECK(normalize_cell("+3") == "3");
    CHECK(normalize_cell("1 000") == "1 000");  // not one numeric token
}

TEST_CASE("is_numeric_token") {
    CHECK(is_numeric_token("42"));
    CHECK(is_numeric_token("-1.5"));
    CHECK_FALSE(is_numeric_token("."));
    CHECK_FALSE(is_numeric_token("-"));
    CHECK_FALSE(is_numeric_token("a1"));
    CHECK_FALSE(is_numeric_token("1.2.3"));
}

TEST_CASE("grammar parse: nonterminals, wrappers desugared, roots") {
    GrammarSpec g = mini();
    // explicit heads then aux nonterminals in first-use order
    CHECK(g.num_nonterminals() == 9);
    CHECK(g.nonterminal_name(0) == "query");
    CHECK(g.root() == 0);
    CHECK(g.nonterminal_id("where_clause?") == 7);
    CHECK(g.nonterminal_id("sel*") == 8);
    CHECK(g.nonterminal_id("absent") == -1);

    // explicit productions keep file order; aux productions follow
    CHECK(g.num_productions() == 12);
    CHECK(g.describe_production(0) ==
          "query -> select:select_clause from:from_clause where:where_clause?");
    CHECK(g.describe_production(8) == "where_clause? -> value:where_clause");
    CHECK(g.describe_production(9) == "where_clause? ->");
    CHECK(g.describe_production(10) == "sel* -> head:sel tail:sel*");
    CHECK(g.describe_production(11) == "sel* ->");

    auto& sel_prods = g.productions_of(g.nonterminal_id("sel"));
    CHECK(sel_prods == std::vector<int>{2, 3});

    CHECK(g.find_production("sel", {"COLUMN"}) == 2);
    CHECK(g.find_production("sel", {"AggCount", "COLUMN"}) == 3);
    CHECK(g.find_production("OpEq", {}) == 7);
    CHECK_THROWS_AS(g.find_production("sel", {"TABLE"}), GrammarError);
    CHECK_THROWS_AS(g.find_production("nope", {}), GrammarError);
}

TEST_CASE("grammar parse: field kind ids cover nonterminals then terminals") {
    GrammarSpec g = mini();
    CHECK(g.num_field_kinds() == 12);
    CHECK(g.field_kind_id(FieldKind{false, TerminalKind::Column, 4}) == 4);
    CHECK(g.field_kind_id(FieldKind{true, TerminalKind::Column, -1}) == 9);
    CHECK(g.field_kind_id(FieldKind{true, TerminalKind::Table, -1}) == 10);
    CHECK(g.field_kind_id(FieldKind{true, TerminalKind::Value, -1}) == 11);
}

TEST_CASE("grammar parse rejects malformed input") {
    CHECK_THROWS_AS(GrammarSpec::parse(""), GrammarError);
    CHECK_THROWS_AS(GrammarSpec::parse("a -> x:undefined_thing"), GrammarError);
    CHECK_THROWS_AS(GrammarSpec::parse("a -> nocolon"), GrammarError);
    CHECK_THROWS_AS(GrammarSpec::parse("a => x:COLUMN"), GrammarError);
    CHECK_THROWS_AS(GrammarSpec::parse("COLUMN -> x:COLUMN"), GrammarError);
    CHECK_THROWS_AS(GrammarSpec::parse("1bad -> x:COLUMN"), GrammarError);
    // comments and blank lines are fine
    GrammarSpec g = GrammarSpec::parse("# intro\n\nq -> c:COLUMN # trailing\n");
    CHECK(g.num_productions() == 1);
}

namespace {

// the worked example shared by the derivation tests:
//   SELECT col1, COUNT(col2) FROM table0 WHERE col3 = 'x y'
// over question tokens: show x and y where x y
const std::vector<std::string> kQuestion = {"show", "x", "and", "y", "where", "x", "y"};

std::vector<Action> worked_sequence() {
    using A = Action;
    return {
        A::apply_rule(0),       // query
        A::apply_rule(1),       // select_clause
        A::apply_rule(2),       // sel -> col
        A::select_column(1),
        A::apply_rule(10),      // sel* cons
        A::apply_rule(3),       // sel -> agg col
        A::apply_rule(4),       // AggCount
        A::select_column(2),
        A::apply_rule(11),      // sel* nil
        A::apply_rule(5),       // from_clause
        A::select_table(0),
        A::apply_rule(8),       // where_clause? some
        A::apply_rule(6),       // where_clause
        A::select_column(3),
        A::apply_rule(7),       // OpEq
        A::gen_value(5),
        A::gen_value(6),
        A::gen_value_end(),
    };
}

SqlAst worked_ast() {
    SqlAst agg{3, 4, {}};  // AggCount
    SqlAst sel1{2, 2, {SqlAst::Child{ColumnRef{1}}}};
    SqlAst sel2{2, 3, {SqlAst::Child{Box<SqlAst>(agg)}, SqlAst::Child{ColumnRef{2}}}};
    SqlAst nil{8, 11, {}};
    SqlAst cons{8, 10, {SqlAst::Child{Box<SqlAst>(sel2)}, SqlAst::Child{Box<SqlAst>(nil)}}};
    SqlAst select_clause{1, 1, {SqlAst::Child{Box<SqlAst>(sel1)}, SqlAst::Child{Box<SqlAst>(cons)}}};
    SqlAst from_clause{4, 5, {SqlAst::Child{TableRef{0}}}};
    SqlAst op{6, 7, {}};
    SqlAst where_clause{5, 6,
                        {SqlAst::Child{ColumnRef{3}}, SqlAst::Child{Box<SqlAst>(op)},
                         SqlAst::Child{ValueLiteral{{"x", "y"}}}}};
    SqlAst some{7, 8, {SqlAst::Child{Box<SqlAst>(where_clause)}}};
    SqlAst query{0, 0,
                 {SqlAst::Child{Box<SqlAst>(select_clause)},
                  SqlAst::Child{Box<SqlAst>(from_clause)}, SqlAst::Child{Box<SqlAst>(some)}}};
    return query;
}

}  // namespace

TEST_CASE("actions_to_ast builds the expected tree") {
    GrammarSpec g = mini();
    SqlAst got = actions_to_ast(worked_sequence(), g, kQuestion);
    CHECK(got == worked_ast());
}

TEST_CASE("ast_to_actions linearizes pre-order") {
    GrammarSpec g = mini();
    CHECK(ast_to_actions(worked_ast(), g, kQuestion) == worked_sequence());
}

TEST_CASE("round trips are identities") {
    GrammarSpec g = mini();
    auto seq = worked_sequence();
    SqlAst ast = actions_to_ast(seq, g, kQuestion);
    CHECK(ast_to_actions(ast, g, kQuestion) == seq);
    CHECK(actions_to_ast(ast_to_actions(worked_ast(), g, kQuestion), g, kQuestion) ==
          worked_ast());
}

TEST_CASE("derivation records parent steps per the expansion structure") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext ctx{10, 10, static_cast<int>(kQuestion.size()), DecodeMode::Normal};
    auto seq = worked_sequence();
    std::vector<int> parents;
    for (const auto& a : seq) {
        parents.push_back(s.parent_step());
        s.apply(a, ctx);
    }
    // hand-derived: each entry is the step that expanded the pending field's parent
    std::vector<int> expected = {-1, 0, 1, 2, 1, 4, 5, 5, 4, 0, 9, 0, 11, 12, 12, 12, 12, 12};
    CHECK(parents == expected);
    for (size_t t = 0; t < seq.size(); ++t) {
        CHECK(s.action_at(static_cast<int>(t)) == seq[t]);
        CHECK(s.parent_step_at(static_cast<int>(t)) == expected[t]);
    }
    CHECK(s.complete());
}

TEST_CASE("legal_actions enumerates the frontier in canonical order") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext ctx{4, 2, 3, DecodeMode::Normal};

    CHECK(legal_actions(s, ctx) == std::vector<Action>{Action::apply_rule(0)});
    s.apply(Action::apply_rule(0), ctx);
    CHECK(legal_actions(s, ctx) == std::vector<Action>{Action::apply_rule(1)});
    s.apply(Action::apply_rule(1), ctx);
    // expected: sel -> productions 2 and 3, ascending
    CHECK(legal_actions(s, ctx) ==
          std::vector<Action>{Action::apply_rule(2), Action::apply_rule(3)});
    s.apply(Action::apply_rule(2), ctx);
    // COLUMN frontier: all schema columns
    CHECK(legal_actions(s, ctx) ==
          std::vector<Action>{Action::select_column(0), Action::select_column(1),
                              Action::select_column(2), Action::select_column(3)});
}

TEST_CASE("legal_actions at a VALUE frontier lists tokens then END") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext ctx{4, 2, 3, DecodeMode::Normal};
    for (const auto& a :
         {Action::apply_rule(0), Action::apply_rule(1), Action::apply_rule(2),
          Action::select_column(0), Action::apply_rule(11), Action::apply_rule(5),
          Action::select_table(0), Action::apply_rule(8), Action::apply_rule(6),
          Action::select_column(1), Action::apply_rule(7)})
        s.apply(a, ctx);
    CHECK(legal_actions(s, ctx) ==
          std::vector<Action>{Action::gen_value(0), Action::gen_value(1), Action::gen_value(2),
                              Action::gen_value_end()});
    s.apply(Action::gen_value(2), ctx);
    // mid-literal: same choices remain legal
    CHECK(legal_actions(s, ctx).size() == 4);
    s.apply(Action::gen_value_end(), ctx);
    CHECK(s.complete());
    CHECK_THROWS_AS(legal_actions(s, ctx), CompleteDerivation);
    CHECK_THROWS_AS(s.expected_kind(), CompleteDerivation);
}

TEST_CASE("restricted mode pins terminal choices to index zero") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext gp{4, 2, 3, DecodeMode::Gp};
    s.apply(Action::apply_rule(0), gp);
    s.apply(Action::apply_rule(1), gp);
    s.apply(Action::apply_rule(2), gp);
    CHECK(legal_actions(s, gp) == std::vector<Action>{Action::select_column(0)});
    CHECK_THROWS_AS(s.apply(Action::select_column(1), gp), IllegalAction);
    s.apply(Action::select_column(0), gp);
    s.apply(Action::apply_rule(11), gp);
    s.apply(Action::apply_rule(5), gp);
    CHECK(legal_actions(s, gp) == std::vector<Action>{Action::select_table(0)});
    s.apply(Action::select_table(0), gp);
    s.apply(Action::apply_rule(8), gp);
    s.apply(Action::apply_rule(6), gp);
    s.apply(Action::select_column(0), gp);
    s.apply(Action::apply_rule(7), gp);
    CHECK(legal_actions(s, gp) ==
          std::vector<Action>{Action::gen_value(0), Action::gen_value_end()});
    CHECK_THROWS_AS(s.apply(Action::gen_value(1), gp), IllegalAction);
    s.apply(Action::gen_value(0), gp);
    s.apply(Action::gen_value_end(), gp);
    CHECK(s.complete());
}

TEST_CASE("illegal actions carry the offending step") {
    GrammarSpec g = mini();
    LegalContext ctx{4, 2, 3, DecodeMode::Normal};

    SUBCASE("wrong production head") {
        DerivationState s(g);
        CHECK_THROWS_AS(s.apply(Action::apply_rule(5), ctx), IllegalAction);
    }
    SUBCASE("terminal action at a nonterminal frontier") {
        DerivationState s(g);
        CHECK_THROWS_AS(s.apply(Action::select_column(0), ctx), IllegalAction);
    }
    SUBCASE("column index out of range") {
        DerivationState s(g);
        s.apply(Action::apply_rule(0), ctx);
        s.apply(Action::apply_rule(1), ctx);
        s.apply(Action::apply_rule(2), ctx);
        try {
            s.apply(Action::select_column(4), ctx);
            FAIL("expected IllegalAction");
        } catch (const IllegalAction& e) {
            CHECK(e.step == 3);
        }
    }
    SUBCASE("production id out of range") {
        DerivationState s(g);
        CHECK_THROWS_AS(s.apply(Action::apply_rule(99), ctx), IllegalAction);
    }
}

TEST_CASE("sequence conversion flags truncation and trailing actions") {
    GrammarSpec g = mini();
    auto seq = worked_sequence();

    auto shorter = seq;
    shorter.pop_back();
    CHECK_THROWS_AS(actions_to_ast(shorter, g, kQuestion), TruncatedSequence);

    auto longer = seq;
    longer.push_back(Action::apply_rule(0));
    CHECK_THROWS_AS(actions_to_ast(longer, g, kQuestion), TrailingActions);

    CHECK_THROWS_AS(actions_to_ast({}, g, kQuestion), TruncatedSequence);
}

TEST_CASE("to_ast demands completeness") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext ctx{4, 2, 3, DecodeMode::Normal};
    s.apply(Action::apply_rule(0), ctx);
    CHECK_THROWS_AS(s.to_ast(), IncompleteAst);
}

TEST_CASE("out-of-question literals cannot be linearized") {
    GrammarSpec g = mini();
    SqlAst ast = worked_ast();
    CHECK_THROWS_AS(ast_to_actions(ast, g, {"nothing", "matches"}), ValueNotCopyable);
}

TEST_CASE("empty question leaves literal placeholders") {
    GrammarSpec g = mini();
    SqlAst got = actions_to_ast(worked_sequence(), g);
    // find the literal: query -> where? -> some -> where_clause -> val
    const auto& some = *std::get<Box<SqlAst>>(got.children[2]);
    const auto& wc = *std::get<Box<SqlAst>>(some.children[0]);
    const auto& lit = std::get<ValueLiteral>(wc.children[2]);
    CHECK(lit.tokens == words({"@5", "@6"}));
}

TEST_CASE("gp_rewrite zeroes terminal indices and keeps structure") {
    auto seq = worked_sequence();
    auto rw = gp_rewrite(seq);
    REQUIRE(rw.size() == seq.size());
    for (size_t i = 0; i < seq.size(); ++i) {
        CHECK(rw[i].tag == seq[i].tag);
        if (seq[i].tag == Action::Tag::ApplyRule) CHECK(rw[i].index == seq[i].index);
        if (seq[i].tag == Action::Tag::SelectColumn || seq[i].tag == Action::Tag::SelectTable ||
            seq[i].tag == Action::Tag::GenValue)
            CHECK(rw[i].index == 0);
    }
    // the rewritten sequence is a legal derivation under the restricted mode
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext gp{7, 3, 7, DecodeMode::Gp};
    for (const auto& a : rw) s.apply(a, gp);
    CHECK(s.complete());
}

TEST_CASE("random rollouts stay legal and complete within bounds") {
    GrammarSpec g = mini();
    LegalContext ctx{5, 3, 4, DecodeMode::Normal};
    std::mt19937_64 rng(20260817);
    std::vector<std::string> dummy_q = {"w0", "w1", "w2", "w3"};
    int completed = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Action> seq;
        try {
            seq = random_rollout(g, ctx, rng);
        } catch (const TruncatedSequence&) {
            continue;  // hit the length cap; never an IllegalAction
        }
        REQUIRE(static_cast<int>(seq.size()) <= kMaxActionLength);
        // replay to confirm legality and termination state
        DerivationState s(g);
        for (const auto& a : seq) s.apply(a, ctx);
        REQUIRE(s.complete());
        ++completed;
        SqlAst ast = actions_to_ast(seq, g, dummy_q);
        CHECK(ast.node_type == g.root());
    }
    // the mini grammar recurses only through sel*; almost everything finishes
    CHECK(completed > 250);
}

TEST_CASE("rollouts are deterministic for a fixed seed") {
    GrammarSpec g = mini();
    LegalContext ctx{5, 3, 4, DecodeMode::Normal};
    std::mt19937_64 a(7), b(7);
    for (int i = 0; i < 20; ++i) CHECK(random_rollout(g, ctx, a) == random_rollout(g, ctx, b));
}

TEST_CASE("max_len aborts a runaway rollout") {
    // grammar that always recurses: every completion needs infinitely many steps
    GrammarSpec g = GrammarSpec::parse("loop -> next:loop c:COLUMN");
    LegalContext ctx{1, 1, 1, DecodeMode::Normal};
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(random_rollout(g, ctx, rng, 50), TruncatedSequence);
}

TEST_CASE("action to_string renders readably") {
    GrammarSpec g = mini();
    CHECK(to_string(Action::select_column(3)) == "SelectColumn(3)");
    CHECK(to_string(Action::gen_value_end()) == "GenValue(END)");
    CHECK(to_string(Action::apply_rule(2), &g) == "ApplyRule(sel -> col:COLUMN)");
}

TEST_CASE("empty value literal is representable") {
    GrammarSpec g = mini();
    DerivationState s(g);
    LegalContext ctx{4, 2, 3, DecodeMode::Normal};
    for (const auto& a :
         {Action::apply_rule(0), Action::apply_rule(1), Action::apply_rule(2),
          Action::select_column(0), Action::apply_rule(11), Action::apply_rule(5),
          Action::select_table(0), Action::apply_rule(8), Action::apply_rule(6),
          Action::select_column(1), Action::apply_rule(7), Action::gen_value_end()})
        s.apply(a, ctx);
    CHECK(s.complete());
    SqlAst ast = s.to_ast();
    const auto& some = *std::get<Box<SqlAst>>(ast.children[2]);
    const auto& wc = *std::get<Box<SqlAst>>(some.children[0]);
    CHECK(std::get<ValueLiteral>(wc.children[2]).tokens.empty());
}
