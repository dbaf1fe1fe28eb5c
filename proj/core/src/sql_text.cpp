#include <fstream>
#include <sstream>

#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"

namespace gpsql {

namespace {

// Kept byte-identical with data/sql.grammar (a test enforces the sync).
const char* kStandardGrammar =
    R"(# SQL grammar. One production per line: Head -> field:Kind field:Kind ...
# Kind is a nonterminal, COLUMN, TABLE, or VALUE; a trailing ? marks an
# optional field and * a zero-or-more list.

query -> select:select_clause from:from_clause where:where_clause? group:group_clause? order:order_clause? limit:limit_clause? setop:setop_clause?

select_clause -> distinct:Distinct? first:sel_val rest:sel_val*

sel_val -> v:val_expr
sel_val -> agg:agg_op v:val_expr

agg_op -> m:AggMax
agg_op -> m:AggMin
agg_op -> m:AggCount
agg_op -> m:AggSum
agg_op -> m:AggAvg
AggMax ->
AggMin ->
AggCount ->
AggSum ->
AggAvg ->

val_expr -> u:val_unit
val_expr -> left:val_unit op:arith_op right:val_unit

arith_op -> m:OpAdd
arith_op -> m:OpSub
arith_op -> m:OpMul
arith_op -> m:OpDiv
OpAdd ->
OpSub ->
OpMul ->
OpDiv ->

val_unit -> distinct:Distinct? col:COLUMN

Distinct ->

from_clause -> first:TABLE rest:TABLE*

where_clause -> cond:condition

condition -> c:cond_atom
condition -> left:cond_atom conj:conj_op right:condition

conj_op -> m:OpAnd
conj_op -> m:OpOr
OpAnd ->
OpOr ->

cond_atom -> neg:NotFlag? lhs:sel_val pred:predicate

NotFlag ->

predicate -> op:cmp_op rhs:operand
predicate -> k:PredBetween lo:operand hi:operand
predicate -> k:PredIn sub:query
predicate -> k:PredLike rhs:operand

PredBetween ->
PredIn ->
PredLike ->

cmp_op -> m:OpEq
cmp_op -> m:OpNe
cmp_op -> m:OpGt
cmp_op -> m:OpLt
cmp_op -> m:OpGe
cmp_op -> m:OpLe
OpEq ->
OpNe ->
OpGt ->
OpLt ->
OpGe ->
OpLe ->

operand -> v:VALUE
operand -> c:val_unit
operand -> q:query

group_clause -> first:COLUMN rest:COLUMN* having:having_clause?

having_clause -> cond:condition

order_clause -> first:order_key rest:order_key*

order_key -> v:sel_val dir:SortDesc?

SortDesc ->

limit_clause -> n:VALUE

setop_clause -> kind:setop_kind right:query

setop_kind -> m:OpUnion
setop_kind -> m:OpIntersect
setop_kind -> m:OpExcept
OpUnion ->
OpIntersect ->
OpExcept ->
)";

}  // namespace

const std::string& standard_grammar_text() {
    static const std::string text = kStandardGrammar;
    return text;
}

SqlGrammar SqlGrammar::from(GrammarSpec g) {
    const auto& roots = g.productions_of(g.root());
    if (roots.size() != 1)
        throw GrammarError("SQL grammar root must have exactly one production");
    const Production& root = g.production(roots[0]);
    if (root.fields.size() < 2 || root.fields[0].name != "select" ||
        root.fields[1].name != "from" || root.fields[0].kind.terminal ||
        root.fields[1].kind.terminal)
        throw GrammarError(
            "SQL grammar root must open with clause fields select, from");
    SqlGrammar sg;
    sg.g_ = std::move(g);
    return sg;
}

const SqlGrammar& SqlGrammar::standard() {
    static const SqlGrammar sg = SqlGrammar::from(GrammarSpec::parse(standard_grammar_text()));
    return sg;
}

SqlGrammar SqlGrammar::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return SqlGrammar::from(GrammarSpec::parse(ss.str()));
}

bool Operand::operator==(const Operand& o) const {
    return kind == o.kind && value_tokens == o.value_tokens && unit == o.unit &&
           subquery == o.subquery;
}

bool CondAtom::operator==(const CondAtom& o) const {
    return negated == o.negated && lhs == o.lhs && pred == o.pred && cmp == o.cmp &&
           rhs == o.rhs && lo == o.lo && hi == o.hi && in_subquery == o.in_subquery;
}

bool SqlQuery::operator==(const SqlQuery& o) const {
    return distinct == o.distinct && select == o.select && from_tables == o.from_tables &&
           where == o.where && group_by == o.group_by && having == o.having &&
           order_by == o.order_by && limit == o.limit && setop == o.setop &&
           setop_right == o.setop_right;
}

SqlAst parse_sql(const std::string& text, const Schema& schema, const SqlGrammar& sg) {
    return query_to_ast(parse_sql_text(text, schema), sg);
}

std::string render_sql(const SqlAst& ast, const Schema& schema, const SqlGrammar& sg) {
    return render_query(ast_to_query(ast, sg), schema);
}

}  // namespace gpsql
