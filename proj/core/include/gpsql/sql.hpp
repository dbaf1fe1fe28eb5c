#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpsql/ast.hpp"
#include "gpsql/schema.hpp"

namespace gpsql {

// Enumerator order mirrors the production order in the standard grammar.
enum class AggOp { Max, Min, Count, Sum, Avg };
enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Eq, Ne, Gt, Lt, Ge, Le };
enum class ConjOp { And, Or };
enum class SetOpKind { Union, Intersect, Except };
enum class PredKind { Cmp, Between, In, Like };

/// Flat query intermediate form sitting between SQL text and the typed AST.
/// Aliases are resolved away; join conditions are implied by foreign keys.
struct SqlQuery;

struct ValUnit {
    bool distinct = false;
    int column = 0;
    bool operator==(const ValUnit&) const = default;
};

struct ValExpr {
    ValUnit left;
    std::optional<ArithOp> op;  // engaged => binary arithmetic over left/right
    ValUnit right;
    bool operator==(const ValExpr&) const = default;
};

struct SelVal {
    std::optional<AggOp> agg;
    ValExpr expr;
    bool operator==(const SelVal&) const = default;
};

struct Operand {
    enum class Kind { Value, Column, Subquery };
    Kind kind = Kind::Value;
    std::vector<std::string> value_tokens;  // Kind::Value
    ValUnit unit;                           // Kind::Column
    Box<SqlQuery> subquery;                 // Kind::Subquery
    bool operator==(const Operand&) const;
};

struct CondAtom {
    bool negated = false;
    SelVal lhs;
    PredKind pred = PredKind::Cmp;
    CmpOp cmp = CmpOp::Eq;      // PredKind::Cmp
    Operand rhs;                // Cmp, Like
    Operand lo, hi;             // Between
    Box<SqlQuery> in_subquery;  // In
    bool operator==(const CondAtom&) const;
};

/// Conjunction chain: atoms[0] conjs[0] atoms[1] conjs[1] ...
struct Condition {
    std::vector<CondAtom> atoms;
    std::vector<ConjOp> conjs;
    bool operator==(const Condition&) const = default;
};

struct OrderKey {
    SelVal val;
    bool desc = false;
    bool operator==(const OrderKey&) const = default;
};

struct SqlQuery {
    bool distinct = false;
    std::vector<SelVal> select;
    std::vector<int> from_tables;  // schema table indices, ordered
    std::optional<Condition> where;
    std::vector<int> group_by;  // column indices
    std::optional<Condition> having;
    std::vector<OrderKey> order_by;
    std::optional<std::vector<std::string>> limit;  // literal tokens
    std::optional<SetOpKind> setop;
    Box<SqlQuery> setop_right;
    bool operator==(const SqlQuery&) const;
};

/// The SQL grammar plus sanity checks on its root layout (first field the
/// select clause, second the from clause).
class SqlGrammar {
  public:
    /// The built-in grammar (also shipped as data/sql.grammar).
    static const SqlGrammar& standard();
    static SqlGrammar from(GrammarSpec g);
    static SqlGrammar load_file(const std::string& path);

    const GrammarSpec& grammar() const { return g_; }
    int find(const std::string& head, const std::vector<std::string>& kinds) const {
        return g_.find_production(head, kinds);
    }

  private:
    GrammarSpec g_;
};

/// Text of the built-in grammar, for shipping/sync checks.
const std::string& standard_grammar_text();

// ---- text ⇄ IR --------------------------------------------------------------

/// Parses a SQL string against a schema. Aliases resolve case-insensitively;
/// explicit JOIN ... ON conditions are validated syntactically and dropped
/// (they are implied by foreign keys). Throws UnsupportedSyntax and
/// UnknownIdentifier.
SqlQuery parse_sql_text(const std::string& text, const Schema& schema);

/// Deterministic SQL text: uppercase keywords, original identifier casing,
/// columns qualified by table name when several tables are in scope.
std::string render_query(const SqlQuery& query, const Schema& schema);

// ---- IR ⇄ AST ---------------------------------------------------------------

SqlAst query_to_ast(const SqlQuery& query, const SqlGrammar& sg);
SqlQuery ast_to_query(const SqlAst& ast, const SqlGrammar& sg);

// ---- convenience compositions ----------------------------------------------

SqlAst parse_sql(const std::string& text, const Schema& schema,
                 const SqlGrammar& sg = SqlGrammar::standard());
std::string render_sql(const SqlAst& ast, const Schema& schema,
                       const SqlGrammar& sg = SqlGrammar::standard());

}  // namespace gpsql
