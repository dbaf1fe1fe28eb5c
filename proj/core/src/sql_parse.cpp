#include <algorithm>
#include <cctype>
#include <map>

#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"
#include "gpsql/tokenize.hpp"

namespace gpsql {

namespace {

struct Tok {
    enum class Kind { Ident, Number, String, Punct, End };
    Kind kind = Kind::End;
    std::string text;   // original spelling (String: inner text)
    std::string lower;  // lowercase spelling for keyword checks
};

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<Tok> lex(const std::string& text) {
    std::vector<Tok> out;
    const size_t n = text.size();
    size_t i = 0;
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = text[i];
            size_t j = i + 1;
            while (j < n && text[j] != quote) ++j;
            if (j >= n) throw UnsupportedSyntax("unterminated string literal");
            std::string inner = text.substr(i + 1, j - i - 1);
            out.push_back({Tok::Kind::String, inner, lower(inner)});
            i = j + 1;
            continue;
        }
        if (std::isdigit(c)) {
            size_t j = i;
            bool dot = false;
            while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                             (text[j] == '.' && !dot && j + 1 < n &&
                              std::isdigit(static_cast<unsigned char>(text[j + 1]))))) {
                if (text[j] == '.') dot = true;
                ++j;
            }
            std::string num = text.substr(i, j - i);
            out.push_back({Tok::Kind::Number, num, num});
            i = j;
            continue;
        }
        if (std::isalpha(c) || c == '_') {
            size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            std::string word = text.substr(i, j - i);
            out.push_back({Tok::Kind::Ident, word, lower(word)});
            i = j;
            continue;
        }
        // two-character operators first
        if (i + 1 < n) {
            std::string two = text.substr(i, 2);
            if (two == "<=" || two == ">=" || two == "!=" || two == "<>") {
                out.push_back({Tok::Kind::Punct, two, two});
                i += 2;
                continue;
            }
        }
        static const std::string kSingles = "(),.*+-/=<>;";
        if (kSingles.find(text[i]) != std::string::npos) {
            std::string one(1, text[i]);
            out.push_back({Tok::Kind::Punct, one, one});
            ++i;
            continue;
        }
        throw UnsupportedSyntax(std::string("character '") + text[i] + "'");
    }
    out.push_back({Tok::Kind::End, "", ""});
    return out;
}

bool is_clause_kw(const Tok& t) {
    if (t.kind != Tok::Kind::Ident) return false;
    return t.lower == "where" || t.lower == "group" || t.lower == "order" ||
           t.lower == "limit" || t.lower == "union" || t.lower == "intersect" ||
           t.lower == "except" || t.lower == "having";
}

const std::map<std::string, AggOp> kAggs = {{"max", AggOp::Max},
                                            {"min", AggOp::Min},
                                            {"count", AggOp::Count},
                                            {"sum", AggOp::Sum},
                                            {"avg", AggOp::Avg}};

class Parser {
  public:
    Parser(const Schema& schema, std::vector<Tok> toks)
        : schema_(schema), toks_(std::move(toks)) {}

    SqlQuery parse() {
        SqlQuery q = parse_query();
        if (!at_end()) throw UnsupportedSyntax("trailing input at '" + peek().text + "'");
        return q;
    }

  private:
    const Schema& schema_;
    std::vector<Tok> toks_;
    size_t pos_ = 0;
    std::map<std::string, int> aliases_;  // lowercase alias/table name -> table index
    std::vector<int> scope_tables_;       // current FROM tables, for bare-name resolution

    const Tok& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at_end() const {
        return peek().kind == Tok::Kind::End || peek().text == ";";
    }
    const Tok& advance() { return toks_[pos_++]; }
    bool is_kw(const char* kw, size_t ahead = 0) const {
        const Tok& t = peek(ahead);
        return t.kind == Tok::Kind::Ident && t.lower == kw;
    }
    bool accept_kw(const char* kw) {
        if (!is_kw(kw)) return false;
        ++pos_;
        return true;
    }
    void expect_kw(const char* kw) {
        if (!accept_kw(kw))
            throw UnsupportedSyntax("expected '" + std::string(kw) + "' before '" +
                                    peek().text + "'");
    }
    bool is_punct(const char* p, size_t ahead = 0) const {
        const Tok& t = peek(ahead);
        return t.kind == Tok::Kind::Punct && t.text == p;
    }
    bool accept_punct(const char* p) {
        if (!is_punct(p)) return false;
        ++pos_;
        return true;
    }
    void expect_punct(const char* p) {
        if (!accept_punct(p))
            throw UnsupportedSyntax("expected '" + std::string(p) + "' before '" + peek().text +
                                    "'");
    }

    // ---- query -------------------------------------------------------------

    SqlQuery parse_query() {
        auto saved_aliases = aliases_;
        auto saved_scope = scope_tables_;
        SqlQuery q = parse_query_body();
        aliases_ = std::move(saved_aliases);
        scope_tables_ = std::move(saved_scope);
        return q;
    }

    SqlQuery parse_query_body() {
        expect_kw("select");
        SqlQuery q;
        q.distinct = accept_kw("distinct");

        // locate the FROM segment first so select items can resolve names
        size_t select_start = pos_;
        auto [from_pos, from_end] = find_from_segment();
        pos_ = from_pos + 1;
        parse_from(q, from_end);

        pos_ = select_start;
        q.select.push_back(parse_sel_val());
        while (accept_punct(",")) q.select.push_back(parse_sel_val());
        if (pos_ != from_pos)
            throw UnsupportedSyntax("unexpected '" + peek().text + "' in select list");
        pos_ = from_end;

        if (accept_kw("where")) q.where = parse_condition();
        if (accept_kw("group")) {
            expect_kw("by");
            q.group_by.push_back(parse_column_ref().column);
            while (accept_punct(",")) q.group_by.push_back(parse_column_ref().column);
            if (accept_kw("having")) q.having = parse_condition();
        }
        if (accept_kw("order")) {
            expect_kw("by");
            q.order_by.push_back(parse_order_key());
            while (accept_punct(",")) q.order_by.push_back(parse_order_key());
        }
        if (accept_kw("limit")) {
            if (peek().kind != Tok::Kind::Number)
                throw UnsupportedSyntax("LIMIT expects a number, got '" + peek().text + "'");
            q.limit = tokenize(advance().text);
        }
        if (is_kw("union") || is_kw("intersect") || is_kw("except")) {
            std::string op = advance().lower;
            if (accept_kw("all")) throw UnsupportedSyntax("set operation with ALL");
            q.setop = op == "union"      ? SetOpKind::Union
                      : op == "intersect" ? SetOpKind::Intersect
                                          : SetOpKind::Except;
            q.setop_right = Box<SqlQuery>(parse_query());
        }
        return q;
    }

    // scans ahead (without consuming) for this query's FROM segment
    std::pair<size_t, size_t> find_from_segment() {
        int depth = 0;
        size_t from_pos = std::string::npos;
        for (size_t i = pos_; i < toks_.size(); ++i) {
            const Tok& t = toks_[i];
            if (t.kind == Tok::Kind::Punct && t.text == "(") ++depth;
            if (t.kind == Tok::Kind::Punct && t.text == ")") {
                if (depth == 0) break;
                --depth;
            }
            if (t.kind == Tok::Kind::End) break;
            if (depth == 0 && t.kind == Tok::Kind::Ident && t.lower == "from") {
                from_pos = i;
                break;
            }
        }
        if (from_pos == std::string::npos) throw UnsupportedSyntax("query without FROM");
        int depth2 = 0;
        size_t end = from_pos + 1;
        for (; end < toks_.size(); ++end) {
            const Tok& t = toks_[end];
            if (t.kind == Tok::Kind::End) break;
            if (t.kind == Tok::Kind::Punct && t.text == "(") ++depth2;
            if (t.kind == Tok::Kind::Punct && t.text == ")") {
                if (depth2 == 0) break;
                --depth2;
            }
            if (depth2 == 0 && is_clause_kw(t)) break;
        }
        return {from_pos, end};
    }

    void parse_from(SqlQuery& q, size_t from_end) {
        aliases_.clear();
        scope_tables_.clear();
        parse_table_ref(q);
        while (pos_ < from_end) {
            if (accept_punct(",")) {
                parse_table_ref(q);
            } else if (accept_kw("inner") || is_kw("join")) {
                expect_kw("join");
                parse_table_ref(q);
                if (accept_kw("on")) skip_join_condition(from_end);
            } else {
                throw UnsupportedSyntax("unexpected '" + peek().text + "' in FROM");
            }
        }
        if (pos_ != from_end) throw UnsupportedSyntax("malformed FROM clause");
    }

    void parse_table_ref(SqlQuery& q) {
        if (is_punct("("))
            throw UnsupportedSyntax("subquery in FROM");
        if (peek().kind != Tok::Kind::Ident)
            throw UnsupportedSyntax("expected table name, got '" + peek().text + "'");
        const Tok& name = advance();
        int t = schema_.table_index(name.text);
        if (t < 0) throw UnknownIdentifier(name.text);
        q.from_tables.push_back(t);
        scope_tables_.push_back(t);
        aliases_[name.lower] = t;
        if (accept_kw("as")) {
            if (peek().kind != Tok::Kind::Ident)
                throw UnsupportedSyntax("expected alias after AS");
            aliases_[advance().lower] = t;
        } else if (peek().kind == Tok::Kind::Ident && !is_from_reserved(peek()) &&
                   !is_clause_kw(peek())) {
            aliases_[advance().lower] = t;  // bare alias
        }
    }

    static bool is_from_reserved(const Tok& t) {
        if (t.kind != Tok::Kind::Ident) return false;
        return t.lower == "join" || t.lower == "inner" || t.lower == "on" ||
               t.lower == "left" || t.lower == "right" || t.lower == "full" ||
               t.lower == "outer" || t.lower == "cross" || t.lower == "natural";
    }

    // JOIN ... ON conditions are implied by foreign keys; validate the shape
    // (column = column, AND-chained) and drop them.
    void skip_join_condition(size_t from_end) {
        do {
            if (pos_ >= from_end) throw UnsupportedSyntax("truncated ON condition");
            parse_column_ref();
            expect_punct("=");
            parse_column_ref();
        } while (pos_ < from_end && accept_kw("and"));
    }

    // ---- expressions ---------------------------------------------------------

    SelVal parse_sel_val() {
        SelVal sv;
        if (peek().kind == Tok::Kind::Ident && kAggs.count(peek().lower) && is_punct("(", 1)) {
            sv.agg = kAggs.at(advance().lower);
            expect_punct("(");
            bool distinct = accept_kw("distinct");
            sv.expr = parse_val_expr();
            if (distinct) sv.expr.left.distinct = true;
            expect_punct(")");
            return sv;
        }
        sv.expr = parse_val_expr();
        return sv;
    }

    ValExpr parse_val_expr() {
        ValExpr e;
        e.left = parse_val_unit();
        if (is_punct("+") || is_punct("-") || is_punct("*") || is_punct("/")) {
            // `*` only acts as an operator when a column reference follows
            if (is_punct("*") && !(peek(1).kind == Tok::Kind::Ident)) return e;
            std::string op = advance().text;
            e.op = op == "+"   ? ArithOp::Add
                   : op == "-" ? ArithOp::Sub
                   : op == "*" ? ArithOp::Mul
                               : ArithOp::Div;
            e.right = parse_val_unit();
        }
        return e;
    }

    ValUnit parse_val_unit() {
        ValUnit u;
        if (accept_kw("distinct")) u.distinct = true;
        ValUnit ref = parse_column_ref();
        u.column = ref.column;
        return u;
    }

    ValUnit parse_column_ref() {
        ValUnit u;
        if (accept_punct("*")) {
            u.column = 0;
            return u;
        }
        if (peek().kind != Tok::Kind::Ident)
            throw UnsupportedSyntax("expected column, got '" + peek().text + "'");
        const Tok first = advance();
        if (accept_punct(".")) {
            auto it = aliases_.find(first.lower);
            int t = it != aliases_.end() ? it->second : schema_.table_index(first.text);
            if (t < 0) throw UnknownIdentifier(first.text);
            if (peek().kind != Tok::Kind::Ident)
                throw UnsupportedSyntax("expected column after '" + first.text + ".'");
            const Tok col = advance();
            int c = schema_.column_index(t, col.text);
            if (c < 0) throw UnknownIdentifier(first.text + "." + col.text);
            u.column = c;
            return u;
        }
        // bare column: FROM tables first, then the whole schema
        for (int t : scope_tables_) {
            int c = schema_.column_index(t, first.text);
            if (c >= 0) {
                u.column = c;
                return u;
            }
        }
        for (int t = 0; t < schema_.num_tables(); ++t) {
            int c = schema_.column_index(t, first.text);
            if (c >= 0) {
                u.column = c;
                return u;
            }
        }
        throw UnknownIdentifier(first.text);
    }

    // ---- conditions ----------------------------------------------------------

    Condition parse_condition() {
        Condition cond;
        cond.atoms.push_back(parse_cond_atom());
        while (is_kw("and") || is_kw("or")) {
            cond.conjs.push_back(advance().lower == "and" ? ConjOp::And : ConjOp::Or);
            cond.atoms.push_back(parse_cond_atom());
        }
        return cond;
    }

    CondAtom parse_cond_atom() {
        CondAtom atom;
        if (accept_kw("not")) atom.negated = true;
        atom.lhs = parse_sel_val();
        if (accept_kw("not")) atom.negated = true;

        if (accept_kw("between")) {
            atom.pred = PredKind::Between;
            atom.lo = parse_operand();
            expect_kw("and");
            atom.hi = parse_operand();
            return atom;
        }
        if (accept_kw("in")) {
            atom.pred = PredKind::In;
            expect_punct("(");
            if (!is_kw("select")) throw UnsupportedSyntax("IN expects a subquery");
            atom.in_subquery = Box<SqlQuery>(parse_query());
            expect_punct(")");
            return atom;
        }
        if (accept_kw("like")) {
            atom.pred = PredKind::Like;
            atom.rhs = parse_operand();
            return atom;
        }
        if (peek().kind == Tok::Kind::Punct) {
            static const std::map<std::string, CmpOp> kCmps = {
                {"=", CmpOp::Eq},  {"!=", CmpOp::Ne}, {"<>", CmpOp::Ne}, {">", CmpOp::Gt},
                {"<", CmpOp::Lt}, {">=", CmpOp::Ge}, {"<=", CmpOp::Le}};
            auto it = kCmps.find(peek().text);
            if (it != kCmps.end()) {
                ++pos_;
                atom.pred = PredKind::Cmp;
                atom.cmp = it->second;
                atom.rhs = parse_operand();
                return atom;
            }
        }
        throw UnsupportedSyntax("expected comparison before '" + peek().text + "'");
    }

    Operand parse_operand() {
        Operand op;
        if (peek().kind == Tok::Kind::String || peek().kind == Tok::Kind::Number) {
            op.kind = Operand::Kind::Value;
            op.value_tokens = tokenize(advance().text);
            return op;
        }
        if (accept_punct("(")) {
            if (!is_kw("select"))
                throw UnsupportedSyntax("parenthesized operand must be a subquery");
            op.kind = Operand::Kind::Subquery;
            op.subquery = Box<SqlQuery>(parse_query());
            expect_punct(")");
            return op;
        }
        if (is_kw("all") || is_kw("any") || is_kw("some"))
            throw UnsupportedSyntax("quantified comparison " + peek().text);
        op.kind = Operand::Kind::Column;
        op.unit = parse_column_ref();
        return op;
    }

    OrderKey parse_order_key() {
        OrderKey key;
        key.val = parse_sel_val();
        if (accept_kw("desc"))
            key.desc = true;
        else
            accept_kw("asc");
        return key;
    }
};

}  // namespace

SqlQuery parse_sql_text(const std::string& text, const Schema& schema) {
    Parser p(schema, lex(text));
    return p.parse();
}

}  // namespace gpsql
