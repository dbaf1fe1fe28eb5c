#include <map>
#include <string>

#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"

namespace gpsql {

namespace {

// marker nonterminal names, indexed by the matching enum value
const char* const kAggNames[] = {"AggMax", "AggMin", "AggCount", "AggSum", "AggAvg"};
const char* const kArithNames[] = {"OpAdd", "OpSub", "OpMul", "OpDiv"};
const char* const kCmpNames[] = {"OpEq", "OpNe", "OpGt", "OpLt", "OpGe", "OpLe"};
const char* const kConjNames[] = {"OpAnd", "OpOr"};
const char* const kSetOpNames[] = {"OpUnion", "OpIntersect", "OpExcept"};

template <typename Enum, size_t N>
Enum enum_of(const char* const (&names)[N], const std::string& name) {
    for (size_t i = 0; i < N; ++i)
        if (name == names[i]) return static_cast<Enum>(i);
    throw GrammarError("unexpected marker '" + name + "'");
}

// ---- IR -> AST ---------------------------------------------------------------

struct AstBuilder {
    const SqlGrammar& sg;
    const GrammarSpec& g;

    explicit AstBuilder(const SqlGrammar& grammar) : sg(grammar), g(grammar.grammar()) {}

    SqlAst make(const std::string& head, const std::vector<std::string>& kinds,
                std::vector<SqlAst::Child> children) const {
        int pid = sg.find(head, kinds);
        SqlAst n;
        n.node_type = g.production(pid).head;
        n.production = pid;
        n.children = std::move(children);
        return n;
    }
    static SqlAst::Child box(SqlAst n) { return Box<SqlAst>(std::move(n)); }

    SqlAst marker(const std::string& name) const { return make(name, {}, {}); }

    SqlAst marker_wrap(const std::string& head, const std::string& name) const {
        return make(head, {name}, {box(marker(name))});
    }

    SqlAst flag_opt(const std::string& base, bool on) const {
        if (on) return make(base + "?", {base}, {box(marker(base))});
        return make(base + "?", {}, {});
    }
    SqlAst node_opt(const std::string& base, std::optional<SqlAst> inner) const {
        if (inner) return make(base + "?", {base}, {box(std::move(*inner))});
        return make(base + "?", {}, {});
    }
    SqlAst node_list(const std::string& base, std::vector<SqlAst> items) const {
        SqlAst acc = make(base + "*", {}, {});
        for (size_t i = items.size(); i-- > 0;)
            acc = make(base + "*", {base, base + "*"},
                       {box(std::move(items[i])), box(std::move(acc))});
        return acc;
    }

    SqlAst val_unit_ast(const ValUnit& u) const {
        return make("val_unit", {"Distinct?", "COLUMN"},
                    {box(flag_opt("Distinct", u.distinct)), ColumnRef{u.column}});
    }
    SqlAst val_expr_ast(const ValExpr& e) const {
        if (!e.op) return make("val_expr", {"val_unit"}, {box(val_unit_ast(e.left))});
        return make("val_expr", {"val_unit", "arith_op", "val_unit"},
                    {box(val_unit_ast(e.left)),
                     box(marker_wrap("arith_op", kArithNames[static_cast<int>(*e.op)])),
                     box(val_unit_ast(e.right))});
    }
    SqlAst sel_val_ast(const SelVal& sv) const {
        if (!sv.agg) return make("sel_val", {"val_expr"}, {box(val_expr_ast(sv.expr))});
        return make("sel_val", {"agg_op", "val_expr"},
                    {box(marker_wrap("agg_op", kAggNames[static_cast<int>(*sv.agg)])),
                     box(val_expr_ast(sv.expr))});
    }

    SqlAst operand_ast(const Operand& op) const {
        switch (op.kind) {
            case Operand::Kind::Value:
                return make("operand", {"VALUE"}, {ValueLiteral{op.value_tokens}});
            case Operand::Kind::Column:
                return make("operand", {"val_unit"}, {box(val_unit_ast(op.unit))});
            case Operand::Kind::Subquery:
                if (!op.subquery) throw IncompleteAst();
                return make("operand", {"query"}, {box(query_ast(*op.subquery))});
        }
        throw GrammarError("bad operand kind");
    }

    SqlAst cond_atom_ast(const CondAtom& atom) const {
        SqlAst pred = [&] {
            switch (atom.pred) {
                case PredKind::Cmp:
                    return make("predicate", {"cmp_op", "operand"},
                                {box(marker_wrap("cmp_op", kCmpNames[static_cast<int>(atom.cmp)])),
                                 box(operand_ast(atom.rhs))});
                case PredKind::Between:
                    return make("predicate", {"PredBetween", "operand", "operand"},
                                {box(marker("PredBetween")), box(operand_ast(atom.lo)),
                                 box(operand_ast(atom.hi))});
                case PredKind::In:
                    if (!atom.in_subquery) throw IncompleteAst();
                    return make("predicate", {"PredIn", "query"},
                                {box(marker("PredIn")), box(query_ast(*atom.in_subquery))});
                case PredKind::Like:
                    return make("predicate", {"PredLike", "operand"},
                                {box(marker("PredLike")), box(operand_ast(atom.rhs))});
            }
            throw GrammarError("bad predicate kind");
        }();
        return make("cond_atom", {"NotFlag?", "sel_val", "predicate"},
                    {box(flag_opt("NotFlag", atom.negated)), box(sel_val_ast(atom.lhs)),
                     box(std::move(pred))});
    }

    SqlAst condition_ast(const Condition& cond, size_t i) const {
        if (cond.atoms.empty() || cond.conjs.size() + 1 != cond.atoms.size())
            throw IncompleteAst();
        SqlAst atom = cond_atom_ast(cond.atoms[i]);
        if (i + 1 == cond.atoms.size())
            return make("condition", {"cond_atom"}, {box(std::move(atom))});
        return make(
            "condition", {"cond_atom", "conj_op", "condition"},
            {box(std::move(atom)),
             box(marker_wrap("conj_op", kConjNames[static_cast<int>(cond.conjs[i])])),
             box(condition_ast(cond, i + 1))});
    }

    SqlAst condition_clause(const char* head, const Condition& cond) const {
        return make(head, {"condition"}, {box(condition_ast(cond, 0))});
    }

    SqlAst query_ast(const SqlQuery& q) const {
        if (q.select.empty() || q.from_tables.empty()) throw IncompleteAst();

        std::vector<SqlAst> rest_sel;
        for (size_t i = 1; i < q.select.size(); ++i) rest_sel.push_back(sel_val_ast(q.select[i]));
        SqlAst select = make("select_clause", {"Distinct?", "sel_val", "sel_val*"},
                             {box(flag_opt("Distinct", q.distinct)),
                              box(sel_val_ast(q.select[0])),
                              box(node_list("sel_val", std::move(rest_sel)))});

        SqlAst tables = make("TABLE*", {}, {});
        for (size_t i = q.from_tables.size(); i-- > 1;)
            tables = make("TABLE*", {"TABLE", "TABLE*"},
                          {TableRef{q.from_tables[i]}, box(std::move(tables))});
        SqlAst from = make("from_clause", {"TABLE", "TABLE*"},
                           {TableRef{q.from_tables[0]}, box(std::move(tables))});

        std::optional<SqlAst> where;
        if (q.where) where = condition_clause("where_clause", *q.where);

        std::optional<SqlAst> group;
        if (!q.group_by.empty()) {
            SqlAst cols = make("COLUMN*", {}, {});
            for (size_t i = q.group_by.size(); i-- > 1;)
                cols = make("COLUMN*", {"COLUMN", "COLUMN*"},
                            {ColumnRef{q.group_by[i]}, box(std::move(cols))});
            std::optional<SqlAst> having;
            if (q.having) having = condition_clause("having_clause", *q.having);
            group = make("group_clause", {"COLUMN", "COLUMN*", "having_clause?"},
                         {ColumnRef{q.group_by[0]}, box(std::move(cols)),
                          box(node_opt("having_clause", std::move(having)))});
        } else if (q.having) {
            throw GrammarError("HAVING without GROUP BY is not representable");
        }

        std::optional<SqlAst> order;
        if (!q.order_by.empty()) {
            auto key_ast = [&](const OrderKey& k) {
                return make("order_key", {"sel_val", "SortDesc?"},
                            {box(sel_val_ast(k.val)), box(flag_opt("SortDesc", k.desc))});
            };
            std::vector<SqlAst> rest_keys;
            for (size_t i = 1; i < q.order_by.size(); ++i)
                rest_keys.push_back(key_ast(q.order_by[i]));
            order = make("order_clause", {"order_key", "order_key*"},
                         {box(key_ast(q.order_by[0])),
                          box(node_list("order_key", std::move(rest_keys)))});
        }

        std::optional<SqlAst> limit;
        if (q.limit) limit = make("limit_clause", {"VALUE"}, {ValueLiteral{*q.limit}});

        std::optional<SqlAst> setop;
        if (q.setop) {
            if (!q.setop_right) throw IncompleteAst();
            setop = make(
                "setop_clause", {"setop_kind", "query"},
                {box(marker_wrap("setop_kind", kSetOpNames[static_cast<int>(*q.setop)])),
                 box(query_ast(*q.setop_right))});
        }

        return make("query",
                    {"select_clause", "from_clause", "where_clause?", "group_clause?",
                     "order_clause?", "limit_clause?", "setop_clause?"},
                    {box(std::move(select)), box(std::move(from)),
                     box(node_opt("where_clause", std::move(where))),
                     box(node_opt("group_clause", std::move(group))),
                     box(node_opt("order_clause", std::move(order))),
                     box(node_opt("limit_clause", std::move(limit))),
                     box(node_opt("setop_clause", std::move(setop)))});
    }
};

// ---- AST -> IR ---------------------------------------------------------------

struct AstReader {
    const GrammarSpec& g;

    explicit AstReader(const SqlGrammar& grammar) : g(grammar.grammar()) {}

    std::string head_name(const SqlAst& n) const {
        if (n.node_type < 0 || n.node_type >= g.num_nonterminals())
            throw GrammarError("node with unknown nonterminal id");
        return g.nonterminal_name(n.node_type);
    }
    void expect_head(const SqlAst& n, const std::string& name) const {
        if (head_name(n) != name)
            throw GrammarError("expected " + name + " node, got " + head_name(n));
    }

    const SqlAst& child_node(const SqlAst& n, size_t i) const {
        if (i >= n.children.size()) throw IncompleteAst();
        const auto* b = std::get_if<Box<SqlAst>>(&n.children[i]);
        if (!b || !*b) throw IncompleteAst();
        return **b;
    }
    int child_column(const SqlAst& n, size_t i) const {
        if (i >= n.children.size()) throw IncompleteAst();
        const auto* c = std::get_if<ColumnRef>(&n.children[i]);
        if (!c) throw IncompleteAst();
        return c->index;
    }
    int child_table(const SqlAst& n, size_t i) const {
        if (i >= n.children.size()) throw IncompleteAst();
        const auto* t = std::get_if<TableRef>(&n.children[i]);
        if (!t) throw IncompleteAst();
        return t->index;
    }
    const ValueLiteral& child_value(const SqlAst& n, size_t i) const {
        if (i >= n.children.size()) throw IncompleteAst();
        const auto* v = std::get_if<ValueLiteral>(&n.children[i]);
        if (!v) throw IncompleteAst();
        return *v;
    }

    bool read_flag(const SqlAst& aux) const { return !aux.children.empty(); }
    const SqlAst* read_opt(const SqlAst& aux) const {
        if (aux.children.empty()) return nullptr;
        return &child_node(aux, 0);
    }
    // walks a cons chain of node children (`head:base tail:base*`)
    std::vector<const SqlAst*> read_node_list(const SqlAst& aux) const {
        std::vector<const SqlAst*> out;
        const SqlAst* cur = &aux;
        while (!cur->children.empty()) {
            if (cur->children.size() != 2) throw IncompleteAst();
            out.push_back(&child_node(*cur, 0));
            cur = &child_node(*cur, 1);
        }
        return out;
    }

    template <typename Enum, size_t N>
    Enum read_marker(const SqlAst& wrap, const char* const (&names)[N]) const {
        return enum_of<Enum>(names, head_name(child_node(wrap, 0)));
    }

    ValUnit read_val_unit(const SqlAst& n) const {
        expect_head(n, "val_unit");
        ValUnit u;
        u.distinct = read_flag(child_node(n, 0));
        u.column = child_column(n, 1);
        return u;
    }
    ValExpr read_val_expr(const SqlAst& n) const {
        expect_head(n, "val_expr");
        ValExpr e;
        e.left = read_val_unit(child_node(n, 0));
        if (n.children.size() == 3) {
            e.op = read_marker<ArithOp>(child_node(n, 1), kArithNames);
            e.right = read_val_unit(child_node(n, 2));
        }
        return e;
    }
    SelVal read_sel_val(const SqlAst& n) const {
        expect_head(n, "sel_val");
        SelVal sv;
        if (n.children.size() == 2) {
            sv.agg = read_marker<AggOp>(child_node(n, 0), kAggNames);
            sv.expr = read_val_expr(child_node(n, 1));
        } else {
            sv.expr = read_val_expr(child_node(n, 0));
        }
        return sv;
    }

    Operand read_operand(const SqlAst& n) const {
        expect_head(n, "operand");
        Operand op;
        if (n.children.empty()) throw IncompleteAst();
        if (const auto* v = std::get_if<ValueLiteral>(&n.children[0])) {
            op.kind = Operand::Kind::Value;
            op.value_tokens = v->tokens;
            return op;
        }
        const SqlAst& inner = child_node(n, 0);
        if (head_name(inner) == "query") {
            op.kind = Operand::Kind::Subquery;
            op.subquery = Box<SqlQuery>(read_query(inner));
        } else {
            op.kind = Operand::Kind::Column;
            op.unit = read_val_unit(inner);
        }
        return op;
    }

    CondAtom read_cond_atom(const SqlAst& n) const {
        expect_head(n, "cond_atom");
        CondAtom atom;
        atom.negated = read_flag(child_node(n, 0));
        atom.lhs = read_sel_val(child_node(n, 1));
        const SqlAst& pred = child_node(n, 2);
        expect_head(pred, "predicate");
        const SqlAst& first = child_node(pred, 0);
        std::string kind = head_name(first);
        if (kind == "cmp_op") {
            atom.pred = PredKind::Cmp;
            atom.cmp = read_marker<CmpOp>(first, kCmpNames);
            atom.rhs = read_operand(child_node(pred, 1));
        } else if (kind == "PredBetween") {
            atom.pred = PredKind::Between;
            atom.lo = read_operand(child_node(pred, 1));
            atom.hi = read_operand(child_node(pred, 2));
        } else if (kind == "PredIn") {
            atom.pred = PredKind::In;
            atom.in_subquery = Box<SqlQuery>(read_query(child_node(pred, 1)));
        } else if (kind == "PredLike") {
            atom.pred = PredKind::Like;
            atom.rhs = read_operand(child_node(pred, 1));
        } else {
            throw GrammarError("unexpected predicate head " + kind);
        }
        return atom;
    }

    Condition read_condition(const SqlAst& n) const {
        expect_head(n, "condition");
        Condition cond;
        const SqlAst* cur = &n;
        while (true) {
            cond.atoms.push_back(read_cond_atom(child_node(*cur, 0)));
            if (cur->children.size() == 1) break;
            cond.conjs.push_back(read_marker<ConjOp>(child_node(*cur, 1), kConjNames));
            cur = &child_node(*cur, 2);
            expect_head(*cur, "condition");
        }
        return cond;
    }

    SqlQuery read_query(const SqlAst& n) const {
        expect_head(n, "query");
        SqlQuery q;

        const SqlAst& select = child_node(n, 0);
        expect_head(select, "select_clause");
        q.distinct = read_flag(child_node(select, 0));
        q.select.push_back(read_sel_val(child_node(select, 1)));
        for (const SqlAst* sv : read_node_list(child_node(select, 2)))
            q.select.push_back(read_sel_val(*sv));

        const SqlAst& from = child_node(n, 1);
        expect_head(from, "from_clause");
        q.from_tables.push_back(child_table(from, 0));
        const SqlAst* cur = &child_node(from, 1);
        while (!cur->children.empty()) {
            q.from_tables.push_back(child_table(*cur, 0));
            cur = &child_node(*cur, 1);
        }

        if (const SqlAst* w = read_opt(child_node(n, 2)))
            q.where = read_condition(child_node(*w, 0));

        if (const SqlAst* grp = read_opt(child_node(n, 3))) {
            expect_head(*grp, "group_clause");
            q.group_by.push_back(child_column(*grp, 0));
            const SqlAst* gc = &child_node(*grp, 1);
            while (!gc->children.empty()) {
                q.group_by.push_back(child_column(*gc, 0));
                gc = &child_node(*gc, 1);
            }
            if (const SqlAst* h = read_opt(child_node(*grp, 2)))
                q.having = read_condition(child_node(*h, 0));
        }

        if (const SqlAst* ord = read_opt(child_node(n, 4))) {
            expect_head(*ord, "order_clause");
            auto read_key = [&](const SqlAst& k) {
                expect_head(k, "order_key");
                OrderKey key;
                key.val = read_sel_val(child_node(k, 0));
                key.desc = read_flag(child_node(k, 1));
                return key;
            };
            q.order_by.push_back(read_key(child_node(*ord, 0)));
            for (const SqlAst* k : read_node_list(child_node(*ord, 1)))
                q.order_by.push_back(read_key(*k));
        }

        if (const SqlAst* lim = read_opt(child_node(n, 5)))
            q.limit = child_value(*lim, 0).tokens;

        if (const SqlAst* so = read_opt(child_node(n, 6))) {
            expect_head(*so, "setop_clause");
            q.setop = read_marker<SetOpKind>(child_node(*so, 0), kSetOpNames);
            q.setop_right = Box<SqlQuery>(read_query(child_node(*so, 1)));
        }
        return q;
    }
};

}  // namespace

SqlAst query_to_ast(const SqlQuery& query, const SqlGrammar& sg) {
    return AstBuilder(sg).query_ast(query);
}

SqlQuery ast_to_query(const SqlAst& ast, const SqlGrammar& sg) {
    return AstReader(sg).read_query(ast);
}

}  // namespace gpsql
