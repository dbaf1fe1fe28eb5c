#include "gpsql/canonical.hpp"

#include <algorithm>
#include <cstdio>

#include "gpsql/errors.hpp"
#include "gpsql/tokenize.hpp"

namespace gpsql {

namespace {

std::vector<std::string> canonical_tokens(const std::vector<std::string>& tokens,
                                          bool ignore_values) {
    if (ignore_values) return {"?"};
    return tokenize(normalize_cell(join_tokens(tokens)));
}

// ---- key serialization (deterministic, used both for output and sorting) ----

void write_query(std::string& out, const SqlQuery& q);

void write_unit(std::string& out, const ValUnit& u) {
    out += "u(";
    if (u.distinct) out += "d,";
    out += std::to_string(u.column);
    out += ")";
}
void write_expr(std::string& out, const ValExpr& e) {
    out += "e(";
    write_unit(out, e.left);
    if (e.op) {
        out += ",o" + std::to_string(static_cast<int>(*e.op)) + ",";
        write_unit(out, e.right);
    }
    out += ")";
}
void write_sel(std::string& out, const SelVal& sv) {
    out += "s(";
    if (sv.agg) out += "a" + std::to_string(static_cast<int>(*sv.agg)) + ",";
    write_expr(out, sv.expr);
    out += ")";
}
void write_operand(std::string& out, const Operand& op) {
    switch (op.kind) {
        case Operand::Kind::Value:
            out += "v'" + join_tokens(op.value_tokens) + "'";
            return;
        case Operand::Kind::Column:
            out += "c";
            write_unit(out, op.unit);
            return;
        case Operand::Kind::Subquery:
            if (!op.subquery) throw IncompleteAst();
            out += "sub";
            write_query(out, *op.subquery);
            return;
    }
}
void write_atom(std::string& out, const CondAtom& a) {
    out += "atom(";
    if (a.negated) out += "!";
    write_sel(out, a.lhs);
    out += ",p" + std::to_string(static_cast<int>(a.pred));
    switch (a.pred) {
        case PredKind::Cmp:
            out += ",m" + std::to_string(static_cast<int>(a.cmp)) + ",";
            write_operand(out, a.rhs);
            break;
        case PredKind::Between:
            out += ",";
            write_operand(out, a.lo);
            out += ",";
            write_operand(out, a.hi);
            break;
        case PredKind::In:
            if (!a.in_subquery) throw IncompleteAst();
            out += ",";
            write_query(out, *a.in_subquery);
            break;
        case PredKind::Like:
            out += ",";
            write_operand(out, a.rhs);
            break;
    }
    out += ")";
}
void write_condition(std::string& out, const Condition& c) {
    if (c.atoms.empty() || c.conjs.size() + 1 != c.atoms.size()) throw IncompleteAst();
    out += "cond(";
    write_atom(out, c.atoms[0]);
    for (size_t i = 0; i < c.conjs.size(); ++i) {
        out += c.conjs[i] == ConjOp::And ? "&" : "|";
        write_atom(out, c.atoms[i + 1]);
    }
    out += ")";
}
void write_query(std::string& out, const SqlQuery& q) {
    out += "q(";
    if (q.distinct) out += "d,";
    out += "sel[";
    for (size_t i = 0; i < q.select.size(); ++i) {
        if (i) out += ",";
        write_sel(out, q.select[i]);
    }
    out += "],from[";
    for (size_t i = 0; i < q.from_tables.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(q.from_tables[i]);
    }
    out += "]";
    if (q.where) {
        out += ",w";
        write_condition(out, *q.where);
    }
    if (!q.group_by.empty()) {
        out += ",g[";
        for (size_t i = 0; i < q.group_by.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(q.group_by[i]);
        }
        out += "]";
        if (q.having) {
            out += ",h";
            write_condition(out, *q.having);
        }
    }
    if (!q.order_by.empty()) {
        out += ",o[";
        for (size_t i = 0; i < q.order_by.size(); ++i) {
            if (i) out += ",";
            write_sel(out, q.order_by[i].val);
            if (q.order_by[i].desc) out += "D";
        }
        out += "]";
    }
    if (q.limit) out += ",l'" + join_tokens(*q.limit) + "'";
    if (q.setop) {
        if (!q.setop_right) throw IncompleteAst();
        out += ",x" + std::to_string(static_cast<int>(*q.setop));
        write_query(out, *q.setop_right);
    }
    out += ")";
}

std::string sel_key(const SelVal& sv) {
    std::string out;
    write_sel(out, sv);
    return out;
}
std::string atom_key(const CondAtom& a) {
    std::string out;
    write_atom(out, a);
    return out;
}

// ---- canonical transformation ------------------------------------------------

void canon_operand(Operand& op, bool ignore_values) {
    switch (op.kind) {
        case Operand::Kind::Value:
            op.value_tokens = canonical_tokens(op.value_tokens, ignore_values);
            break;
        case Operand::Kind::Column:
            break;
        case Operand::Kind::Subquery:
            if (!op.subquery) throw IncompleteAst();
            *op.subquery = canonical_ir(*op.subquery, ignore_values);
            break;
    }
}

void canon_condition(Condition& c, bool ignore_values) {
    if (c.atoms.empty() || c.conjs.size() + 1 != c.atoms.size()) throw IncompleteAst();
    for (CondAtom& a : c.atoms) {
        switch (a.pred) {
            case PredKind::Cmp:
            case PredKind::Like:
                canon_operand(a.rhs, ignore_values);
                break;
            case PredKind::Between:
                canon_operand(a.lo, ignore_values);
                canon_operand(a.hi, ignore_values);
                break;
            case PredKind::In:
                if (!a.in_subquery) throw IncompleteAst();
                *a.in_subquery = canonical_ir(*a.in_subquery, ignore_values);
                break;
        }
    }
    // only a uniform chain (all AND or all OR) commutes safely
    bool uniform = std::all_of(c.conjs.begin(), c.conjs.end(),
                               [&](ConjOp op) { return op == c.conjs.front(); });
    if (c.atoms.size() > 1 && uniform) {
        std::stable_sort(c.atoms.begin(), c.atoms.end(),
                         [](const CondAtom& x, const CondAtom& y) {
                             return atom_key(x) < atom_key(y);
                         });
    }
}

}  // namespace

SqlQuery canonical_ir(const SqlQuery& q, bool ignore_values) {
    if (q.select.empty() || q.from_tables.empty()) throw IncompleteAst();
    SqlQuery out = q;

    std::stable_sort(out.select.begin(), out.select.end(),
                     [](const SelVal& a, const SelVal& b) { return sel_key(a) < sel_key(b); });

    std::sort(out.from_tables.begin(), out.from_tables.end());
    out.from_tables.erase(std::unique(out.from_tables.begin(), out.from_tables.end()),
                          out.from_tables.end());

    if (out.where) canon_condition(*out.where, ignore_values);

    std::sort(out.group_by.begin(), out.group_by.end());
    out.group_by.erase(std::unique(out.group_by.begin(), out.group_by.end()),
                       out.group_by.end());
    if (out.having) {
        if (out.group_by.empty()) throw IncompleteAst();
        canon_condition(*out.having, ignore_values);
    }

    if (out.limit) out.limit = canonical_tokens(*out.limit, /*ignore_values=*/false);

    if (out.setop) {
        if (!out.setop_right) throw IncompleteAst();
        *out.setop_right = canonical_ir(*out.setop_right, ignore_values);
    } else {
        out.setop_right = Box<SqlQuery>();  // drop any dangling right side
    }
    return out;
}

CanonicalQuery canonicalize(const SqlQuery& q, bool ignore_values) {
    SqlQuery c = canonical_ir(q, ignore_values);
    CanonicalQuery out;
    write_query(out.key, c);
    return out;
}

CanonicalQuery canonicalize(const SqlAst& ast, const SqlGrammar& sg, bool ignore_values) {
    return canonicalize(ast_to_query(ast, sg), ignore_values);
}

bool exact_match_ir(const SqlQuery& pred, const SqlQuery& gold, bool ignore_values) {
    return canonicalize(pred, ignore_values) == canonicalize(gold, ignore_values);
}

bool exact_match(const SqlAst& pred, const SqlAst& gold, const SqlGrammar& sg,
                 bool ignore_values) {
    return canonicalize(pred, sg, ignore_values) == canonicalize(gold, sg, ignore_values);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json per;
    for (const auto& [db, tally] : per_db) {
        per[db] = {{"matched", tally.matched},
                   {"total", tally.total},
                   {"accuracy", tally.total ? double(tally.matched) / tally.total : 0.0}};
    }
    return {{"total", total},
            {"matched", matched},
            {"accuracy", accuracy},
            {"failed_parses", failed_parses},
            {"per_db", per}};
}

std::string EvalReport::summary() const {
    char head[96];
    std::snprintf(head, sizeof(head), "exact match: %d/%d = %.3f\n", matched, total, accuracy);
    std::string out = head;
    for (const auto& [db, tally] : per_db) {
        char line[128];
        std::snprintf(line, sizeof(line), "  %s: %d/%d = %.3f\n", db.c_str(), tally.matched,
                      tally.total, tally.total ? double(tally.matched) / tally.total : 0.0);
        out += line;
    }
    if (failed_parses) out += "unparsable predictions: " + std::to_string(failed_parses) + "\n";
    return out;
}

EvalReport evaluate(const std::vector<PredictedQuery>& predictions,
                    const std::vector<GoldExample>& gold, const std::vector<Schema>& schemas,
                    bool ignore_values) {
    if (predictions.size() != gold.size())
        throw IdMismatch("prediction count " + std::to_string(predictions.size()) +
                         " differs from gold count " + std::to_string(gold.size()));
    EvalReport report;
    report.total = static_cast<int>(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i].db_id != gold[i].db_id)
            throw IdMismatch("row " + std::to_string(i) + ": prediction db '" +
                             predictions[i].db_id + "' vs gold db '" + gold[i].db_id + "'");
        const Schema& schema = find_schema(schemas, gold[i].db_id);
        DbTally& tally = report.per_db[gold[i].db_id];
        ++tally.total;
        bool ok = false;
        try {
            SqlQuery p = parse_sql_text(predictions[i].sql, schema);
            SqlQuery g = parse_sql_text(gold[i].sql, schema);
            ok = exact_match_ir(p, g, ignore_values);
        } catch (const Error&) {
            ++report.failed_parses;
        }
        if (ok) {
            ++report.matched;
            ++tally.matched;
        }
    }
    report.accuracy = report.total ? double(report.matched) / report.total : 0.0;
    return report;
}

}  // namespace gpsql
