#include <string>

#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"
#include "gpsql/tokenize.hpp"

namespace gpsql {

namespace {

const char* agg_name(AggOp op) {
    switch (op) {
        case AggOp::Max: return "MAX";
        case AggOp::Min: return "MIN";
        case AggOp::Count: return "COUNT";
        case AggOp::Sum: return "SUM";
        case AggOp::Avg: return "AVG";
    }
    return "";
}

const char* arith_symbol(ArithOp op) {
    switch (op) {
        case ArithOp::Add: return "+";
        case ArithOp::Sub: return "-";
        case ArithOp::Mul: return "*";
        case ArithOp::Div: return "/";
    }
    return "";
}

const char* cmp_symbol(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Gt: return ">";
        case CmpOp::Lt: return "<";
        case CmpOp::Ge: return ">=";
        case CmpOp::Le: return "<=";
    }
    return "";
}

const char* setop_name(SetOpKind op) {
    switch (op) {
        case SetOpKind::Union: return "UNION";
        case SetOpKind::Intersect: return "INTERSECT";
        case SetOpKind::Except: return "EXCEPT";
    }
    return "";
}

struct Renderer {
    const Schema& schema;

    void check_column(int c) const {
        if (c < 0 || c >= schema.num_columns())
            throw IndexOutOfRange("column " + std::to_string(c));
    }
    void check_table(int t) const {
        if (t < 0 || t >= schema.num_tables())
            throw IndexOutOfRange("table " + std::to_string(t));
    }

    // qualify: qualify non-star columns with their table's original name
    std::string column_text(int c, bool qualify) const {
        check_column(c);
        const SchemaColumn& col = schema.columns[c];
        if (c == 0 || col.table < 0) return "*";
        if (!qualify) return col.original;
        return schema.tables[col.table].original + "." + col.original;
    }

    std::string val_unit_text(const ValUnit& u, bool qualify) const {
        std::string body = column_text(u.column, qualify);
        return u.distinct ? "DISTINCT " + body : body;
    }

    std::string val_expr_text(const ValExpr& e, bool qualify) const {
        std::string out = val_unit_text(e.left, qualify);
        if (e.op) {
            out += " ";
            out += arith_symbol(*e.op);
            out += " " + val_unit_text(e.right, qualify);
        }
        return out;
    }

    std::string sel_val_text(const SelVal& sv, bool qualify) const {
        if (!sv.agg) return val_expr_text(sv.expr, qualify);
        return std::string(agg_name(*sv.agg)) + "(" + val_expr_text(sv.expr, qualify) + ")";
    }

    std::string value_text(const std::vector<std::string>& tokens) const {
        std::string joined = join_tokens(tokens);
        if (tokens.size() == 1 && is_numeric_token(tokens[0])) return joined;
        return "'" + joined + "'";
    }

    std::string operand_text(const Operand& op, bool qualify) const {
        switch (op.kind) {
            case Operand::Kind::Value: return value_text(op.value_tokens);
            case Operand::Kind::Column: return val_unit_text(op.unit, qualify);
            case Operand::Kind::Subquery:
                if (!op.subquery) throw IncompleteAst();
                return "(" + render_query(*op.subquery, schema) + ")";
        }
        return "";
    }

    std::string cond_atom_text(const CondAtom& atom, bool qualify) const {
        std::string lhs = sel_val_text(atom.lhs, qualify);
        switch (atom.pred) {
            case PredKind::Cmp: {
                std::string body =
                    lhs + " " + cmp_symbol(atom.cmp) + " " + operand_text(atom.rhs, qualify);
                return atom.negated ? "NOT " + body : body;
            }
            case PredKind::Between:
                return lhs + (atom.negated ? " NOT" : "") + " BETWEEN " +
                       operand_text(atom.lo, qualify) + " AND " + operand_text(atom.hi, qualify);
            case PredKind::In:
                if (!atom.in_subquery) throw IncompleteAst();
                return lhs + (atom.negated ? " NOT" : "") + " IN (" +
                       render_query(*atom.in_subquery, schema) + ")";
            case PredKind::Like:
                return lhs + (atom.negated ? " NOT" : "") + " LIKE " +
                       operand_text(atom.rhs, qualify);
        }
        return "";
    }

    std::string condition_text(const Condition& cond, bool qualify) const {
        if (cond.atoms.empty() || cond.conjs.size() + 1 != cond.atoms.size())
            throw IncompleteAst();
        std::string out = cond_atom_text(cond.atoms[0], qualify);
        for (size_t i = 0; i < cond.conjs.size(); ++i) {
            out += cond.conjs[i] == ConjOp::And ? " AND " : " OR ";
            out += cond_atom_text(cond.atoms[i + 1], qualify);
        }
        return out;
    }

    // implicit join condition: first foreign key linking `t` to any earlier table
    std::string join_on_text(const std::vector<int>& earlier, int t) const {
        for (const ForeignKey& fk : schema.foreign_keys) {
            int ft = schema.columns[fk.column].table;
            int rt = schema.columns[fk.ref_column].table;
            for (int e : earlier) {
                if ((ft == t && rt == e) || (rt == t && ft == e)) {
                    return " ON " + column_text(fk.column, true) + " = " +
                           column_text(fk.ref_column, true);
                }
            }
        }
        return "";
    }

    std::string from_text(const SqlQuery& q) const {
        if (q.from_tables.empty()) throw IncompleteAst();
        check_table(q.from_tables[0]);
        std::string out = schema.tables[q.from_tables[0]].original;
        std::vector<int> earlier = {q.from_tables[0]};
        for (size_t i = 1; i < q.from_tables.size(); ++i) {
            int t = q.from_tables[i];
            check_table(t);
            out += " JOIN " + schema.tables[t].original;
            out += join_on_text(earlier, t);
            earlier.push_back(t);
        }
        return out;
    }

    std::string query_text(const SqlQuery& q) const {
        if (q.select.empty()) throw IncompleteAst();
        bool qualify = q.from_tables.size() > 1;
        std::string out = "SELECT ";
        if (q.distinct) out += "DISTINCT ";
        for (size_t i = 0; i < q.select.size(); ++i) {
            if (i) out += ", ";
            out += sel_val_text(q.select[i], qualify);
        }
        out += " FROM " + from_text(q);
        if (q.where) out += " WHERE " + condition_text(*q.where, qualify);
        if (!q.group_by.empty()) {
            out += " GROUP BY ";
            for (size_t i = 0; i < q.group_by.size(); ++i) {
                if (i) out += ", ";
                out += column_text(q.group_by[i], qualify);
            }
            if (q.having) out += " HAVING " + condition_text(*q.having, qualify);
        }
        if (!q.order_by.empty()) {
            out += " ORDER BY ";
            for (size_t i = 0; i < q.order_by.size(); ++i) {
                if (i) out += ", ";
                out += sel_val_text(q.order_by[i].val, qualify);
                if (q.order_by[i].desc) out += " DESC";
            }
        }
        if (q.limit) out += " LIMIT " + join_tokens(*q.limit);
        if (q.setop) {
            if (!q.setop_right) throw IncompleteAst();
            out += std::string(" ") + setop_name(*q.setop) + " " +
                   render_query(*q.setop_right, schema);
        }
        return out;
    }
};

}  // namespace

std::string render_query(const SqlQuery& query, const Schema& schema) {
    Renderer r{schema};
    return r.query_text(query);
}

}  // namespace gpsql
