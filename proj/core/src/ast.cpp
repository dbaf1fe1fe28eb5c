#include "gpsql/ast.hpp"

#include <limits>

#include "gpsql/errors.hpp"

namespace gpsql {

bool SqlAst::operator==(const SqlAst& o) const {
    return node_type == o.node_type && production == o.production && children == o.children;
}

std::string to_string(const Action& a, const GrammarSpec* g) {
    switch (a.tag) {
        case Action::Tag::ApplyRule:
            if (g) return "ApplyRule(" + g->describe_production(a.index) + ")";
            return "ApplyRule(" + std::to_string(a.index) + ")";
        case Action::Tag::SelectColumn:
            return "SelectColumn(" + std::to_string(a.index) + ")";
        case Action::Tag::SelectTable:
            return "SelectTable(" + std::to_string(a.index) + ")";
        case Action::Tag::GenValue:
            return "GenValue(" + std::to_string(a.index) + ")";
        case Action::Tag::GenValueEnd:
            return "GenValue(END)";
    }
    return "?";
}

namespace {
// child slot encoding: node arena ids are even, leaf arena ids odd
int encode_node(int id) { return id * 2; }
int encode_leaf(int id) { return id * 2 + 1; }
bool is_leaf_slot(int enc) { return (enc & 1) != 0; }
int decode(int enc) { return enc / 2; }
}  // namespace

DerivationState::DerivationState(const GrammarSpec& grammar) : grammar_(&grammar) {
    frontier_.push_back(Pending{-1, -1, -1});
}

FieldKind DerivationState::expected_kind() const {
    if (value_open_) return FieldKind{true, TerminalKind::Value, -1};
    if (frontier_.empty()) throw CompleteDerivation();
    const Pending& p = frontier_.back();
    if (p.node < 0) return FieldKind{false, TerminalKind::Column, grammar_->root()};
    const Production& prod = grammar_->production(nodes_[p.node].production);
    return prod.fields[p.field].kind;
}

int DerivationState::parent_step() const {
    if (value_open_) return open_value_parent_step_;
    if (frontier_.empty()) throw CompleteDerivation();
    return frontier_.back().parent_step;
}

void DerivationState::apply(const Action& a, const LegalContext& ctx) {
    const int t = steps();

    if (value_open_) {
        if (a.tag == Action::Tag::GenValue) {
            int limit = ctx.mode == DecodeMode::Gp ? 1 : ctx.question_len;
            if (a.index < 0 || a.index >= limit)
                throw IllegalAction(t, "value token index " + std::to_string(a.index) +
                                           " outside question of length " +
                                           std::to_string(limit));
            leaves_[open_value_leaf_].value_tokens.push_back(a.index);
            trace_.push_back({a, open_value_parent_step_});
            return;
        }
        if (a.tag == Action::Tag::GenValueEnd) {
            leaves_[open_value_leaf_].value_ended = true;
            trace_.push_back({a, open_value_parent_step_});
            value_open_ = false;
            open_value_leaf_ = -1;
            open_value_parent_step_ = -1;
            return;
        }
        throw IllegalAction(t, "open value literal expects GenValue or END, got " + to_string(a));
    }

    if (frontier_.empty()) throw IllegalAction(t, "derivation already complete");

    Pending pending = frontier_.back();
    FieldKind expected = expected_kind();

    auto attach = [&](int encoded) {
        if (pending.node >= 0) nodes_[pending.node].child_slots[pending.field] = encoded;
    };

    if (!expected.terminal) {
        if (a.tag != Action::Tag::ApplyRule)
            throw IllegalAction(t, "expected ApplyRule for '" +
                                       grammar_->nonterminal_name(expected.nonterminal) +
                                       "', got " + to_string(a));
        if (a.index < 0 || a.index >= grammar_->num_productions())
            throw IllegalAction(t, "production id out of range");
        const Production& prod = grammar_->production(a.index);
        if (prod.head != expected.nonterminal)
            throw IllegalAction(t, "production " + grammar_->describe_production(a.index) +
                                       " does not expand '" +
                                       grammar_->nonterminal_name(expected.nonterminal) + "'");
        frontier_.pop_back();
        Node node;
        node.node_type = prod.head;
        node.production = prod.id;
        node.child_slots.assign(prod.fields.size(), -1);
        int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        if (pending.node < 0) root_arena_ = node_id;
        attach(encode_node(node_id));
        // push fields right-to-left so the leftmost expands first
        for (int f = static_cast<int>(prod.fields.size()) - 1; f >= 0; --f)
            frontier_.push_back(Pending{node_id, f, t});
        trace_.push_back({a, pending.parent_step});
        return;
    }

    switch (expected.term) {
        case TerminalKind::Column: {
            if (a.tag != Action::Tag::SelectColumn)
                throw IllegalAction(t, "expected SelectColumn, got " + to_string(a));
            int limit = ctx.mode == DecodeMode::Gp ? 1 : ctx.num_columns;
            if (a.index < 0 || a.index >= limit)
                throw IllegalAction(t, "column index " + std::to_string(a.index) + " out of range");
            frontier_.pop_back();
            int leaf_id = static_cast<int>(leaves_.size());
            leaves_.push_back(Leaf{Leaf::Kind::Column, a.index, {}, true});
            attach(encode_leaf(leaf_id));
            trace_.push_back({a, pending.parent_step});
            return;
        }
        case TerminalKind::Table: {
            if (a.tag != Action::Tag::SelectTable)
                throw IllegalAction(t, "expected SelectTable, got " + to_string(a));
            int limit = ctx.mode == DecodeMode::Gp ? 1 : ctx.num_tables;
            if (a.index < 0 || a.index >= limit)
                throw IllegalAction(t, "table index " + std::to_string(a.index) + " out of range");
            frontier_.pop_back();
            int leaf_id = static_cast<int>(leaves_.size());
            leaves_.push_back(Leaf{Leaf::Kind::Table, a.index, {}, true});
            attach(encode_leaf(leaf_id));
            trace_.push_back({a, pending.parent_step});
            return;
        }
        case TerminalKind::Value: {
            if (a.tag != Action::Tag::GenValue && a.tag != Action::Tag::GenValueEnd)
                throw IllegalAction(t, "expected GenValue, got " + to_string(a));
            frontier_.pop_back();
            int leaf_id = static_cast<int>(leaves_.size());
            leaves_.push_back(Leaf{Leaf::Kind::Value, -1, {}, false});
            attach(encode_leaf(leaf_id));
            value_open_ = true;
            open_value_leaf_ = leaf_id;
            open_value_parent_step_ = pending.parent_step;
            if (a.tag == Action::Tag::GenValue) {
                int limit = ctx.mode == DecodeMode::Gp ? 1 : ctx.question_len;
                if (a.index < 0 || a.index >= limit)
                    throw IllegalAction(t, "value token index out of range");
                leaves_[leaf_id].value_tokens.push_back(a.index);
                trace_.push_back({a, pending.parent_step});
            } else {
                leaves_[leaf_id].value_ended = true;
                value_open_ = false;
                open_value_leaf_ = -1;
                open_value_parent_step_ = -1;
                trace_.push_back({a, pending.parent_step});
            }
            return;
        }
    }
}

SqlAst DerivationState::build(int arena_id) const {
    const Node& n = nodes_[arena_id];
    SqlAst ast;
    ast.node_type = n.node_type;
    ast.production = n.production;
    for (int slot : n.child_slots) {
        if (is_leaf_slot(slot)) {
            const Leaf& leaf = leaves_[decode(slot)];
            switch (leaf.kind) {
                case Leaf::Kind::Column:
                    ast.children.emplace_back(ColumnRef{leaf.index});
                    break;
                case Leaf::Kind::Table:
                    ast.children.emplace_back(TableRef{leaf.index});
                    break;
                case Leaf::Kind::Value: {
                    ValueLiteral v;
                    for (int idx : leaf.value_tokens)
                        v.tokens.push_back("@" + std::to_string(idx));
                    ast.children.emplace_back(std::move(v));
                    break;
                }
            }
        } else {
            ast.children.emplace_back(Box<SqlAst>(build(decode(slot))));
        }
    }
    return ast;
}

SqlAst DerivationState::to_ast() const {
    if (!complete()) throw IncompleteAst();
    return build(root_arena_);
}

namespace {

void resolve_literals(SqlAst& ast, const std::vector<std::string>& question) {
    for (auto& child : ast.children) {
        if (auto* v = std::get_if<ValueLiteral>(&child)) {
            for (auto& tok : v->tokens) {
                if (!tok.empty() && tok[0] == '@') {
                    int idx = std::stoi(tok.substr(1));
                    if (idx < 0 || idx >= static_cast<int>(question.size()))
                        throw IndexOutOfRange("value token " + std::to_string(idx) +
                                              " vs question length " +
                                              std::to_string(question.size()));
                    tok = question[idx];
                }
            }
        } else if (auto* b = std::get_if<Box<SqlAst>>(&child)) {
            resolve_literals(**b, question);
        }
    }
}

void linearize(const SqlAst& ast, const GrammarSpec& g,
               const std::vector<std::string>& question, std::vector<Action>& out) {
    if (ast.production < 0 || ast.production >= g.num_productions())
        throw GrammarError("AST node carries an unknown production id");
    const Production& prod = g.production(ast.production);
    if (prod.fields.size() != ast.children.size()) throw IncompleteAst();
    out.push_back(Action::apply_rule(ast.production));
    for (size_t i = 0; i < ast.children.size(); ++i) {
        const auto& child = ast.children[i];
        const FieldKind& k = prod.fields[i].kind;
        if (!k.terminal) {
            const auto* b = std::get_if<Box<SqlAst>>(&child);
            if (!b || !*b) throw IncompleteAst();
            if ((*b)->node_type != k.nonterminal)
                throw GrammarError("child node type does not match field kind");
            linearize(**b, g, question, out);
            continue;
        }
        switch (k.term) {
            case TerminalKind::Column: {
                const auto* c = std::get_if<ColumnRef>(&child);
                if (!c) throw IncompleteAst();
                out.push_back(Action::select_column(c->index));
                break;
            }
            case TerminalKind::Table: {
                const auto* tr = std::get_if<TableRef>(&child);
                if (!tr) throw IncompleteAst();
                out.push_back(Action::select_table(tr->index));
                break;
            }
            case TerminalKind::Value: {
                const auto* v = std::get_if<ValueLiteral>(&child);
                if (!v) throw IncompleteAst();
                // locate the literal as a contiguous question span
                if (!v->tokens.empty()) {
                    int found = -1;
                    const int q = static_cast<int>(question.size());
                    const int m = static_cast<int>(v->tokens.size());
                    for (int s = 0; s + m <= q && found < 0; ++s) {
                        bool ok = true;
                        for (int j = 0; j < m; ++j)
                            if (question[s + j] != v->tokens[j]) {
                                ok = false;
                                break;
                            }
                        if (ok) found = s;
                    }
                    if (found < 0) {
                        std::string joined;
                        for (const auto& tok : v->tokens) {
                            if (!joined.empty()) joined += ' ';
                            joined += tok;
                        }
                        throw ValueNotCopyable(joined);
                    }
                    for (int j = 0; j < m; ++j) out.push_back(Action::gen_value(found + j));
                }
                out.push_back(Action::gen_value_end());
                break;
            }
        }
    }
}

}  // namespace

std::vector<Action> ast_to_actions(const SqlAst& ast, const GrammarSpec& grammar,
                                   const std::vector<std::string>& question) {
    std::vector<Action> out;
    linearize(ast, grammar, question, out);
    return out;
}

SqlAst actions_to_ast(const std::vector<Action>& actions, const GrammarSpec& grammar,
                      const std::vector<std::string>& question) {
    DerivationState state(grammar);
    LegalContext ctx;
    // conversion validates structure, not schema bounds
    ctx.num_columns = std::numeric_limits<int>::max();
    ctx.num_tables = std::numeric_limits<int>::max();
    ctx.question_len = std::numeric_limits<int>::max();
    for (size_t i = 0; i < actions.size(); ++i) {
        if (state.complete()) throw TrailingActions(static_cast<int>(i));
        state.apply(actions[i], ctx);
    }
    if (!state.complete()) throw TruncatedSequence();
    SqlAst ast = state.to_ast();
    if (!question.empty()) resolve_literals(ast, question);
    return ast;
}

std::vector<Action> legal_actions(const DerivationState& state, const LegalContext& ctx) {
    if (state.complete()) throw CompleteDerivation();
    FieldKind k = state.expected_kind();
    std::vector<Action> out;
    if (!k.terminal) {
        for (int pid : state.grammar().productions_of(k.nonterminal))
            out.push_back(Action::apply_rule(pid));
        return out;
    }
    switch (k.term) {
        case TerminalKind::Column: {
            int n = ctx.mode == DecodeMode::Gp ? 1 : ctx.num_columns;
            for (int i = 0; i < n; ++i) out.push_back(Action::select_column(i));
            break;
        }
        case TerminalKind::Table: {
            int n = ctx.mode == DecodeMode::Gp ? 1 : ctx.num_tables;
            for (int i = 0; i < n; ++i) out.push_back(Action::select_table(i));
            break;
        }
        case TerminalKind::Value: {
            int n = ctx.mode == DecodeMode::Gp ? 1 : ctx.question_len;
            for (int i = 0; i < n; ++i) out.push_back(Action::gen_value(i));
            out.push_back(Action::gen_value_end());
            break;
        }
    }
    return out;
}

std::vector<Action> gp_rewrite(const std::vector<Action>& actions) {
    std::vector<Action> out;
    out.reserve(actions.size());
    for (const Action& a : actions) {
        switch (a.tag) {
            case Action::Tag::SelectColumn:
                out.push_back(Action::select_column(0));
                break;
            case Action::Tag::SelectTable:
                out.push_back(Action::select_table(0));
                break;
            case Action::Tag::GenValue:
                out.push_back(Action::gen_value(0));
                break;
            default:
                out.push_back(a);
        }
    }
    return out;
}

std::vector<Action> random_rollout(const GrammarSpec& grammar, const LegalContext& ctx,
                                   std::mt19937_64& rng, int max_len) {
    DerivationState state(grammar);
    std::vector<Action> out;
    while (!state.complete() && static_cast<int>(out.size()) < max_len) {
        std::vector<Action> legal = legal_actions(state, ctx);
        const Action& pick = legal[rng() % legal.size()];
        state.apply(pick, ctx);
        out.push_back(pick);
    }
    if (!state.complete()) throw TruncatedSequence();
    return out;
}

}  // namespace gpsql
