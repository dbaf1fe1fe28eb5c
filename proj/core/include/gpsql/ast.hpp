#pragma once

#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "gpsql/grammar.hpp"

namespace gpsql {

/// Copyable single-owner box; copies clone the pointee.
template <typename T>
class Box {
  public:
    Box() = default;
    explicit Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
    Box(const Box& o) : ptr_(o.ptr_ ? std::make_unique<T>(*o.ptr_) : nullptr) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& o) {
        ptr_ = o.ptr_ ? std::make_unique<T>(*o.ptr_) : nullptr;
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;
    explicit operator bool() const { return ptr_ != nullptr; }
    T& operator*() { return *ptr_; }
    const T& operator*() const { return *ptr_; }
    T* operator->() { return ptr_.get(); }
    const T* operator->() const { return ptr_.get(); }

  private:
    std::unique_ptr<T> ptr_;
};

template <typename T>
bool operator==(const Box<T>& a, const Box<T>& b) {
    if (static_cast<bool>(a) != static_cast<bool>(b)) return false;
    if (!a) return true;
    return *a == *b;
}

struct ColumnRef {
    int index = -1;
    bool operator==(const ColumnRef&) const = default;
};
struct TableRef {
    int index = -1;
    bool operator==(const TableRef&) const = default;
};
struct ValueLiteral {
    std::vector<std::string> tokens;
    bool operator==(const ValueLiteral&) const = default;
};

/// Typed syntax tree. children arity/kinds match the production's signature.
struct SqlAst {
    int node_type = -1;   // nonterminal id
    int production = -1;  // production id used to expand this node
    using Child = std::variant<Box<SqlAst>, ColumnRef, TableRef, ValueLiteral>;
    std::vector<Child> children;

    bool operator==(const SqlAst& o) const;
};

/// One decoder emission.
struct Action {
    enum class Tag { ApplyRule, SelectColumn, SelectTable, GenValue, GenValueEnd };
    Tag tag = Tag::ApplyRule;
    int index = 0;  // production id / column / table / question-token index

    static Action apply_rule(int production) { return {Tag::ApplyRule, production}; }
    static Action select_column(int col) { return {Tag::SelectColumn, col}; }
    static Action select_table(int tab) { return {Tag::SelectTable, tab}; }
    static Action gen_value(int question_token) { return {Tag::GenValue, question_token}; }
    static Action gen_value_end() { return {Tag::GenValueEnd, 0}; }

    bool operator==(const Action&) const = default;
};

std::string to_string(const Action& a, const GrammarSpec* g = nullptr);

enum class DecodeMode { Normal, Gp };

/// Counts the frontier needs to enumerate legal terminal actions.
struct LegalContext {
    int num_columns = 0;
    int num_tables = 0;
    int question_len = 0;
    DecodeMode mode = DecodeMode::Normal;
};

constexpr int kMaxActionLength = 200;

/// Incremental derivation: a partially built AST plus the stack of pending
/// fields. Pending entries remember which step expanded their parent.
class DerivationState {
  public:
    explicit DerivationState(const GrammarSpec& grammar);

    bool complete() const { return frontier_.empty() && !value_open_; }
    int steps() const { return static_cast<int>(trace_.size()); }

    /// Field kind awaiting expansion (grammar field-kind id). Throws
    /// CompleteDerivation when done.
    FieldKind expected_kind() const;
    /// Step index that expanded the pending field's parent node.
    int parent_step() const;
    /// Action taken at a given past step.
    const Action& action_at(int step) const { return trace_[step].action; }
    /// Parent step recorded for a given past step.
    int parent_step_at(int step) const { return trace_[step].parent; }

    /// Applies one action; throws IllegalAction on a grammar violation.
    void apply(const Action& a, const LegalContext& ctx);

    /// The finished tree. Throws IncompleteAst while fields are pending.
    SqlAst to_ast() const;

    const GrammarSpec& grammar() const { return *grammar_; }

  private:
    struct Node {
        int node_type = -1;
        int production = -1;
        std::vector<int> child_slots;  // arena ids or leaf markers, by field
    };
    struct Pending {
        int node;   // arena id of the parent node
        int field;  // field index within the parent's production
        int parent_step;
    };
    struct TraceEntry {
        Action action;
        int parent;
    };

    // leaf arena entries: kind + payload
    struct Leaf {
        enum class Kind { Column, Table, Value } kind;
        int index = -1;
        std::vector<int> value_tokens;  // question-token indices, in order
        bool value_ended = false;
    };

    SqlAst build(int arena_id) const;

    const GrammarSpec* grammar_;
    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
    std::vector<Pending> frontier_;  // stack; back is next
    std::vector<TraceEntry> trace_;
    int root_arena_ = -1;
    bool value_open_ = false;
    int open_value_leaf_ = -1;
    int open_value_parent_step_ = -1;
};

/// Pre-order linearization. `question` supplies token strings for GenValue
/// index lookup; literal tokens must occur contiguously in it.
std::vector<Action> ast_to_actions(const SqlAst& ast, const GrammarSpec& grammar,
                                   const std::vector<std::string>& question = {});

/// Inverse of ast_to_actions. Throws IllegalAction / TruncatedSequence /
/// TrailingActions. With an empty `question`, literal tokens keep
/// "@<index>" placeholders instead of resolved strings.
SqlAst actions_to_ast(const std::vector<Action>& actions, const GrammarSpec& grammar,
                      const std::vector<std::string>& question = {});

/// Actions legal at the current frontier, in canonical order (rules by id,
/// then columns/tables/tokens by index, GenValueEnd last).
std::vector<Action> legal_actions(const DerivationState& state, const LegalContext& ctx);

/// GP rewriting: column/table/value indices forced to 0; structure untouched.
std::vector<Action> gp_rewrite(const std::vector<Action>& actions);

/// Uniform random walk over legal actions. Returns the completed sequence;
/// aborts with TruncatedSequence when max_len steps pass without completion.
std::vector<Action> random_rollout(const GrammarSpec& grammar, const LegalContext& ctx,
                                   std::mt19937_64& rng, int max_len = kMaxActionLength);

}  // namespace gpsql
