#pragma once

#include <string>
#include <vector>

namespace gpsql {

/// Field kinds a production can expand into. Optional (`Kind?`) and sequence
/// (`Kind*`) wrappers in the grammar file are desugared into auxiliary
/// nonterminals at load time, so a loaded grammar only contains these.
enum class TerminalKind { Column, Table, Value };

struct FieldKind {
    bool terminal = false;
    TerminalKind term = TerminalKind::Column;
    int nonterminal = -1;  // valid when !terminal

    bool operator==(const FieldKind&) const = default;
};

struct Field {
    std::string name;
    FieldKind kind;
};

struct Production {
    int id = -1;
    int head = -1;  // nonterminal index
    std::vector<Field> fields;
};

/// A context-free grammar over typed fields. Immutable after load.
///
/// File format: one production per line, `Head -> field:Kind field:Kind ...`,
/// `#` comments. `Kind` is a nonterminal name, COLUMN, TABLE, or VALUE, with
/// an optional trailing `?` (optional) or `*` (zero-or-more). The head of the
/// first production is the root.
class GrammarSpec {
  public:
    static GrammarSpec parse(const std::string& text);

    int root() const { return root_; }
    int num_nonterminals() const { return static_cast<int>(nt_names_.size()); }
    int num_productions() const { return static_cast<int>(productions_.size()); }
    const std::string& nonterminal_name(int nt) const { return nt_names_[nt]; }
    int nonterminal_id(const std::string& name) const;  // -1 when absent
    const Production& production(int id) const { return productions_[id]; }
    const std::vector<int>& productions_of(int nt) const { return by_head_[nt]; }
    const std::vector<Production>& productions() const { return productions_; }

    /// Node-type vocabulary for embeddings: one id per nonterminal followed by
    /// one per terminal kind (COLUMN, TABLE, VALUE).
    int num_field_kinds() const { return num_nonterminals() + 3; }
    int field_kind_id(const FieldKind& k) const;

    /// Production lookup by head name and field-kind names (terminals are
    /// "COLUMN"/"TABLE"/"VALUE"). Throws GrammarError when absent/ambiguous.
    int find_production(const std::string& head,
                        const std::vector<std::string>& field_kinds) const;

    std::string describe_production(int id) const;

  private:
    std::vector<std::string> nt_names_;
    std::vector<Production> productions_;
    std::vector<std::vector<int>> by_head_;
    int root_ = -1;

    friend class GrammarBuilder;
};

}  // namespace gpsql
