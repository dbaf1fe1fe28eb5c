#include "gpsql/grammar.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "gpsql/errors.hpp"

namespace gpsql {

namespace {

struct RawField {
    std::string name;
    std::string kind;  // may carry a trailing ? or *
};

struct RawProduction {
    std::string head;
    std::vector<RawField> fields;
    int line;
};

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return !std::isdigit(static_cast<unsigned char>(s[0]));
}

bool is_terminal_name(const std::string& s) {
    return s == "COLUMN" || s == "TABLE" || s == "VALUE";
}

TerminalKind terminal_of(const std::string& s) {
    if (s == "COLUMN") return TerminalKind::Column;
    if (s == "TABLE") return TerminalKind::Table;
    return TerminalKind::Value;
}

}  // namespace

class GrammarBuilder {
  public:
    GrammarSpec build(const std::vector<RawProduction>& raw) {
        GrammarSpec g;
        // pass 1: nonterminal ids for every head, in file order
        for (const auto& rp : raw) {
            if (nt_ids_.count(rp.head) == 0) {
                nt_ids_[rp.head] = static_cast<int>(g.nt_names_.size());
                g.nt_names_.push_back(rp.head);
            }
        }
        if (g.nt_names_.empty()) throw GrammarError("grammar has no productions");
        g.root_ = 0;

        // pass 2: explicit productions; wrappers recorded for desugaring
        for (const auto& rp : raw) {
            Production p;
            p.id = static_cast<int>(g.productions_.size());
            p.head = nt_ids_.at(rp.head);
            for (const auto& rf : rp.fields) {
                p.fields.push_back({rf.name, resolve_kind(g, rf.kind, rp.line)});
            }
            g.productions_.push_back(std::move(p));
        }

        // pass 3: auxiliary productions for ? and * wrappers, in first-use order
        for (const auto& [aux_nt, base] : pending_aux_) {
            const auto& [base_kind, star] = base;
            if (star) {
                Production cons;
                cons.id = static_cast<int>(g.productions_.size());
                cons.head = aux_nt;
                cons.fields.push_back({"head", base_kind});
                cons.fields.push_back({"tail", FieldKind{false, TerminalKind::Column, aux_nt}});
                g.productions_.push_back(std::move(cons));
            } else {
                Production some;
                some.id = static_cast<int>(g.productions_.size());
                some.head = aux_nt;
                some.fields.push_back({"value", base_kind});
                g.productions_.push_back(std::move(some));
            }
            Production nil;
            nil.id = static_cast<int>(g.productions_.size());
            nil.head = aux_nt;
            g.productions_.push_back(std::move(nil));
        }

        g.by_head_.assign(g.nt_names_.size(), {});
        for (const auto& p : g.productions_) g.by_head_[p.head].push_back(p.id);

        for (size_t nt = 0; nt < g.nt_names_.size(); ++nt) {
            if (g.by_head_[nt].empty())
                throw GrammarError("nonterminal '" + g.nt_names_[nt] + "' has no productions");
        }
        return g;
    }

  private:
    FieldKind resolve_kind(GrammarSpec& g, const std::string& kind_text, int line) {
        std::string base = kind_text;
        char wrapper = 0;
        if (!base.empty() && (base.back() == '?' || base.back() == '*')) {
            wrapper = base.back();
            base.pop_back();
        }
        FieldKind base_kind;
        if (is_terminal_name(base)) {
            base_kind = FieldKind{true, terminal_of(base), -1};
        } else {
            if (!valid_identifier(base))
                throw GrammarError("line " + std::to_string(line) + ": bad kind '" + kind_text + "'");
            auto it = nt_ids_.find(base);
            if (it == nt_ids_.end())
                throw GrammarError("line " + std::to_string(line) + ": nonterminal '" + base +
                                   "' is never defined");
            base_kind = FieldKind{false, TerminalKind::Column, it->second};
        }
        if (wrapper == 0) return base_kind;

        std::string aux_name = base + wrapper;
        auto it = nt_ids_.find(aux_name);
        if (it == nt_ids_.end()) {
            int id = static_cast<int>(g.nt_names_.size());
            nt_ids_[aux_name] = id;
            g.nt_names_.push_back(aux_name);
            pending_aux_.emplace_back(id, std::make_pair(base_kind, wrapper == '*'));
            it = nt_ids_.find(aux_name);
        }
        return FieldKind{false, TerminalKind::Column, it->second};
    }

    std::map<std::string, int> nt_ids_;
    std::vector<std::pair<int, std::pair<FieldKind, bool>>> pending_aux_;
};

GrammarSpec GrammarSpec::parse(const std::string& text) {
    std::vector<RawProduction> raw;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head, arrow;
        if (!(ls >> head)) continue;  // blank
        if (!(ls >> arrow) || arrow != "->")
            throw GrammarError("line " + std::to_string(lineno) + ": expected 'Head -> ...'");
        if (!valid_identifier(head) || is_terminal_name(head))
            throw GrammarError("line " + std::to_string(lineno) + ": bad head '" + head + "'");
        RawProduction rp;
        rp.head = head;
        rp.line = lineno;
        std::string item;
        while (ls >> item) {
            auto colon = item.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
                throw GrammarError("line " + std::to_string(lineno) + ": field '" + item +
                                   "' must be name:Kind");
            RawField rf{item.substr(0, colon), item.substr(colon + 1)};
            if (!valid_identifier(rf.name))
                throw GrammarError("line " + std::to_string(lineno) + ": bad field name '" +
                                   rf.name + "'");
            rp.fields.push_back(std::move(rf));
        }
        raw.push_back(std::move(rp));
    }
    GrammarBuilder b;
    return b.build(raw);
}

int GrammarSpec::nonterminal_id(const std::string& name) const {
    for (size_t i = 0; i < nt_names_.size(); ++i)
        if (nt_names_[i] == name) return static_cast<int>(i);
    return -1;
}

int GrammarSpec::field_kind_id(const FieldKind& k) const {
    if (!k.terminal) return k.nonterminal;
    return num_nonterminals() + static_cast<int>(k.term);
}

int GrammarSpec::find_production(const std::string& head,
                                 const std::vector<std::string>& field_kinds) const {
    int head_id = nonterminal_id(head);
    if (head_id < 0) throw GrammarError("no nonterminal '" + head + "'");
    int found = -1;
    for (int pid : by_head_[head_id]) {
        const auto& p = productions_[pid];
        if (p.fields.size() != field_kinds.size()) continue;
        bool ok = true;
        for (size_t i = 0; i < p.fields.size(); ++i) {
            const auto& k = p.fields[i].kind;
            const std::string want = field_kinds[i];
            if (k.terminal) {
                ok = (want == (k.term == TerminalKind::Column   ? "COLUMN"
                               : k.term == TerminalKind::Table  ? "TABLE"
                                                                : "VALUE"));
            } else {
                ok = (want == nt_names_[k.nonterminal]);
            }
            if (!ok) break;
        }
        if (ok) {
            if (found >= 0)
                throw GrammarError("ambiguous production lookup for '" + head + "'");
            found = pid;
        }
    }
    if (found < 0) throw GrammarError("no production '" + head + " -> ...' with that signature");
    return found;
}

std::string GrammarSpec::describe_production(int id) const {
    const auto& p = productions_[id];
    std::string s = nt_names_[p.head] + " ->";
    for (const auto& f : p.fields) {
        s += " " + f.name + ":";
        if (f.kind.terminal) {
            s += f.kind.term == TerminalKind::Column  ? "COLUMN"
                 : f.kind.term == TerminalKind::Table ? "TABLE"
                                                      : "VALUE";
        } else {
            s += nt_names_[f.kind.nonterminal];
        }
    }
    return s;
}

}  // namespace gpsql
