#include "gpsql/link.hpp"

#include <algorithm>

#include "gpsql/errors.hpp"
#include "gpsql/tokenize.hpp"

namespace gpsql {

namespace {

constexpr int kMaxNgram = 6;

bool span_equals(const std::vector<std::string>& q, int begin, int n,
                 const std::vector<std::string>& cell, int offset) {
    for (int j = 0; j < n; ++j)
        if (q[begin + j] != cell[offset + j]) return false;
    return true;
}

// exact: span tokens == cell tokens
const CellValue* find_exact(const std::vector<std::string>& q, int begin, int n,
                            const std::vector<CellValue>& cells) {
    for (const auto& cell : cells) {
        if (static_cast<int>(cell.tokens.size()) != n) continue;
        if (span_equals(q, begin, n, cell.tokens, 0)) return &cell;
    }
    return nullptr;
}

// part: span tokens form a strict contiguous run inside a longer cell
const CellValue* find_part(const std::vector<std::string>& q, int begin, int n,
                           const std::vector<CellValue>& cells) {
    for (const auto& cell : cells) {
        const int m = static_cast<int>(cell.tokens.size());
        if (m <= n) continue;
        for (int off = 0; off + n <= m; ++off)
            if (span_equals(q, begin, n, cell.tokens, off)) return &cell;
    }
    return nullptr;
}

}  // namespace

std::vector<ValueMatch> match_values(const std::vector<std::string>& question,
                                     const Schema& schema, const DbContent& content) {
    const int qlen = static_cast<int>(question.size());
    std::vector<ValueMatch> out;
    for (int c = 0; c < schema.num_columns() && c < content.num_columns(); ++c) {
        const auto& cells = content.cells(c);
        if (cells.empty()) continue;
        std::vector<bool> taken(question.size(), false);
        for (int n = std::min(kMaxNgram, qlen); n >= 1; --n) {
            for (int s = 0; s + n <= qlen; ++s) {
                bool overlap = false;
                for (int j = s; j < s + n; ++j)
                    if (taken[j]) {
                        overlap = true;
                        break;
                    }
                if (overlap) continue;
                const CellValue* cell = find_exact(question, s, n, cells);
                MatchGrade grade = MatchGrade::Cem;
                if (!cell) {
                    cell = find_part(question, s, n, cells);
                    grade = MatchGrade::Cpm;
                }
                if (!cell) continue;
                for (int j = s; j < s + n; ++j) taken[j] = true;
                out.push_back(ValueMatch{s, s + n, c, cell->normalized, grade});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const ValueMatch& a, const ValueMatch& b) {
        if (a.column != b.column) return a.column < b.column;
        return a.span_begin < b.span_begin;
    });
    return out;
}

LinkedSequence serialize(const std::vector<std::string>& question, const Schema& schema,
                         const std::vector<ValueMatch>& matches) {
    LinkedSequence seq;
    auto sep = [&] {
        int at = seq.size();
        seq.tokens.emplace_back(seq.tokens.empty() ? kBos : kEos);
        seq.segments.push_back(Segment{SegmentKind::Separator, at, at + 1, -1});
    };

    sep();  // <s>
    {
        int begin = seq.size();
        seq.tokens.insert(seq.tokens.end(), question.begin(), question.end());
        seq.segments.push_back(Segment{SegmentKind::Question, begin, seq.size(), -1});
    }
    sep();

    for (int c = 0; c < schema.num_columns(); ++c) {
        int begin = seq.size();
        const auto& name = schema.columns[c].name_tokens;
        seq.tokens.insert(seq.tokens.end(), name.begin(), name.end());
        seq.segments.push_back(Segment{SegmentKind::Column, begin, seq.size(), c});
        for (const auto& m : matches) {
            if (m.column != c || m.grade != MatchGrade::Cem) continue;
            int vbegin = seq.size();
            for (int j = m.span_begin; j < m.span_end; ++j) seq.tokens.push_back(question[j]);
            seq.segments.push_back(Segment{SegmentKind::Value, vbegin, seq.size(), c});
        }
        sep();
    }

    for (int t = 0; t < schema.num_tables(); ++t) {
        int begin = seq.size();
        const auto& name = schema.tables[t].name_tokens;
        seq.tokens.insert(seq.tokens.end(), name.begin(), name.end());
        seq.segments.push_back(Segment{SegmentKind::Table, begin, seq.size(), t});
        sep();
    }
    return seq;
}

std::pair<int, int> LinkedSequence::question_span() const {
    for (const auto& s : segments)
        if (s.kind == SegmentKind::Question) return {s.begin, s.end};
    return {0, 0};
}

std::vector<Segment> LinkedSequence::column_segments(int column) const {
    std::vector<Segment> out;
    for (const auto& s : segments)
        if ((s.kind == SegmentKind::Column || s.kind == SegmentKind::Value) && s.item == column)
            out.push_back(s);
    return out;
}

Segment LinkedSequence::table_segment(int table) const {
    for (const auto& s : segments)
        if (s.kind == SegmentKind::Table && s.item == table) return s;
    throw IndexOutOfRange("table " + std::to_string(table) + " has no segment");
}

const char* to_string(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::Question: return "question";
        case SegmentKind::Column: return "column";
        case SegmentKind::Value: return "value";
        case SegmentKind::Table: return "table";
        case SegmentKind::Separator: return "separator";
    }
    return "?";
}

const char* to_string(MatchGrade grade) {
    return grade == MatchGrade::Cem ? "exact" : "part";
}

std::string LinkedSequence::dump() const {
    std::string out = join_tokens(tokens);
    out += '\n';
    for (const auto& s : segments) {
        out += to_string(s.kind);
        out += ' ';
        out += std::to_string(s.begin);
        out += ' ';
        out += std::to_string(s.end);
        if (s.kind == SegmentKind::Column || s.kind == SegmentKind::Value ||
            s.kind == SegmentKind::Table) {
            out += ' ';
            out += std::to_string(s.item);
        }
        out += '\n';
    }
    return out;
}

}  // namespace gpsql
