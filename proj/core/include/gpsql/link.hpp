#pragma once

#include <string>
#include <vector>

#include "gpsql/schema.hpp"

namespace gpsql {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";

enum class MatchGrade { Cem, Cpm };

/// A question span linked to a column through a cell value.
struct ValueMatch {
    int span_begin = 0;  // question token offsets, [begin, end)
    int span_end = 0;
    int column = -1;
    std::string cell;  // normalized cell value that matched
    MatchGrade grade = MatchGrade::Cem;

    bool operator==(const ValueMatch&) const = default;
};

/// For every question n-gram (n ≤ 6, longest first, non-overlapping per
/// column): exact-match when the span's tokens equal a cell's tokens,
/// part-match when they equal a strict contiguous part of a multi-token
/// cell. Result sorted by (column, span begin).
std::vector<ValueMatch> match_values(const std::vector<std::string>& question,
                                     const Schema& schema, const DbContent& content);

enum class SegmentKind { Question, Column, Value, Table, Separator };

struct Segment {
    SegmentKind kind = SegmentKind::Separator;
    int begin = 0;  // token offsets into LinkedSequence.tokens, [begin, end)
    int end = 0;
    int item = -1;  // column/table index for Column/Value/Table segments

    bool operator==(const Segment&) const = default;
};

/// The serialized question–schema sequence: question, then each column
/// (exact-matched cell values appended right after their column), then each
/// table, every region closed by a separator token.
struct LinkedSequence {
    std::vector<std::string> tokens;
    std::vector<Segment> segments;

    int size() const { return static_cast<int>(tokens.size()); }
    /// [begin, end) of the question tokens (sentinels excluded).
    std::pair<int, int> question_span() const;
    /// Spans owned by a column: its name segment plus appended value segments.
    std::vector<Segment> column_segments(int column) const;
    Segment table_segment(int table) const;

    /// Stable text form: joined tokens, then one line per segment.
    std::string dump() const;

    bool operator==(const LinkedSequence&) const = default;
};

/// Builds the serialized sequence. Only exact-grade matches append values.
LinkedSequence serialize(const std::vector<std::string>& question, const Schema& schema,
                         const std::vector<ValueMatch>& matches);

const char* to_string(SegmentKind kind);
const char* to_string(MatchGrade grade);

}  // namespace gpsql
