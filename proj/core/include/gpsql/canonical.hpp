#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpsql/sql.hpp"

namespace gpsql {

/// Deterministic canonical form of a query, compared for exact matching.
struct CanonicalQuery {
    std::string key;  // serialization of the canonical IR
    bool operator==(const CanonicalQuery&) const = default;
};

/// Canonical IR transformation: subqueries recursively canonicalized, literals
/// normalized, select items sorted (multiset semantics), FROM reduced to a
/// sorted set, uniform AND-only/OR-only conjunct chains sorted, GROUP BY a
/// sorted set. ORDER BY keeps its order; mixed AND/OR chains keep theirs.
/// ignore_values replaces comparison literals with "?" (LIMIT counts stay).
SqlQuery canonical_ir(const SqlQuery& q, bool ignore_values = false);

CanonicalQuery canonicalize(const SqlQuery& q, bool ignore_values = false);
CanonicalQuery canonicalize(const SqlAst& ast, const SqlGrammar& sg = SqlGrammar::standard(),
                            bool ignore_values = false);

bool exact_match_ir(const SqlQuery& pred, const SqlQuery& gold, bool ignore_values = false);
bool exact_match(const SqlAst& pred, const SqlAst& gold,
                 const SqlGrammar& sg = SqlGrammar::standard(), bool ignore_values = false);

struct DbTally {
    int matched = 0;
    int total = 0;
    bool operator==(const DbTally&) const = default;
};

struct EvalReport {
    int total = 0;
    int matched = 0;
    int failed_parses = 0;  // predictions (or gold rows) that did not parse
    double accuracy = 0.0;
    std::map<std::string, DbTally> per_db;

    nlohmann::json to_json() const;
    std::string summary() const;
};

struct PredictedQuery {
    std::string db_id;
    std::string sql;
};
struct GoldExample {
    std::string db_id;
    std::string sql;
};

/// Position-aligned scoring. A db_id disagreement at any position throws
/// IdMismatch; unparsable SQL on either side scores as a non-match.
EvalReport evaluate(const std::vector<PredictedQuery>& predictions,
                    const std::vector<GoldExample>& gold, const std::vector<Schema>& schemas,
                    bool ignore_values = false);

}  // namespace gpsql
