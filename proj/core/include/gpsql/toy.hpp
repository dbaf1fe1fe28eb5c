#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpsql/dataset.hpp"
#include "json.hpp"

namespace gpsql {

inline constexpr unsigned long long kToySeed = 940721;

/// A deterministic synthetic corpus: small multi-table schemas, per-database
/// cell content, and question/SQL pairs drawn from fixed template families.
/// Every literal in a query appears verbatim (and contiguously) in its
/// question, so gold queries always linearize.
struct ToyCorpus {
    nlohmann::json tables;                          // tables-file payload
    std::map<std::string, nlohmann::json> content;  // db_id -> content dump
    std::vector<RawExample> train;
    std::vector<RawExample> dev;
};

ToyCorpus generate_toy_corpus(unsigned long long seed = kToySeed);

/// Writes tables.json, train.json, dev.json, and db_content/<db_id>.json
/// under `dir`, creating directories as needed. Throws FileNotFound when a
/// file cannot be opened for writing.
void write_toy_corpus(const ToyCorpus& corpus, const std::string& dir);

}  // namespace gpsql
