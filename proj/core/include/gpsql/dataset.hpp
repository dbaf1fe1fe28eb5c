#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpsql/ast.hpp"
#include "gpsql/grammar.hpp"
#include "gpsql/link.hpp"
#include "gpsql/schema.hpp"

namespace gpsql {

/// One example as it appears on disk.
struct RawExample {
    std::string db_id;
    std::string question;
    std::string query;

    bool operator==(const RawExample&) const = default;
};

/// Parses a JSON array of {db_id, question, query} records.
/// Throws FileNotFound / MalformedInput.
std::vector<RawExample> load_examples_file(const std::string& path);

/// One example after tokenization, value linking, serialization, and gold
/// linearization — everything the trainer needs.
struct PreparedExample {
    std::string db_id;
    std::string question;
    std::string gold_sql;
    std::vector<std::string> question_tokens;
    LinkedSequence seq;
    std::vector<Action> gold;
    LegalContext ctx;
};

/// A loaded dataset: schemas, per-database content, and prepared examples.
/// Examples whose gold query cannot be parsed or linearized are excluded and
/// reported in `skipped`, one human-readable line each.
struct DatasetBundle {
    std::vector<Schema> schemas;
    std::map<std::string, DbContent> content;  // only databases with a dump
    std::vector<PreparedExample> examples;
    std::vector<std::string> skipped;

    int loaded() const { return static_cast<int>(examples.size()); }
    int excluded() const { return static_cast<int>(skipped.size()); }
};

/// Loads "<dir>/<db_id>.json" for every schema that has one; an empty dir
/// loads nothing. Throws MalformedInput on unreadable dumps.
std::map<std::string, DbContent> load_content_dir(const std::vector<Schema>& schemas,
                                                  const std::string& dir);

/// Loads schemas + examples (+ optional per-database content dumps named
/// "<dir>/<db_id>.json") and prepares every example against `grammar`.
/// An example naming a db_id absent from the tables file is a hard error
/// (MalformedInput); a gold query that fails to parse or linearize only
/// excludes that example. Throws FileNotFound / MalformedInput.
DatasetBundle ingest(const std::string& tables_path, const std::string& examples_path,
                     const GrammarSpec& grammar, const std::string& content_dir = "");

/// Prepares one raw example against an already-loaded schema set. Throws
/// MalformedInput for an unknown db_id and propagates parse/linearization
/// errors (SqlSyntaxError, ValueNotCopyable, ...) for the caller to handle.
PreparedExample prepare_example(const RawExample& raw, const std::vector<Schema>& schemas,
                                const std::map<std::string, DbContent>& content,
                                const GrammarSpec& grammar);

}  // namespace gpsql
