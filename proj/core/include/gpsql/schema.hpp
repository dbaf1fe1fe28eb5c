#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gpsql {

struct SchemaTable {
    std::vector<std::string> name_tokens;
    std::string original;
};

struct SchemaColumn {
    int table = -1;  // -1 only for the star column
    std::vector<std::string> name_tokens;
    std::string original;
    std::string type;
};

struct ForeignKey {
    int column = -1;
    int ref_column = -1;
    bool operator==(const ForeignKey&) const = default;
};

/// One database schema. Column 0 is always the star column.
struct Schema {
    std::string db_id;
    std::vector<SchemaTable> tables;
    std::vector<SchemaColumn> columns;
    std::vector<int> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    int num_tables() const { return static_cast<int>(tables.size()); }
    int num_columns() const { return static_cast<int>(columns.size()); }

    /// Case-insensitive original-name lookups; -1 when absent.
    int table_index(const std::string& original_name) const;
    int column_index(int table, const std::string& original_name) const;
};

/// Parses one tables-file record: db_id, table_names_original,
/// column_names_original ([table, name] pairs), column_types, primary_keys,
/// foreign_keys ([col, ref] pairs). Throws MalformedSchema.
Schema load_schema(const nlohmann::json& record);

/// Loads a whole tables file (JSON array of records).
std::vector<Schema> load_tables_file(const std::string& path);

/// Throws UnknownIdentifier when the db_id is absent.
const Schema& find_schema(const std::vector<Schema>& schemas, const std::string& db_id);

/// One distinct cell value of some column, in matching form.
struct CellValue {
    std::string normalized;
    std::vector<std::string> tokens;
    bool operator==(const CellValue&) const = default;
};

/// Distinct cell values per column, loaded from a per-database JSON dump
/// {table: {column: [values]}}. Missing tables/columns mean no content.
class DbContent {
  public:
    static constexpr int kMaxDistinctPerColumn = 5000;

    DbContent() = default;
    explicit DbContent(const Schema& schema) : by_column_(schema.columns.size()) {}

    static DbContent load(const std::string& path, const Schema& schema);
    static DbContent from_json(const nlohmann::json& dump, const Schema& schema);

    const std::vector<CellValue>& cells(int column) const { return by_column_.at(column); }
    int num_columns() const { return static_cast<int>(by_column_.size()); }

    /// Adds one raw cell; normalizes, dedupes, and enforces the cap.
    void add_cell(int column, const std::string& raw);

  private:
    std::vector<std::vector<CellValue>> by_column_;
};

}  // namespace gpsql
