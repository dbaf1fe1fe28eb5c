#include "gpsql/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "gpsql/errors.hpp"
#include "gpsql/tokenize.hpp"

namespace gpsql {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput(path, e.what());
    }
    return j;
}

}  // namespace

int Schema::table_index(const std::string& original_name) const {
    std::string want = lower(original_name);
    for (size_t i = 0; i < tables.size(); ++i)
        if (lower(tables[i].original) == want) return static_cast<int>(i);
    return -1;
}

int Schema::column_index(int table, const std::string& original_name) const {
    std::string want = lower(original_name);
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].table == table && lower(columns[i].original) == want)
            return static_cast<int>(i);
    return -1;
}

Schema load_schema(const nlohmann::json& record) {
    auto need = [&](const char* key) -> const nlohmann::json& {
        auto it = record.find(key);
        if (it == record.end()) throw MalformedSchema(std::string("missing field '") + key + "'");
        return *it;
    };

    Schema s;
    if (!need("db_id").is_string()) throw MalformedSchema("db_id must be a string");
    s.db_id = record["db_id"].get<std::string>();

    for (const auto& t : need("table_names_original")) {
        if (!t.is_string()) throw MalformedSchema("table name must be a string");
        SchemaTable table;
        table.original = t.get<std::string>();
        table.name_tokens = tokenize_name(table.original);
        s.tables.push_back(std::move(table));
    }

    const auto& cols = need("column_names_original");
    const auto& types = need("column_types");
    if (types.size() != cols.size())
        throw MalformedSchema("column_types length differs from column list");
    for (size_t i = 0; i < cols.size(); ++i) {
        const auto& entry = cols[i];
        if (!entry.is_array() || entry.size() != 2)
            throw MalformedSchema("column entry must be [table_index, name]");
        SchemaColumn c;
        c.table = entry[0].get<int>();
        c.original = entry[1].get<std::string>();
        c.name_tokens = tokenize_name(c.original);
        c.type = types[i].is_string() ? types[i].get<std::string>() : "text";
        if (c.table < -1 || c.table >= s.num_tables())
            throw MalformedSchema("column '" + c.original + "' has table index out of range");
        s.columns.push_back(std::move(c));
    }
    if (s.columns.empty() || s.columns[0].table != -1)
        throw MalformedSchema("column 0 must be the star column with table -1");
    for (size_t i = 1; i < s.columns.size(); ++i)
        if (s.columns[i].table < 0)
            throw MalformedSchema("only column 0 may lack a parent table");

    if (auto it = record.find("primary_keys"); it != record.end()) {
        for (const auto& pk : *it) {
            int col = pk.get<int>();
            if (col <= 0 || col >= s.num_columns())
                throw MalformedSchema("primary key index out of range");
            s.primary_keys.push_back(col);
        }
    }
    if (auto it = record.find("foreign_keys"); it != record.end()) {
        for (const auto& fk : *it) {
            if (!fk.is_array() || fk.size() != 2)
                throw MalformedSchema("foreign key entry must be [column, ref_column]");
            ForeignKey f{fk[0].get<int>(), fk[1].get<int>()};
            if (f.column <= 0 || f.column >= s.num_columns() || f.ref_column <= 0 ||
                f.ref_column >= s.num_columns())
                throw MalformedSchema("foreign key index out of range");
            if (s.columns[f.column].table == s.columns[f.ref_column].table)
                throw MalformedSchema("foreign key endpoints must lie in distinct tables");
            s.foreign_keys.push_back(f);
        }
    }
    return s;
}

std::vector<Schema> load_tables_file(const std::string& path) {
    nlohmann::json j = parse_json_file(path);
    if (!j.is_array()) throw MalformedInput(path, "tables file must be a JSON array");
    std::vector<Schema> out;
    out.reserve(j.size());
    for (const auto& record : j) out.push_back(load_schema(record));
    return out;
}

const Schema& find_schema(const std::vector<Schema>& schemas, const std::string& db_id) {
    for (const auto& s : schemas)
        if (s.db_id == db_id) return s;
    throw UnknownIdentifier(db_id);
}

void DbContent::add_cell(int column, const std::string& raw) {
    if (column < 0 || column >= num_columns())
        throw IndexOutOfRange("column " + std::to_string(column) + " in content dump");
    auto& cells = by_column_[column];
    if (static_cast<int>(cells.size()) >= kMaxDistinctPerColumn) return;
    CellValue v;
    v.normalized = normalize_cell(raw);
    if (v.normalized.empty()) return;
    v.tokens = tokenize(v.normalized);
    for (const auto& existing : cells)
        if (existing.normalized == v.normalized) return;
    cells.push_back(std::move(v));
}

DbContent DbContent::from_json(const nlohmann::json& dump, const Schema& schema) {
    DbContent content(schema);
    if (!dump.is_object()) throw MalformedSchema("content dump must be a JSON object");
    for (const auto& [table_name, columns] : dump.items()) {
        int t = schema.table_index(table_name);
        if (t < 0) continue;  // stale dumps may carry extra tables
        if (!columns.is_object())
            throw MalformedSchema("content for table '" + table_name + "' must be an object");
        for (const auto& [column_name, values] : columns.items()) {
            int c = schema.column_index(t, column_name);
            if (c < 0) continue;
            if (!values.is_array())
                throw MalformedSchema("content for column '" + column_name +
                                      "' must be an array");
            for (const auto& v : values) {
                if (v.is_string())
                    content.add_cell(c, v.get<std::string>());
                else if (v.is_number_integer())
                    content.add_cell(c, std::to_string(v.get<long long>()));
                else if (v.is_number_float()) {
                    // format without trailing zeros so 98.0 and "98" coincide
                    double d = v.get<double>();
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.10g", d);
                    content.add_cell(c, buf);
                } else if (v.is_boolean()) {
                    content.add_cell(c, v.get<bool>() ? "1" : "0");
                }
                // null cells carry no content
            }
        }
    }
    return content;
}

DbContent DbContent::load(const std::string& path, const Schema& schema) {
    return from_json(parse_json_file(path), schema);
}

}  // namespace gpsql
