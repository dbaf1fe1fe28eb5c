#include "gpsql/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"
#include "gpsql/tokenize.hpp"
#include "json.hpp"

namespace gpsql {

std::vector<RawExample> load_examples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput(path, e.what());
    }
    if (!doc.is_array()) throw MalformedInput(path, "expected a JSON array of examples");
    std::vector<RawExample> out;
    out.reserve(doc.size());
    for (size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        if (!rec.is_object() || !rec.contains("db_id") || !rec.contains("question") ||
            !rec.contains("query") || !rec["db_id"].is_string() ||
            !rec["question"].is_string() || !rec["query"].is_string()) {
            throw MalformedInput(path, "example " + std::to_string(i) +
                                           " needs string fields db_id, question, query");
        }
        out.push_back({rec["db_id"].get<std::string>(), rec["question"].get<std::string>(),
                       rec["query"].get<std::string>()});
    }
    return out;
}

PreparedExample prepare_example(const RawExample& raw, const std::vector<Schema>& schemas,
                                const std::map<std::string, DbContent>& content,
                                const GrammarSpec& grammar) {
    const Schema* schema = nullptr;
    try {
        schema = &find_schema(schemas, raw.db_id);
    } catch (const UnknownIdentifier&) {
        throw MalformedInput(raw.db_id, "example references a db_id missing from the tables file");
    }

    PreparedExample ex;
    ex.db_id = raw.db_id;
    ex.question = raw.question;
    ex.gold_sql = raw.query;
    ex.question_tokens = tokenize(raw.question);

    std::vector<ValueMatch> matches;
    if (auto it = content.find(raw.db_id); it != content.end()) {
        matches = match_values(ex.question_tokens, *schema, it->second);
    }
    ex.seq = serialize(ex.question_tokens, *schema, matches);

    SqlAst ast = parse_sql(raw.query, *schema);
    ex.gold = ast_to_actions(ast, grammar, ex.question_tokens);
    ex.ctx = LegalContext{schema->num_columns(), schema->num_tables(),
                          static_cast<int>(ex.question_tokens.size()), DecodeMode::Normal};
    return ex;
}

std::map<std::string, DbContent> load_content_dir(const std::vector<Schema>& schemas,
                                                  const std::string& dir) {
    std::map<std::string, DbContent> content;
    if (dir.empty()) return content;
    for (const Schema& schema : schemas) {
        std::filesystem::path p = std::filesystem::path(dir) / (schema.db_id + ".json");
        if (std::filesystem::exists(p)) content.emplace(schema.db_id, DbContent::load(p.string(), schema));
    }
    return content;
}

DatasetBundle ingest(const std::string& tables_path, const std::string& examples_path,
                     const GrammarSpec& grammar, const std::string& content_dir) {
    DatasetBundle bundle;
    bundle.schemas = load_tables_file(tables_path);
    bundle.content = load_content_dir(bundle.schemas, content_dir);

    std::vector<RawExample> raws = load_examples_file(examples_path);
    bundle.examples.reserve(raws.size());
    for (size_t i = 0; i < raws.size(); ++i) {
        PreparedExample ex;
        try {
            ex = prepare_example(raws[i], bundle.schemas, bundle.content, grammar);
        } catch (const MalformedInput&) {
            throw;  // unknown db_id: the dataset itself is inconsistent
        } catch (const Error& e) {
            bundle.skipped.push_back("example " + std::to_string(i) + " (" + raws[i].db_id +
                                     "): " + e.what());
            continue;
        }
        bundle.examples.push_back(std::move(ex));
    }
    return bundle;
}

}  // namespace gpsql
