#include "gpsql/toy.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <utility>

#include "gpsql/errors.hpp"

namespace gpsql {
namespace {

struct BpCol {
    const char* name;
    char kind;  // 'n' number, 't' text
};
struct BpTable {
    const char* name;
    std::vector<BpCol> cols;  // cols[0] is the primary key; in secondary
                              // tables cols[1] is the foreign key
};
struct Blueprint {
    const char* db_id;
    std::vector<BpTable> tables;
};

std::vector<Blueprint> blueprints() {
    auto n = [](const char* s) { return BpCol{s, 'n'}; };
    auto t = [](const char* s) { return BpCol{s, 't'}; };
    return {
        {"orchard",
         {{"farmers", {n("farmer_id"), t("farmer_name"), t("region"), n("acres")}},
          {"harvests", {n("harvest_id"), n("farmer_id"), t("fruit"), n("crates")}},
          {"orchards", {n("orchard_id"), n("farmer_id"), t("soil"), n("elevation")}}}},
        {"library",
         {{"authors", {n("author_id"), t("author_name"), t("homeland"), n("fame")}},
          {"books", {n("book_id"), n("author_id"), t("title"), n("pages")}}}},
        {"garage",
         {{"mechanics", {n("mechanic_id"), t("mechanic_name"), t("specialty"), n("wage")}},
          {"repairs", {n("repair_id"), n("mechanic_id"), t("vehicle"), n("cost")}}}},
        {"aquarium",
         {{"keepers", {n("keeper_id"), t("keeper_name"), t("section"), n("shift_hours")}},
          {"fish", {n("fish_id"), n("keeper_id"), t("species"), n("length")}}}},
        {"bakery",
         {{"bakers", {n("baker_id"), t("baker_name"), t("town"), n("experience")}},
          {"pastries", {n("pastry_id"), n("baker_id"), t("flavor"), n("price")}},
          {"ovens", {n("oven_id"), n("baker_id"), t("fuel"), n("capacity")}}}},
        {"observatory",
         {{"astronomers", {n("astronomer_id"), t("astronomer_name"), t("institute"), n("grants")}},
          {"discoveries", {n("discovery_id"), n("astronomer_id"), t("object_kind"), n("brightness")}}}},
        {"vineyard",
         {{"growers", {n("grower_id"), t("grower_name"), t("valley"), n("plots")}},
          {"wines", {n("wine_id"), n("grower_id"), t("grape"), n("rating")}}}},
        {"museum",
         {{"curators", {n("curator_id"), t("curator_name"), t("department"), n("tenure")}},
          {"exhibits", {n("exhibit_id"), n("curator_id"), t("theme"), n("visitors")}}}},
        {"harbor",
         {{"captains", {n("captain_id"), t("captain_name"), t("port"), n("voyages")}},
          {"ships", {n("ship_id"), n("captain_id"), t("ship_class"), n("tonnage")}},
          {"cargoes", {n("cargo_id"), n("captain_id"), t("goods"), n("containers")}}}},
        {"circus",
         {{"trainers", {n("trainer_id"), t("trainer_name"), t("troupe"), n("seasons")}},
          {"acts", {n("act_id"), n("trainer_id"), t("stunt"), n("duration")}}}},
        {"apiary",
         {{"beekeepers", {n("beekeeper_id"), t("beekeeper_name"), t("county"), n("hives")}},
          {"batches", {n("batch_id"), n("beekeeper_id"), t("honey_kind"), n("jars")}}}},
        {"workshop",
         {{"carpenters", {n("carpenter_id"), t("carpenter_name"), t("guild"), n("tools")}},
          {"furniture", {n("furniture_id"), n("carpenter_id"), t("wood"), n("weight")}}}},
        {"stadium",
         {{"coaches", {n("coach_id"), t("coach_name"), t("hometown"), n("titles")}},
          {"players", {n("player_id"), n("coach_id"), t("position"), n("goals")}},
          {"matches", {n("match_id"), n("coach_id"), t("venue"), n("attendance")}}}},
        {"cinema",
         {{"directors", {n("director_id"), t("director_name"), t("studio"), n("awards")}},
          {"films", {n("film_id"), n("director_id"), t("genre"), n("runtime")}}}},
        {"clinic",
         {{"doctors", {n("doctor_id"), t("doctor_name"), t("ward"), n("patients")}},
          {"treatments", {n("treatment_id"), n("doctor_id"), t("therapy"), n("sessions")}}}},
        {"orchestra",
         {{"conductors", {n("conductor_id"), t("conductor_name"), t("academy"), n("concerts")}},
          {"musicians", {n("musician_id"), n("conductor_id"), t("instrument"), n("salary")}}}},
        {"airline",
         {{"pilots", {n("pilot_id"), t("pilot_name"), t("base_city"), n("flight_hours")}},
          {"routes", {n("route_id"), n("pilot_id"), t("destination"), n("distance")}},
          {"aircraft", {n("aircraft_id"), n("pilot_id"), t("model_name"), n("seats")}}}},
        {"ranch",
         {{"ranchers", {n("rancher_id"), t("rancher_name"), t("home_state"), n("herds")}},
          {"cattle", {n("cattle_id"), n("rancher_id"), t("breed"), n("heft")}}}},
        {"bookshop",
         {{"clerks", {n("clerk_id"), t("clerk_name"), t("branch"), n("hours_worked")}},
          {"sales", {n("sale_id"), n("clerk_id"), t("category"), n("copies")}}}},
        {"arcade",
         {{"owners", {n("owner_id"), t("owner_name"), t("district"), n("machines")}},
          {"games", {n("game_id"), n("owner_id"), t("genre_tag"), n("score")}}}},
    };
}

// Single-token lowercase cell values, disjoint from every schema word so a
// value span in a question can only ever match cell content.
const std::vector<std::string>& word_bank() {
    static const std::vector<std::string> bank = {
        "amber",   "birch",   "coral",   "dusty",   "ember",    "fable",   "gorse",   "hazel",
        "iris",    "jade",    "kestrel", "lilac",   "maple",    "nutmeg",  "onyx",    "pearl",
        "quartz",  "rowan",   "sable",   "topaz",   "umber",    "violet",  "wren",    "yarrow",
        "zephyr",  "alder",   "basil",   "clover",  "dahlia",   "ebony",   "fennel",  "ginger",
        "heather", "indigo",  "juniper", "laurel",  "mango",    "nettle",  "olive",   "poppy",
        "quince",  "saffron", "thyme",   "vanilla", "walnut",   "yucca",   "zinnia",  "arno",
        "bruno",   "carla",   "dora",    "edgar",   "fiona",    "gustav",  "helga",   "ivan",
        "jonas",   "klara",   "lars",    "mira",    "nils",     "oskar",   "petra",   "quentin",
        "rosa",    "stefan",  "tilda",   "ulrich",  "vera",     "wilhelm", "xavier",  "yvonne",
        "zoltan",  "aksel",   "bianca",  "casper",  "dagmar",   "elias",   "freya",   "greta",
        "hugo",    "ines",    "jasper",  "katja",   "leif",     "marta",   "nora",    "otto",
        "paula",   "ragnar",  "sonja",   "teodor",  "ulla",     "viktor",  "wanda",   "ximena",
        "yann",    "zelda",   "arles",   "bergen",  "cadiz",    "dover",   "exeter",  "florence",
        "genoa",   "hamburg", "izmir",   "jaipur",  "kyoto",    "leiden",  "malmo",   "nantes",
        "oslo",    "porto",   "quito",   "rennes",  "seville",  "tromso",  "utrecht", "verona",
        "warsaw",  "xanten",  "york",    "zagreb",  "ames",     "boise",   "cairo",   "dakar",
        "enid",    "fargo",   "galway",  "havana",  "irvine",   "juneau",  "keene",   "lagos",
        "macon",   "nairobi", "ogden",   "provo",   "quimper",  "reno",    "salem",   "tacoma",
        "utica",   "vigo",    "waco",    "xalapa",  "yuma",     "zurich",  "bremen",  "cusco",
        "davos",   "espoo",   "gdansk",  "haarlem", "innsbruck", "jena",   "kiel",    "lucca",
    };
    return bank;
}

std::string spaced(const std::string& name) {
    std::string out = name;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

// One template argument: a payload column with its value pool.
struct ToyCol {
    std::string name;
    std::string words;
    char kind = 't';
    std::vector<std::string> pool;
};
struct ToyTable {
    std::string name;
    std::string words;
    std::vector<ToyCol> payload;
};
struct ToyDb {
    std::string db_id;
    std::vector<ToyTable> tables;
};

struct BuiltWorld {
    nlohmann::json tables = nlohmann::json::array();
    std::map<std::string, nlohmann::json> content;
    std::vector<ToyDb> dbs;
};

BuiltWorld build_world() {
    BuiltWorld world;
    int text_counter = 0;
    int num_counter = 0;
    const auto& bank = word_bank();

    for (const Blueprint& bp : blueprints()) {
        nlohmann::json rec;
        rec["db_id"] = bp.db_id;
        auto names = nlohmann::json::array();
        auto cols = nlohmann::json::array();
        auto types = nlohmann::json::array();
        auto pks = nlohmann::json::array();
        auto fks = nlohmann::json::array();
        cols.push_back({-1, "*"});
        types.push_back("text");

        ToyDb db;
        db.db_id = bp.db_id;
        nlohmann::json dump = nlohmann::json::object();

        int next_col = 1;
        int first_pk = -1;
        for (size_t ti = 0; ti < bp.tables.size(); ++ti) {
            const BpTable& bt = bp.tables[ti];
            names.push_back(bt.name);
            ToyTable table{bt.name, spaced(bt.name), {}};
            nlohmann::json table_dump = nlohmann::json::object();
            for (size_t ci = 0; ci < bt.cols.size(); ++ci) {
                const BpCol& bc = bt.cols[ci];
                cols.push_back({static_cast<int>(ti), bc.name});
                types.push_back(bc.kind == 'n' ? "number" : "text");
                int index = next_col++;
                if (ci == 0) {
                    pks.push_back(index);
                    if (ti == 0) first_pk = index;
                    continue;
                }
                if (ti > 0 && ci == 1) {
                    fks.push_back({index, first_pk});
                    continue;
                }
                ToyCol col{bc.name, spaced(bc.name), bc.kind, {}};
                if (bc.kind == 't') {
                    nlohmann::json values = nlohmann::json::array();
                    for (int j = 0; j < 4; ++j) {
                        const std::string& w = bank[(text_counter * 4 + j) % bank.size()];
                        col.pool.push_back(w);
                        values.push_back(w);
                    }
                    ++text_counter;
                    table_dump[bc.name] = values;
                } else {
                    nlohmann::json values = nlohmann::json::array();
                    for (int j = 0; j < 4; ++j) {
                        int v = 3 + (num_counter * 13 + j * 29) % 95;
                        col.pool.push_back(std::to_string(v));
                        values.push_back(v);
                    }
                    ++num_counter;
                    table_dump[bc.name] = values;
                }
                table.payload.push_back(std::move(col));
            }
            dump[bt.name] = std::move(table_dump);
            db.tables.push_back(std::move(table));
        }

        rec["table_names_original"] = std::move(names);
        rec["column_names_original"] = std::move(cols);
        rec["column_types"] = std::move(types);
        rec["primary_keys"] = std::move(pks);
        rec["foreign_keys"] = std::move(fks);
        world.tables.push_back(std::move(rec));
        world.content.emplace(bp.db_id, std::move(dump));
        world.dbs.push_back(std::move(db));
    }
    return world;
}

constexpr int kFamilies = 14;

class ExampleMaker {
  public:
    ExampleMaker(const ToyDb& db, std::mt19937_64& rng) : db_(db), rng_(rng) {}

    RawExample make(int family) {
        switch (family) {
            case 0: return list_one();
            case 1: return list_two();
            case 2: return star();
            case 3: return count_all();
            case 4: return distinct();
            case 5: return where_text();
            case 6: return where_number();
            case 7: return aggregate();
            case 8: return order_by();
            case 9: return top_k();
            case 10: return group_count();
            case 11: return join();
            case 12: return where_and();
            case 13: return count_where();
            default: throw IndexOutOfRange("toy template family " + std::to_string(family));
        }
    }

  private:
    int roll(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    const ToyTable& any_table() { return db_.tables[roll(static_cast<int>(db_.tables.size()))]; }
    const ToyCol& any_col(const ToyTable& t) {
        return t.payload[roll(static_cast<int>(t.payload.size()))];
    }
    const ToyCol& kind_col(const ToyTable& t, char kind) {
        std::vector<const ToyCol*> match;
        for (const ToyCol& c : t.payload)
            if (c.kind == kind) match.push_back(&c);
        return *match[roll(static_cast<int>(match.size()))];
    }
    std::string pick_value(const ToyCol& c) { return c.pool[roll(static_cast<int>(c.pool.size()))]; }
    RawExample ex(std::string question, std::string sql) {
        return {db_.db_id, std::move(question), std::move(sql)};
    }

    RawExample list_one() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        return ex("show the " + c.words + " of all " + t.words,
                  "SELECT " + c.name + " FROM " + t.name);
    }
    RawExample list_two() {
        const ToyTable& t = any_table();
        int i = roll(static_cast<int>(t.payload.size()));
        int j = roll(static_cast<int>(t.payload.size()) - 1);
        if (j >= i) ++j;
        const ToyCol& c1 = t.payload[i];
        const ToyCol& c2 = t.payload[j];
        return ex("list the " + c1.words + " and the " + c2.words + " of all " + t.words,
                  "SELECT " + c1.name + ", " + c2.name + " FROM " + t.name);
    }
    RawExample star() {
        const ToyTable& t = any_table();
        return ex("show every detail of the " + t.words, "SELECT * FROM " + t.name);
    }
    RawExample count_all() {
        const ToyTable& t = any_table();
        return ex("how many " + t.words + " are there", "SELECT count(*) FROM " + t.name);
    }
    RawExample distinct() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        return ex("show the different " + c.words + " of the " + t.words,
                  "SELECT DISTINCT " + c.name + " FROM " + t.name);
    }
    RawExample where_text() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        const ToyCol& ct = kind_col(t, 't');
        std::string v = pick_value(ct);
        return ex("show the " + c.words + " of the " + t.words + " whose " + ct.words + " is " + v,
                  "SELECT " + c.name + " FROM " + t.name + " WHERE " + ct.name + " = '" + v + "'");
    }
    RawExample where_number() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        const ToyCol& cn = kind_col(t, 'n');
        std::string v = pick_value(cn);
        bool gt = roll(2) == 0;
        return ex("show the " + c.words + " of the " + t.words + " with " + cn.words +
                      (gt ? " greater than " : " less than ") + v,
                  "SELECT " + c.name + " FROM " + t.name + " WHERE " + cn.name +
                      (gt ? " > " : " < ") + v);
    }
    RawExample aggregate() {
        static const char* kWord[] = {"maximum", "minimum", "average", "total"};
        static const char* kFn[] = {"max", "min", "avg", "sum"};
        int a = roll(4);
        const ToyTable& t = any_table();
        const ToyCol& cn = kind_col(t, 'n');
        return ex("what is the " + std::string(kWord[a]) + " " + cn.words + " of the " + t.words,
                  "SELECT " + std::string(kFn[a]) + "(" + cn.name + ") FROM " + t.name);
    }
    RawExample order_by() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        const ToyCol& ck = any_col(t);
        bool desc = roll(2) == 0;
        return ex("show the " + c.words + " of the " + t.words + " sorted by " + ck.words +
                      (desc ? " in descending order" : ""),
                  "SELECT " + c.name + " FROM " + t.name + " ORDER BY " + ck.name +
                      (desc ? " DESC" : ""));
    }
    RawExample top_k() {
        static const char* kK[] = {"1", "2", "3", "5"};
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        const ToyCol& cn = kind_col(t, 'n');
        std::string k = kK[roll(4)];
        return ex("show the " + c.words + " of the " + t.words + " with the top " + k + " " +
                      cn.words,
                  "SELECT " + c.name + " FROM " + t.name + " ORDER BY " + cn.name +
                      " DESC LIMIT " + k);
    }
    RawExample group_count() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        return ex("how many " + t.words + " are there for each " + c.words,
                  "SELECT " + c.name + ", count(*) FROM " + t.name + " GROUP BY " + c.name);
    }
    RawExample join() {
        const ToyTable& base = db_.tables[0];
        const ToyTable& other = db_.tables[1 + roll(static_cast<int>(db_.tables.size()) - 1)];
        const ToyCol& c1 = any_col(base);
        const ToyCol& c2 = any_col(other);
        return ex("show the " + c1.words + " of the " + base.words + " together with the " +
                      c2.words + " of their " + other.words,
                  "SELECT " + c1.name + ", " + c2.name + " FROM " + base.name + " JOIN " +
                      other.name);
    }
    RawExample where_and() {
        const ToyTable& t = any_table();
        const ToyCol& c = any_col(t);
        const ToyCol& ct = kind_col(t, 't');
        const ToyCol& cn = kind_col(t, 'n');
        std::string v = pick_value(ct);
        std::string nv = pick_value(cn);
        return ex("show the " + c.words + " of the " + t.words + " whose " + ct.words + " is " +
                      v + " and whose " + cn.words + " is greater than " + nv,
                  "SELECT " + c.name + " FROM " + t.name + " WHERE " + ct.name + " = '" + v +
                      "' AND " + cn.name + " > " + nv);
    }
    RawExample count_where() {
        const ToyTable& t = any_table();
        const ToyCol& cn = kind_col(t, 'n');
        std::string v = pick_value(cn);
        return ex("count the " + t.words + " with " + cn.words + " greater than " + v,
                  "SELECT count(*) FROM " + t.name + " WHERE " + cn.name + " > " + v);
    }

    const ToyDb& db_;
    std::mt19937_64& rng_;
};

// Families whose whole point is precise pointing (sort keys, join partners,
// role-separated WHERE columns) get extra sampling weight; the toy corpus
// must teach linking, not just clause structure.
int weighted_family(std::mt19937_64& rng) {
    static const int kWeight[kFamilies] = {1, 2, 1, 1, 1, 2, 2, 2, 3, 2, 1, 3, 2, 2};
    static const int kTotal = [] {
        int sum = 0;
        for (int w : kWeight) sum += w;
        return sum;
    }();
    int pick = std::uniform_int_distribution<int>(0, kTotal - 1)(rng);
    for (int f = 0; f < kFamilies; ++f) {
        pick -= kWeight[f];
        if (pick < 0) return f;
    }
    return kFamilies - 1;
}

void emit_split(const ToyDb& db, int quota, bool cover_all_families, std::mt19937_64& rng,
                std::vector<RawExample>& out) {
    ExampleMaker maker(db, rng);
    std::set<std::pair<std::string, std::string>> seen;
    for (int i = 0; i < quota; ++i) {
        int family =
            (cover_all_families && i < kFamilies) ? i : weighted_family(rng);
        RawExample raw = maker.make(family);
        for (int attempt = 0; attempt < 30 && seen.count({raw.question, raw.query}); ++attempt)
            raw = maker.make(family);
        seen.insert({raw.question, raw.query});
        out.push_back(std::move(raw));
    }
}

nlohmann::json examples_json(const std::vector<RawExample>& examples) {
    auto arr = nlohmann::json::array();
    for (const RawExample& e : examples)
        arr.push_back({{"db_id", e.db_id}, {"question", e.question}, {"query", e.query}});
    return arr;
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FileNotFound(path.string());
    out << doc.dump(2) << "\n";
}

}  // namespace

ToyCorpus generate_toy_corpus(unsigned long long seed) {
    BuiltWorld world = build_world();
    ToyCorpus corpus;
    corpus.tables = std::move(world.tables);
    corpus.content = std::move(world.content);

    std::mt19937_64 rng(seed);
    for (const ToyDb& db : world.dbs) emit_split(db, 110, true, rng, corpus.train);
    for (const ToyDb& db : world.dbs) emit_split(db, 5, false, rng, corpus.dev);
    std::shuffle(corpus.train.begin(), corpus.train.end(), rng);
    return corpus;
}

void write_toy_corpus(const ToyCorpus& corpus, const std::string& dir) {
    std::filesystem::path root(dir);
    std::filesystem::create_directories(root / "db_content");
    write_json(corpus.tables, root / "tables.json");
    write_json(examples_json(corpus.train), root / "train.json");
    write_json(examples_json(corpus.dev), root / "dev.json");
    for (const auto& [db_id, dump] : corpus.content)
        write_json(dump, root / "db_content" / (db_id + ".json"));
}

}  // namespace gpsql
