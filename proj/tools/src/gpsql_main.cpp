#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpsql/canonical.hpp"
#include "gpsql/dataset.hpp"
#include "gpsql/decoder.hpp"
#include "gpsql/encoder.hpp"
#include "gpsql/errors.hpp"
#include "gpsql/sql.hpp"
#include "gpsql/tokenize.hpp"
#include "gpsql/toy.hpp"
#include "gpsql/training.hpp"
#include "gpsql/vocab.hpp"
#include "json.hpp"

namespace {

using namespace gpsql;
using nlohmann::json;

// ---- small file utilities ----------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileNotFound(path);
    out << text;
    if (!out) throw MalformedInput(path, "write failed");
}

/// FNV-1a over a file's bytes; the manifest's change-detection fingerprint.
std::string fnv64_file(const std::string& path) {
    std::string bytes = read_file(path);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv64:") + buf;
}

// ---- manifest ------------------------------------------------------------------------

/// Every command records what it ran with: config, seed, and a fingerprint of
/// every input file, enough to reproduce the outputs bit for bit.
struct Manifest {
    std::string command;
    json config = json::object();
    json inputs = json::object();
    std::vector<std::string> outputs;

    void input(const std::string& label, const std::string& path) {
        inputs[label] = {{"path", path}, {"hash", fnv64_file(path)}};
    }
    void write(const std::string& path) const {
        json doc{{"command", command},
                 {"config", config},
                 {"inputs", inputs},
                 {"outputs", outputs}};
        write_file(path, doc.dump(2) + "\n");
    }
};

// ---- model configuration ---------------------------------------------------------------

struct ModelDims {
    std::size_t embed = 64;
    std::size_t enc_hidden = 64;
    std::size_t action_embed = 64;
    std::size_t node_embed = 64;
    std::size_t dec_hidden = 128;
    std::size_t heads = 4;
};

EncoderConfig encoder_config(const ModelDims& d) { return {d.embed, d.enc_hidden}; }

DecoderConfig decoder_config(const ModelDims& d) {
    return {d.action_embed, d.node_embed, d.dec_hidden, 2 * d.enc_hidden, d.heads};
}

void add_dim_flags(CLI::App* cmd, ModelDims& dims) {
    cmd->add_option("--embed", dims.embed, "encoder token embedding width");
    cmd->add_option("--enc-hidden", dims.enc_hidden, "encoder hidden width per direction");
    cmd->add_option("--action-embed", dims.action_embed, "decoder action embedding width");
    cmd->add_option("--node-embed", dims.node_embed, "decoder node-kind embedding width");
    cmd->add_option("--dec-hidden", dims.dec_hidden, "decoder recurrent width");
    cmd->add_option("--heads", dims.heads, "attention heads");
}

json dims_to_json(const ModelDims& d) {
    return {{"embed", d.embed},           {"enc_hidden", d.enc_hidden},
            {"action_embed", d.action_embed}, {"node_embed", d.node_embed},
            {"dec_hidden", d.dec_hidden}, {"heads", d.heads}};
}

ModelDims dims_from_json(const json& j) {
    ModelDims d;
    d.embed = j.at("embed").get<std::size_t>();
    d.enc_hidden = j.at("enc_hidden").get<std::size_t>();
    d.action_embed = j.at("action_embed").get<std::size_t>();
    d.node_embed = j.at("node_embed").get<std::size_t>();
    d.dec_hidden = j.at("dec_hidden").get<std::size_t>();
    d.heads = j.at("heads").get<std::size_t>();
    return d;
}

/// Sidecar next to each checkpoint describing how to rebuild its ParamStore.
void write_meta(const std::string& ckpt_path, const std::string& kind, const ModelDims& dims,
                int vocab_size, const GrammarSpec& grammar) {
    json meta{{"kind", kind},
              {"dims", dims_to_json(dims)},
              {"vocab_size", vocab_size},
              {"grammar",
               {{"productions", grammar.num_productions()},
                {"field_kinds", grammar.num_field_kinds()}}}};
    write_file(ckpt_path + ".meta.json", meta.dump(2) + "\n");
}

json read_meta(const std::string& ckpt_path, const GrammarSpec& grammar) {
    std::string path = ckpt_path + ".meta.json";
    json meta;
    try {
        meta = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedInput(path, e.what());
    }
    if (meta.at("grammar").at("productions").get<int>() != grammar.num_productions() ||
        meta.at("grammar").at("field_kinds").get<int>() != grammar.num_field_kinds()) {
        throw IdMismatch("checkpoint " + ckpt_path + " was trained against a different grammar");
    }
    return meta;
}

SqlGrammar load_grammar(const std::string& grammar_path) {
    if (grammar_path.empty()) return SqlGrammar::standard();
    return SqlGrammar::load_file(grammar_path);
}

// ---- shared pipeline pieces -------------------------------------------------------------

void print_bundle(const DatasetBundle& bundle) {
    std::cout << bundle.loaded() << " examples, " << bundle.schemas.size() << " databases";
    if (bundle.excluded() > 0) std::cout << " (" << bundle.excluded() << " excluded)";
    std::cout << "\n";
    for (const std::string& line : bundle.skipped) std::cerr << "warning: skipped " << line << "\n";
    if (bundle.loaded() == 0) std::cerr << "warning: no usable examples\n";
}

struct FullModel {
    EncoderParams enc;
    DecoderModel dec;
};

FullModel register_full(ParamStore& store, int vocab_size, const ModelDims& dims,
                        const GrammarSpec& grammar) {
    FullModel m;
    m.enc = register_encoder(store, vocab_size, encoder_config(dims));
    m.dec = register_decoder(store, grammar, decoder_config(dims));
    return m;
}

/// Copies decoder parameter values out of a decoder-only checkpoint into a
/// freshly registered full model.
void warm_start(ParamStore& store, const std::string& ckpt, const ModelDims& dims,
                const GrammarSpec& grammar) {
    json meta = read_meta(ckpt, grammar);
    if (meta.at("kind").get<std::string>() != "gp")
        throw IdMismatch("--warm-start expects a gp-pretrain checkpoint: " + ckpt);
    ModelDims gp_dims = dims_from_json(meta.at("dims"));
    if (gp_dims.action_embed != dims.action_embed || gp_dims.node_embed != dims.node_embed ||
        gp_dims.dec_hidden != dims.dec_hidden || gp_dims.enc_hidden != dims.enc_hidden ||
        gp_dims.heads != dims.heads) {
        throw IdMismatch("--warm-start checkpoint " + ckpt + " has different model dimensions");
    }
    ParamStore gp_store(0);
    register_decoder(gp_store, grammar, decoder_config(gp_dims));
    load_checkpoint(gp_store, ckpt);
    for (int i = 0; i < static_cast<int>(gp_store.count()); ++i)
        store.value(store.id(gp_store.info(i).name)) = gp_store.value(i);
}

std::vector<PredictedQuery> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::vector<PredictedQuery> preds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedInput(path, "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("db_id") || !rec.contains("predicted_sql") ||
            !rec["db_id"].is_string() || !rec["predicted_sql"].is_string()) {
            throw MalformedInput(path, "line " + std::to_string(lineno) +
                                           ": needs string fields db_id, predicted_sql");
        }
        preds.push_back({rec["db_id"].get<std::string>(), rec["predicted_sql"].get<std::string>()});
    }
    return preds;
}

// ---- commands -----------------------------------------------------------------------------

struct GenToyArgs {
    std::string out;
    std::uint64_t seed = kToySeed;
    std::string manifest;
};

int cmd_gen_toy(const GenToyArgs& a) {
    ToyCorpus corpus = generate_toy_corpus(a.seed);
    write_toy_corpus(corpus, a.out);

    Manifest man;
    man.command = "gen-toy";
    man.config = {{"out", a.out}, {"seed", a.seed}};
    for (std::string name : {"tables.json", "train.json", "dev.json"})
        man.outputs.push_back(a.out + "/" + name);
    for (const auto& [db_id, dump] : corpus.content) {
        (void)dump;
        man.outputs.push_back(a.out + "/db_content/" + db_id + ".json");
    }
    man.write(a.manifest.empty() ? a.out + "/manifest.json" : a.manifest);

    std::cout << "toy corpus: " << corpus.tables.size() << " databases, " << corpus.train.size()
              << " train, " << corpus.dev.size() << " dev -> " << a.out << "\n";
    return 0;
}

struct IngestArgs {
    std::string tables, examples, content_dir, grammar_path;
    std::string manifest = "ingest.manifest.json";
};

int cmd_ingest(const IngestArgs& a) {
    SqlGrammar sg = load_grammar(a.grammar_path);
    DatasetBundle bundle = ingest(a.tables, a.examples, sg.grammar(), a.content_dir);
    print_bundle(bundle);

    Manifest man;
    man.command = "ingest";
    man.config = {{"tables", a.tables},
                  {"examples", a.examples},
                  {"db_content", a.content_dir},
                  {"grammar", a.grammar_path},
                  {"loaded", bundle.loaded()},
                  {"excluded", bundle.excluded()}};
    man.input("tables", a.tables);
    man.input("examples", a.examples);
    for (const auto& [db_id, content] : bundle.content) {
        (void)content;
        man.input("content/" + db_id, a.content_dir + "/" + db_id + ".json");
    }
    if (!a.grammar_path.empty()) man.input("grammar", a.grammar_path);
    man.write(a.manifest);
    return 0;
}

struct GpArgs {
    std::string tables, examples, content_dir, grammar_path, save, log, manifest;
    ModelDims dims;
    TrainConfig tc;
    bool keep_optimizer = false;
};

int cmd_gp_pretrain(GpArgs a) {
    SqlGrammar sg = load_grammar(a.grammar_path);
    DatasetBundle bundle = ingest(a.tables, a.examples, sg.grammar(), a.content_dir);
    print_bundle(bundle);

    std::vector<std::vector<Action>> corpus;
    corpus.reserve(bundle.examples.size());
    for (const PreparedExample& ex : bundle.examples) corpus.push_back(gp_rewrite(ex.gold));

    a.tc.reset_optimizer_after_gp = !a.keep_optimizer;
    ParamStore store(a.tc.seed);
    DecoderModel model = register_decoder(store, sg.grammar(), decoder_config(a.dims));
    LossLog log = gp_pretrain(corpus, sg.grammar(), model, a.tc, store);

    save_checkpoint(store, a.save);
    write_meta(a.save, "gp", a.dims, 0, sg.grammar());
    std::string log_path = a.log.empty() ? a.save + ".loss.csv" : a.log;
    save_loss_log(log, log_path);

    Manifest man;
    man.command = "gp-pretrain";
    man.config = {{"tables", a.tables},        {"examples", a.examples},
                  {"db_content", a.content_dir}, {"grammar", a.grammar_path},
                  {"steps", a.tc.gp_steps},    {"lr", a.tc.gp_lr},
                  {"micro_batch", a.tc.micro_batch}, {"accumulation", a.tc.accumulation},
                  {"seed", a.tc.seed},         {"reset_optimizer", a.tc.reset_optimizer_after_gp},
                  {"clip_norm", a.tc.clip_norm}, {"dims", dims_to_json(a.dims)}};
    man.input("tables", a.tables);
    man.input("examples", a.examples);
    if (!a.grammar_path.empty()) man.input("grammar", a.grammar_path);
    man.outputs = {a.save, a.save + ".meta.json", log_path};
    man.write(a.manifest.empty() ? a.save + ".manifest.json" : a.manifest);

    if (!log.records.empty())
        std::cout << "gp-pretrain: " << log.records.size() << " steps, final J "
                  << log.records.back().j << " -> " << a.save << "\n";
    else
        std::cout << "gp-pretrain: 0 steps -> " << a.save << "\n";
    return 0;
}

struct TrainArgs {
    std::string tables, examples, content_dir, grammar_path, save, vocab_path, log, warm,
        manifest;
    ModelDims dims;
    TrainConfig tc;
};

int cmd_train(TrainArgs a) {
    SqlGrammar sg = load_grammar(a.grammar_path);
    DatasetBundle bundle = ingest(a.tables, a.examples, sg.grammar(), a.content_dir);
    print_bundle(bundle);

    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(bundle.examples.size());
    for (const PreparedExample& ex : bundle.examples) token_lists.push_back(ex.seq.tokens);
    Vocab vocab = Vocab::build(token_lists);
    std::string vocab_path = a.vocab_path.empty() ? a.save + ".vocab" : a.vocab_path;

    ParamStore store(a.tc.seed);
    FullModel model = register_full(store, vocab.size(), a.dims, sg.grammar());
    if (!a.warm.empty()) warm_start(store, a.warm, a.dims, sg.grammar());

    std::vector<TrainExample> examples;
    examples.reserve(bundle.examples.size());
    for (const PreparedExample& ex : bundle.examples)
        examples.push_back({ex.seq, ex.gold, ex.ctx});

    LossLog log = train(examples, sg.grammar(), vocab, model.enc, model.dec, a.tc, store);

    vocab.save(vocab_path);
    save_checkpoint(store, a.save);
    write_meta(a.save, "full", a.dims, vocab.size(), sg.grammar());
    std::string log_path = a.log.empty() ? a.save + ".loss.csv" : a.log;
    save_loss_log(log, log_path);

    Manifest man;
    man.command = "train";
    man.config = {{"tables", a.tables},
                  {"examples", a.examples},
                  {"db_content", a.content_dir},
                  {"grammar", a.grammar_path},
                  {"warm_start", a.warm},
                  {"steps", a.tc.max_steps},
                  {"lr_encoder", a.tc.main_lr_encoder},
                  {"lr_other", a.tc.main_lr_other},
                  {"flooding_b", a.tc.flooding_b},
                  {"micro_batch", a.tc.micro_batch},
                  {"accumulation", a.tc.accumulation},
                  {"seed", a.tc.seed},
                  {"clip_norm", a.tc.clip_norm},
                  {"dims", dims_to_json(a.dims)},
                  {"exploded", log.exploded},
                  {"explosion_step", log.explosion_step}};
    man.input("tables", a.tables);
    man.input("examples", a.examples);
    for (const auto& [db_id, content] : bundle.content) {
        (void)content;
        man.input("content/" + db_id, a.content_dir + "/" + db_id + ".json");
    }
    if (!a.grammar_path.empty()) man.input("grammar", a.grammar_path);
    if (!a.warm.empty()) man.input("warm_start", a.warm);
    man.outputs = {a.save, a.save + ".meta.json", vocab_path, log_path};
    man.write(a.manifest.empty() ? a.save + ".manifest.json" : a.manifest);

    if (log.exploded) {
        std::cerr << "error: training diverged at step " << log.explosion_step << "\n";
        return 3;
    }
    if (!log.records.empty())
        std::cout << "train: " << log.records.size() << " steps, final J "
                  << log.records.back().j << " -> " << a.save << "\n";
    return 0;
}

struct InferArgs {
    std::string tables, examples, content_dir, grammar_path, load, vocab_path, out, manifest;
    int beam = 1;
    int max_len = kMaxActionLength;
};

int cmd_infer(const InferArgs& a) {
    SqlGrammar sg = load_grammar(a.grammar_path);
    json meta = read_meta(a.load, sg.grammar());
    if (meta.at("kind").get<std::string>() != "full")
        throw IdMismatch("infer needs a full checkpoint (from train), got '" +
                         meta.at("kind").get<std::string>() + "': " + a.load);
    ModelDims dims = dims_from_json(meta.at("dims"));

    std::string vocab_path = a.vocab_path.empty() ? a.load + ".vocab" : a.vocab_path;
    Vocab vocab = Vocab::load(vocab_path);
    if (vocab.size() != meta.at("vocab_size").get<int>())
        throw IdMismatch("vocabulary " + vocab_path + " does not match checkpoint " + a.load);

    ParamStore store(0);
    FullModel model = register_full(store, vocab.size(), dims, sg.grammar());
    load_checkpoint(store, a.load);

    std::vector<Schema> schemas = load_tables_file(a.tables);
    std::map<std::string, DbContent> content = load_content_dir(schemas, a.content_dir);
    std::vector<RawExample> raws = load_examples_file(a.examples);

    std::ostringstream lines;
    int failed = 0;
    for (const RawExample& raw : raws) {
        const Schema* schema = nullptr;
        try {
            schema = &find_schema(schemas, raw.db_id);
        } catch (const UnknownIdentifier&) {
            throw MalformedInput(raw.db_id, "example references a db_id missing from the tables file");
        }
        std::vector<std::string> tokens = tokenize(raw.question);
        std::vector<ValueMatch> matches;
        if (auto it = content.find(raw.db_id); it != content.end())
            matches = match_values(tokens, *schema, it->second);
        LinkedSequence seq = serialize(tokens, *schema, matches);
        EncodedMemory memory = encode_memory(store, model.enc, vocab, seq);
        LegalContext ctx{schema->num_columns(), schema->num_tables(),
                         static_cast<int>(tokens.size()), DecodeMode::Normal};

        std::string sql;
        int action_count = 0;
        double score = 0.0;
        try {
            DecodeResult result =
                decode(store, model.dec, sg.grammar(), memory, ctx, a.beam, a.max_len);
            SqlAst ast = actions_to_ast(result.actions, sg.grammar(), tokens);
            sql = render_sql(ast, *schema, sg);
            action_count = static_cast<int>(result.actions.size());
            score = result.score;
        } catch (const Error&) {
            ++failed;  // no parse for this question; an empty row keeps alignment
            sql.clear();
            action_count = 0;
            score = 0.0;
        }
        json rec{{"db_id", raw.db_id},
                 {"question", raw.question},
                 {"predicted_sql", sql},
                 {"action_count", action_count},
                 {"score", score}};
        lines << rec.dump() << "\n";
    }
    write_file(a.out, lines.str());

    Manifest man;
    man.command = "infer";
    man.config = {{"tables", a.tables},   {"examples", a.examples},
                  {"db_content", a.content_dir}, {"grammar", a.grammar_path},
                  {"load", a.load},       {"vocab", vocab_path},
                  {"beam", a.beam},       {"max_len", a.max_len}};
    man.input("tables", a.tables);
    man.input("examples", a.examples);
    man.input("checkpoint", a.load);
    man.input("vocab", vocab_path);
    if (!a.grammar_path.empty()) man.input("grammar", a.grammar_path);
    man.outputs = {a.out};
    man.write(a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);

    std::cout << "infer: " << raws.size() << " predictions";
    if (failed > 0) std::cout << " (" << failed << " failed)";
    std::cout << " -> " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string tables, gold, pred, out, manifest;
    bool ignore_values = false;
};

int cmd_eval(const EvalArgs& a) {
    std::vector<Schema> schemas = load_tables_file(a.tables);
    std::vector<RawExample> gold_raws = load_examples_file(a.gold);
    std::vector<PredictedQuery> preds = read_predictions(a.pred);
    if (preds.size() != gold_raws.size())
        throw MalformedInput(a.pred, "has " + std::to_string(preds.size()) +
                                         " predictions but gold has " +
                                         std::to_string(gold_raws.size()));
    std::vector<GoldExample> golds;
    golds.reserve(gold_raws.size());
    for (const RawExample& raw : gold_raws) golds.push_back({raw.db_id, raw.query});

    EvalReport report = evaluate(preds, golds, schemas, a.ignore_values);
    std::string out = a.out.empty() ? a.pred + ".report.json" : a.out;
    write_file(out, report.to_json().dump(2) + "\n");
    std::cout << report.summary();

    Manifest man;
    man.command = "eval";
    man.config = {{"tables", a.tables},
                  {"gold", a.gold},
                  {"pred", a.pred},
                  {"ignore_values", a.ignore_values}};
    man.input("tables", a.tables);
    man.input("gold", a.gold);
    man.input("pred", a.pred);
    man.outputs = {out};
    man.write(a.manifest.empty() ? out + ".manifest.json" : a.manifest);
    return 0;
}

struct StatsArgs {
    std::string log, manifest;
    long split = TrainConfig{}.stats_split_step;
};

int cmd_stats(const StatsArgs& a) {
    LossLog log = load_loss_log(a.log);
    LossStats stats = loss_stats(log, a.split);
    long before_n = 0, after_n = 0;
    for (const LossRecord& r : log.records) (r.step < a.split ? before_n : after_n) += 1;

    std::printf("%-8s %8s %14s %14s\n", "segment", "steps", "mean", "variance");
    auto row = [](const char* name, long n, const std::optional<SegmentStats>& s) {
        if (s)
            std::printf("%-8s %8ld %14.6f %14.6f\n", name, n, s->mean, s->variance);
        else
            std::printf("%-8s %8ld %14s %14s\n", name, n, "-", "-");
    };
    row("before", before_n, stats.before);
    row("after", after_n, stats.after);

    Manifest man;
    man.command = "stats";
    man.config = {{"log", a.log}, {"split", a.split}};
    man.input("log", a.log);
    man.write(a.manifest.empty() ? a.log + ".stats.manifest.json" : a.manifest);
    return 0;
}

// ---- exit-code policy ------------------------------------------------------------------

/// 0 success; 1 usage; 2 data/configuration error; 3 training failure.
int guarded(bool training_command, const std::function<int()>& body) {
    try {
        return body();
    } catch (const FileNotFound& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MalformedSchema& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MalformedInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UnknownIdentifier& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IdMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyCorpus& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyLog& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return training_command ? 3 : 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grammar-constrained text-to-SQL: training, inference, evaluation"};
    app.require_subcommand(1);
    int exit_code = 0;

    // gen-toy
    auto gen_args = std::make_shared<GenToyArgs>();
    CLI::App* gen = app.add_subcommand("gen-toy", "generate the bundled synthetic corpus");
    gen->add_option("--out", gen_args->out, "output directory")->required();
    gen->add_option("--seed", gen_args->seed, "generator seed");
    gen->add_option("--manifest", gen_args->manifest, "manifest path");
    gen->callback([=, &exit_code] { exit_code = guarded(false, [&] { return cmd_gen_toy(*gen_args); }); });

    // ingest
    auto ing_args = std::make_shared<IngestArgs>();
    CLI::App* ing = app.add_subcommand("ingest", "load and validate a dataset");
    ing->add_option("--tables", ing_args->tables, "tables file")->required();
    ing->add_option("--examples", ing_args->examples, "examples file")->required();
    ing->add_option("--db-content", ing_args->content_dir, "content dump directory");
    ing->add_option("--grammar", ing_args->grammar_path, "grammar file (default: built-in)");
    ing->add_option("--manifest", ing_args->manifest, "manifest path");
    ing->callback([=, &exit_code] { exit_code = guarded(false, [&] { return cmd_ingest(*ing_args); }); });

    // gp-pretrain
    auto gp_args = std::make_shared<GpArgs>();
    CLI::App* gp = app.add_subcommand("gp-pretrain", "grammar pre-training of the decoder");
    gp->add_option("--tables", gp_args->tables, "tables file")->required();
    gp->add_option("--examples", gp_args->examples, "examples file")->required();
    gp->add_option("--db-content", gp_args->content_dir, "content dump directory");
    gp->add_option("--grammar", gp_args->grammar_path, "grammar file (default: built-in)");
    gp->add_option("--save", gp_args->save, "checkpoint output path")->required();
    gp->add_option("--log", gp_args->log, "loss log CSV path (default: <save>.loss.csv)");
    gp->add_option("--steps", gp_args->tc.gp_steps, "optimizer steps");
    gp->add_option("--lr", gp_args->tc.gp_lr, "learning rate");
    gp->add_option("--micro-batch", gp_args->tc.micro_batch, "examples per micro-batch");
    gp->add_option("--accumulation", gp_args->tc.accumulation, "micro-batches per step");
    gp->add_option("--seed", gp_args->tc.seed, "initialization/sampling seed");
    gp->add_option("--clip-norm", gp_args->tc.clip_norm, "gradient clipping norm");
    gp->add_flag("--keep-optimizer", gp_args->keep_optimizer,
                 "keep Adam state instead of resetting it after pre-training");
    gp->add_option("--manifest", gp_args->manifest, "manifest path");
    add_dim_flags(gp, gp_args->dims);
    gp->callback([=, &exit_code] { exit_code = guarded(true, [&] { return cmd_gp_pretrain(*gp_args); }); });

    // train
    auto tr_args = std::make_shared<TrainArgs>();
    CLI::App* tr = app.add_subcommand("train", "train the full model");
    tr->add_option("--tables", tr_args->tables, "tables file")->required();
    tr->add_option("--examples", tr_args->examples, "examples file")->required();
    tr->add_option("--db-content", tr_args->content_dir, "content dump directory");
    tr->add_option("--grammar", tr_args->grammar_path, "grammar file (default: built-in)");
    tr->add_option("--save", tr_args->save, "checkpoint output path")->required();
    tr->add_option("--vocab", tr_args->vocab_path, "vocabulary output path (default: <save>.vocab)");
    tr->add_option("--log", tr_args->log, "loss log CSV path (default: <save>.loss.csv)");
    tr->add_option("--warm-start", tr_args->warm, "gp-pretrain checkpoint to start from");
    tr->add_option("--steps", tr_args->tc.max_steps, "optimizer steps");
    tr->add_option("--flooding-b", tr_args->tc.flooding_b, "flooding level b");
    tr->add_option("--lr-encoder", tr_args->tc.main_lr_encoder, "encoder learning rate");
    tr->add_option("--lr-other", tr_args->tc.main_lr_other, "non-encoder learning rate");
    tr->add_option("--micro-batch", tr_args->tc.micro_batch, "examples per micro-batch");
    tr->add_option("--accumulation", tr_args->tc.accumulation, "micro-batches per step");
    tr->add_option("--seed", tr_args->tc.seed, "initialization/sampling seed");
    tr->add_option("--clip-norm", tr_args->tc.clip_norm, "gradient clipping norm");
    tr->add_option("--manifest", tr_args->manifest, "manifest path");
    add_dim_flags(tr, tr_args->dims);
    tr->callback([=, &exit_code] { exit_code = guarded(true, [&] { return cmd_train(*tr_args); }); });

    // infer
    auto in_args = std::make_shared<InferArgs>();
    CLI::App* inf = app.add_subcommand("infer", "decode SQL for every question");
    inf->add_option("--tables", in_args->tables, "tables file")->required();
    inf->add_option("--examples", in_args->examples, "examples file (questions)")->required();
    inf->add_option("--db-content", in_args->content_dir, "content dump directory");
    inf->add_option("--grammar", in_args->grammar_path, "grammar file (default: built-in)");
    inf->add_option("--load", in_args->load, "checkpoint to load")->required();
    inf->add_option("--vocab", in_args->vocab_path, "vocabulary path (default: <load>.vocab)");
    inf->add_option("--out", in_args->out, "predictions JSONL output")->required();
    inf->add_option("--beam", in_args->beam, "beam width (1 = greedy)");
    inf->add_option("--max-len", in_args->max_len, "decoding step budget");
    inf->add_option("--manifest", in_args->manifest, "manifest path");
    inf->callback([=, &exit_code] { exit_code = guarded(false, [&] { return cmd_infer(*in_args); }); });

    // eval
    auto ev_args = std::make_shared<EvalArgs>();
    CLI::App* ev = app.add_subcommand("eval", "exact-match evaluation of predictions");
    ev->add_option("--tables", ev_args->tables, "tables file")->required();
    ev->add_option("--gold", ev_args->gold, "gold examples file")->required();
    ev->add_option("--pred", ev_args->pred, "predictions JSONL")->required();
    ev->add_option("--out", ev_args->out, "report JSON path (default: <pred>.report.json)");
    ev->add_flag("--ignore-values", ev_args->ignore_values,
                 "compare with literal values masked out");
    ev->add_option("--manifest", ev_args->manifest, "manifest path");
    ev->callback([=, &exit_code] { exit_code = guarded(false, [&] { return cmd_eval(*ev_args); }); });

    // stats
    auto st_args = std::make_shared<StatsArgs>();
    CLI::App* st = app.add_subcommand("stats", "before/after summary of a loss log");
    st->add_option("--log", st_args->log, "loss log CSV")->required();
    st->add_option("--split", st_args->split, "step boundary between segments");
    st->add_option("--manifest", st_args->manifest, "manifest path");
    st->callback([=, &exit_code] { exit_code = guarded(false, [&] { return cmd_stats(*st_args); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int cli_code = app.exit(e);
        return cli_code == 0 ? 0 : 1;  // help/version succeed; any parse error is usage
    }
    return exit_code;
}
