#include "gpsql/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "gpsql/errors.hpp"
#include "gpsql/tape.hpp"

namespace gpsql {

double flooding(double j, double b) {
    if (b < 0.0) throw NegativeFloodingLevel();
    return std::abs(j - b) + b;
}

double flooding_seed(double j, double b) {
    if (b < 0.0) throw NegativeFloodingLevel();
    return j >= b ? 1.0 : -1.0;
}

namespace {

void check_batching(const TrainConfig& config) {
    if (config.micro_batch < 1)
        throw Error("micro_batch must be at least 1");
    if (config.accumulation < 1)
        throw Error("accumulation must be at least 1");
}

/// Endless epoch-shuffled walk over corpus indices.
class Sampler {
  public:
    Sampler(std::size_t n, std::uint64_t seed) : order_(n), pos_(n), rng_(seed) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }
    std::size_t next() {
        if (pos_ == order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

  private:
    std::vector<std::size_t> order_;
    std::size_t pos_;
    std::mt19937_64 rng_;
};

}  // namespace

LossLog gp_pretrain(const std::vector<std::vector<Action>>& corpus, const GrammarSpec& grammar,
                    const DecoderModel& model, const TrainConfig& config, ParamStore& store) {
    if (corpus.empty()) throw EmptyCorpus();
    if (config.gp_steps < 0) throw Error("gp_steps must be nonnegative");
    check_batching(config);

    LossLog log;
    if (config.gp_steps == 0) return log;

    const LegalContext ctx{1, 1, 1, DecodeMode::Gp};
    Sampler sampler(corpus.size(), config.seed);
    const long n = static_cast<long>(config.micro_batch) * config.accumulation;

    for (long step = 0; step < config.gp_steps; ++step) {
        GradBuffer grads;
        double total = 0.0;
        for (int a = 0; a < config.accumulation; ++a) {
            Tape tape;
            NodeRef sum{-1};
            for (int m = 0; m < config.micro_batch; ++m) {
                NodeRef nll = teacher_forced_nll_nodes(tape, store, model, grammar,
                                                       corpus[sampler.next()], nullptr, ctx);
                sum = sum.id < 0 ? nll : tape.add(sum, nll);
            }
            total += tape.scalar(sum);
            tape.backward(sum, &grads, 1.0 / static_cast<double>(n));
        }
        const double j = total / static_cast<double>(n);
        clip_gradients(grads, config.clip_norm);
        adam_step(store, grads, config.gp_lr, config.gp_lr, ParamGroup::Decoder);
        log.records.push_back(LossRecord{step, j, j});
    }
    if (config.reset_optimizer_after_gp) store.reset_optimizer();
    return log;
}

LossLog train(const std::vector<TrainExample>& corpus, const GrammarSpec& grammar,
              const Vocab& vocab, const EncoderParams& encoder, const DecoderModel& model,
              const TrainConfig& config, ParamStore& store) {
    if (corpus.empty()) throw EmptyCorpus();
    if (config.flooding_b < 0.0) throw NegativeFloodingLevel();
    check_batching(config);

    LossLog log;
    Sampler sampler(corpus.size(), config.seed);
    const long n = static_cast<long>(config.micro_batch) * config.accumulation;

    for (long step = 0; step < config.max_steps; ++step) {
        // Keep every micro-batch tape alive: the flooding sign of the step's
        // mean loss scales all of their gradients.
        std::vector<std::unique_ptr<Tape>> tapes;
        std::vector<NodeRef> sums;
        double total = 0.0;
        for (int a = 0; a < config.accumulation; ++a) {
            auto tape = std::make_unique<Tape>();
            NodeRef sum{-1};
            for (int m = 0; m < config.micro_batch; ++m) {
                const TrainExample& ex = corpus[sampler.next()];
                EncodedNodes memory = encode_nodes(*tape, store, encoder, vocab, ex.seq);
                NodeRef nll = teacher_forced_nll_nodes(*tape, store, model, grammar, ex.gold,
                                                       &memory, ex.ctx);
                sum = sum.id < 0 ? nll : tape->add(sum, nll);
            }
            total += tape->scalar(sum);
            sums.push_back(sum);
            tapes.push_back(std::move(tape));
        }
        const double j = total / static_cast<double>(n);
        if (!std::isfinite(j) || j > config.explosion_threshold) {
            log.exploded = true;
            log.explosion_step = step;
            break;
        }

        GradBuffer grads;
        const double seed = flooding_seed(j, config.flooding_b) / static_cast<double>(n);
        for (std::size_t i = 0; i < tapes.size(); ++i) tapes[i]->backward(sums[i], &grads, seed);

        if (!grads.finite()) {
            log.exploded = true;
            log.explosion_step = step;
            break;
        }
        clip_gradients(grads, config.clip_norm);
        try {
            adam_step(store, grads, config.main_lr_encoder, config.main_lr_other);
        } catch (const NonFiniteGradient&) {
            log.exploded = true;
            log.explosion_step = step;
            break;
        }
        log.records.push_back(LossRecord{step, j, flooding(j, config.flooding_b)});
    }
    return log;
}

LossStats loss_stats(const LossLog& log, long split) {
    if (log.records.empty()) throw EmptyLog();

    auto segment = [](const std::vector<double>& xs) -> std::optional<SegmentStats> {
        if (xs.empty()) return std::nullopt;
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size());
        return SegmentStats{mean, var};
    };

    std::vector<double> before, after;
    for (const LossRecord& r : log.records)
        (r.step < split ? before : after).push_back(r.j);
    return LossStats{segment(before), segment(after)};
}

void save_loss_log(const LossLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileNotFound(path);
    out << "step,J,J_flooded\n";
    char buf[128];
    for (const LossRecord& r : log.records) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", r.step, r.j, r.j_flooded);
        out << buf;
    }
    if (!out) throw Error("failed writing " + path);
}

LossLog load_loss_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::string line;
    if (!std::getline(in, line)) throw MalformedInput(path, "empty file");
    if (line == "step,J,J_flooded\r") line.pop_back();
    if (line != "step,J,J_flooded")
        throw MalformedInput(path, "expected header 'step,J,J_flooded'");

    LossLog log;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        LossRecord r;
        std::istringstream row(line);
        std::string cell;
        try {
            if (!std::getline(row, cell, ',')) throw std::invalid_argument("step");
            r.step = std::stol(cell);
            if (!std::getline(row, cell, ',')) throw std::invalid_argument("J");
            r.j = std::stod(cell);
            if (!std::getline(row, cell, ',')) throw std::invalid_argument("J_flooded");
            r.j_flooded = std::stod(cell);
        } catch (const std::exception&) {
            throw MalformedInput(path, "bad record on line " + std::to_string(line_no));
        }
        if (std::getline(row, cell, ','))
            throw MalformedInput(path, "extra column on line " + std::to_string(line_no));
        log.records.push_back(r);
    }
    return log;
}

}  // namespace gpsql
