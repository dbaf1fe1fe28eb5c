#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpsql/ast.hpp"
#include "gpsql/decoder.hpp"
#include "gpsql/encoder.hpp"
#include "gpsql/link.hpp"
#include "gpsql/params.hpp"
#include "gpsql/vocab.hpp"

namespace gpsql {

/// Knobs of the two-stage regime. The decoder-pretraining stage runs for
/// exactly gp_steps optimizer steps at gp_lr with no flooding; main training
/// uses two learning rates (encoder vs everything else), accumulates
/// gradients over `accumulation` micro-batches of `micro_batch` examples,
/// and floods the per-step mean loss at level flooding_b.
struct TrainConfig {
    int gp_steps = 300;
    double gp_lr = 7.44e-4;
    /// Default sized for this model; large pretrained encoders want 2e-6.
    double main_lr_encoder = 1e-3;
    double main_lr_other = 5.44e-4;
    int micro_batch = 3;
    int accumulation = 4;
    double flooding_b = 0.01;
    int max_steps = 1000;
    std::uint64_t seed = 0;
    long stats_split_step = 1500;
    bool reset_optimizer_after_gp = true;
    double clip_norm = 5.0;
    double explosion_threshold = 1e6;
};

struct LossRecord {
    long step = 0;
    double j = 0.0;          // mean loss per example at this optimizer step
    double j_flooded = 0.0;  // |j - b| + b, equal to j when no flooding ran
};

/// Loss curve of one run. When training aborts on a gradient explosion the
/// flag and step are set and the exploding step has no record.
struct LossLog {
    std::vector<LossRecord> records;
    bool exploded = false;
    long explosion_step = -1;
};

/// Flooded loss |j - b| + b. Throws NegativeFloodingLevel when b < 0.
double flooding(double j, double b);
/// d(flooded)/dj: +1 for j >= b (ties resolve upward), -1 below.
double flooding_seed(double j, double b);

/// One training example: the serialized question-schema sequence, its gold
/// action sequence, and the matching legal-action context (NORMAL mode).
struct TrainExample {
    LinkedSequence seq;
    std::vector<Action> gold;
    LegalContext ctx;
};

/// Decoder-only pretraining on bare action sequences (column/table indices
/// already rewritten to 0). The context vector is zero everywhere, encoder
/// parameters are never touched, and no flooding is applied. Runs exactly
/// config.gp_steps optimizer steps, cycling the shuffled corpus as needed;
/// when reset_optimizer_after_gp is set the Adam state is cleared at the end.
LossLog gp_pretrain(const std::vector<std::vector<Action>>& corpus, const GrammarSpec& grammar,
                    const DecoderModel& model, const TrainConfig& config, ParamStore& store);

/// Full training. Per optimizer step: accumulate gradients of
/// flooding(mean NLL over micro_batch * accumulation examples, flooding_b),
/// clip to clip_norm, then one Adam step with main_lr_encoder on encoder
/// parameters and main_lr_other on the rest. A non-finite mean loss, a mean
/// loss above explosion_threshold, or a non-finite gradient stops the run
/// with the explosion flag set instead of updating parameters.
LossLog train(const std::vector<TrainExample>& corpus, const GrammarSpec& grammar,
              const Vocab& vocab, const EncoderParams& encoder, const DecoderModel& model,
              const TrainConfig& config, ParamStore& store);

struct SegmentStats {
    double mean = 0.0;
    double variance = 0.0;  // population variance
};

/// Raw-loss statistics strictly before and at-or-after the split step.
/// A side with no records is reported absent. Throws EmptyLog on an empty log.
struct LossStats {
    std::optional<SegmentStats> before;
    std::optional<SegmentStats> after;
};
LossStats loss_stats(const LossLog& log, long split);

/// CSV with header "step,J,J_flooded", full double precision.
void save_loss_log(const LossLog& log, const std::string& path);
LossLog load_loss_log(const std::string& path);

}  // namespace gpsql
