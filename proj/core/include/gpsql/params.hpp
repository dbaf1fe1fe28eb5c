#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gpsql/tape.hpp"

namespace gpsql {

/// Learning-rate group a parameter belongs to.
enum class ParamGroup : std::uint8_t { Encoder = 0, Decoder = 1 };

/// Metadata for one named parameter array.
struct ParamInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;  // 1 for plain vectors
    ParamGroup group = ParamGroup::Decoder;
};

/// Named dense parameter arrays with seeded initialization and Adam state.
///
/// Parameters are registered once, in a fixed order, and addressed afterwards
/// by their integer id (dense, 0-based, registration order) — the same id used
/// by Tape::param / GradBuffer. Each parameter carries Adam moment buffers
/// (m, v) of its own shape and its own step counter, so parameters that
/// receive no gradient on a step are skipped entirely and their bias
/// correction stays exact.
class ParamStore {
public:
    enum class Init { Uniform, Zero };

    explicit ParamStore(std::uint64_t seed);

    /// Registers a (rows x cols) array. Uniform init draws rows*cols values
    /// from the store RNG in registration order, uniform in (-0.1, 0.1);
    /// Zero init leaves the array zeroed and consumes no randomness.
    int add(const std::string& name, std::size_t rows, std::size_t cols, ParamGroup group,
            Init init);

    bool has(const std::string& name) const;
    /// Id of a registered name; throws Error if absent.
    int id(const std::string& name) const;

    std::size_t count() const { return entries_.size(); }
    const ParamInfo& info(int id) const;
    Vec& value(int id);
    const Vec& value(int id) const;
    Vec& moment_m(int id);
    Vec& moment_v(int id);
    long step_of(int id) const;

    /// Total number of scalar parameters across all arrays.
    std::size_t scalar_count() const;

    /// Number of completed optimizer steps (adam_step calls).
    long adam_steps() const { return adam_steps_; }

    /// Convenience: leaf node for this parameter's full array.
    NodeRef use(Tape& tape, int id) const { return tape.param(id, value(id)); }
    /// Convenience: leaf node for one row of this (rows x cols) parameter.
    NodeRef use_row(Tape& tape, int id, std::size_t row) const {
        const ParamInfo& pi = info(id);
        return tape.param_row(id, value(id), pi.rows, pi.cols, row);
    }

    /// Zeroes all Adam moments and step counters (values untouched).
    void reset_optimizer();

    std::uint64_t seed() const { return seed_; }

private:
    friend void adam_step(ParamStore&, const GradBuffer&, double, double,
                          std::optional<ParamGroup>);
    friend void save_checkpoint(const ParamStore&, const std::string&);
    friend void load_checkpoint(ParamStore&, const std::string&);

    struct Entry {
        ParamInfo info;
        Vec value;
        Vec m;
        Vec v;
        long t = 0;  // Adam steps applied to this parameter
    };

    std::vector<Entry> entries_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    long adam_steps_ = 0;

    Entry& entry(int id);
    const Entry& entry(int id) const;
};

/// One Adam update (β1=0.9, β2=0.999, ε=1e-8, bias-corrected) over every
/// parameter with an accumulated gradient; parameters whose GradBuffer entry
/// is absent are skipped entirely — values, moments, and step counter all
/// untouched. `lr_encoder` applies to ParamGroup::Encoder, `lr_decoder` to
/// ParamGroup::Decoder. When `only` is set, parameters outside that group are
/// skipped even if they carry gradients. Throws NonFiniteGradient if a
/// consumed gradient — or a freshly updated value — is NaN/inf.
void adam_step(ParamStore& store, const GradBuffer& grads, double lr_encoder, double lr_decoder,
               std::optional<ParamGroup> only = std::nullopt);

/// Rescales all accumulated gradients so their global L2 norm is at most
/// `max_norm` (no-op when max_norm <= 0 or the norm is already smaller).
/// Returns the pre-clip global norm.
double clip_gradients(GradBuffer& grads, double max_norm);

/// Versioned binary snapshot of every parameter: values, Adam moments, and
/// step counters. Layout is stable across runs of the same build.
void save_checkpoint(const ParamStore& store, const std::string& path);

/// Restores a snapshot into a store with identical registration (same names,
/// shapes, groups, order); throws FileNotFound, MalformedInput, or IdMismatch.
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace gpsql
