#include "gpsql/params.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "gpsql/errors.hpp"

namespace gpsql {

ParamStore::ParamStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

int ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols, ParamGroup group,
                    Init init) {
    if (name.empty()) throw Error("parameter name must not be empty");
    if (rows == 0 || cols == 0) throw ShapeMismatch("parameter " + name + " has a zero dimension");
    if (has(name)) throw Error("parameter registered twice: " + name);
    Entry e;
    e.info = ParamInfo{name, rows, cols, group};
    const std::size_t n = rows * cols;
    e.value.assign(n, 0.0);
    if (init == Init::Uniform) {
        std::uniform_real_distribution<double> dist(-0.1, 0.1);
        for (double& x : e.value) x = dist(rng_);
    }
    e.m.assign(n, 0.0);
    e.v.assign(n, 0.0);
    entries_.push_back(std::move(e));
    return static_cast<int>(entries_.size()) - 1;
}

bool ParamStore::has(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.info.name == name) return true;
    return false;
}

int ParamStore::id(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].info.name == name) return static_cast<int>(i);
    throw Error("unknown parameter: " + name);
}

ParamStore::Entry& ParamStore::entry(int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= entries_.size())
        throw IndexOutOfRange("parameter id " + std::to_string(id));
    return entries_[id];
}
const ParamStore::Entry& ParamStore::entry(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entries_.size())
        throw IndexOutOfRange("parameter id " + std::to_string(id));
    return entries_[id];
}

const ParamInfo& ParamStore::info(int id) const { return entry(id).info; }
Vec& ParamStore::value(int id) { return entry(id).value; }
const Vec& ParamStore::value(int id) const { return entry(id).value; }
Vec& ParamStore::moment_m(int id) { return entry(id).m; }
Vec& ParamStore::moment_v(int id) { return entry(id).v; }
long ParamStore::step_of(int id) const { return entry(id).t; }

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::reset_optimizer() {
    for (Entry& e : entries_) {
        std::fill(e.m.begin(), e.m.end(), 0.0);
        std::fill(e.v.begin(), e.v.end(), 0.0);
        e.t = 0;
    }
    adam_steps_ = 0;
}

void adam_step(ParamStore& store, const GradBuffer& grads, double lr_encoder, double lr_decoder,
               std::optional<ParamGroup> only) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    for (std::size_t i = 0; i < store.entries_.size(); ++i) {
        ParamStore::Entry& e = store.entries_[i];
        if (only && e.info.group != *only) continue;
        const Vec* g = grads.find(static_cast<int>(i));
        if (!g) continue;  // no gradient: skip values, moments, and step counter alike
        if (g->size() != e.value.size())
            throw ShapeMismatch("gradient size for " + e.info.name + " is " +
                                std::to_string(g->size()) + ", expected " +
                                std::to_string(e.value.size()));
        for (double x : *g)
            if (!std::isfinite(x)) throw NonFiniteGradient(e.info.name);
        const double lr = (e.info.group == ParamGroup::Encoder) ? lr_encoder : lr_decoder;
        e.t += 1;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(e.t));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(e.t));
        for (std::size_t j = 0; j < e.value.size(); ++j) {
            const double gj = (*g)[j];
            e.m[j] = kBeta1 * e.m[j] + (1.0 - kBeta1) * gj;
            e.v[j] = kBeta2 * e.v[j] + (1.0 - kBeta2) * gj * gj;
            const double mhat = e.m[j] / bc1;
            const double vhat = e.v[j] / bc2;
            e.value[j] -= lr * mhat / (std::sqrt(vhat) + kEps);
            if (!std::isfinite(e.value[j])) throw NonFiniteGradient(e.info.name);
        }
    }
    store.adam_steps_ += 1;
}

double clip_gradients(GradBuffer& grads, double max_norm) {
    const double norm = grads.global_norm();
    if (max_norm > 0.0 && norm > max_norm) grads.scale_all(max_norm / norm);
    return norm;
}

// ---- checkpoint ----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'P', 'S', 'Q', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof x);
}
void put_u64(std::ostream& os, std::uint64_t x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof x);
}
void put_vec(std::ostream& os, const Vec& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    std::uint32_t x = 0;
    if (!is.read(reinterpret_cast<char*>(&x), sizeof x))
        throw MalformedInput(path, "truncated checkpoint");
    return x;
}
std::uint64_t get_u64(std::istream& is, const std::string& path) {
    std::uint64_t x = 0;
    if (!is.read(reinterpret_cast<char*>(&x), sizeof x))
        throw MalformedInput(path, "truncated checkpoint");
    return x;
}
void get_vec(std::istream& is, Vec& v, const std::string& path) {
    if (!is.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
        throw MalformedInput(path, "truncated checkpoint");
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FileNotFound(path);
    os.write(kMagic, sizeof kMagic);
    put_u32(os, kVersion);
    put_u64(os, static_cast<std::uint64_t>(store.adam_steps_));
    put_u64(os, store.entries_.size());
    for (const ParamStore::Entry& e : store.entries_) {
        put_u32(os, static_cast<std::uint32_t>(e.info.name.size()));
        os.write(e.info.name.data(), static_cast<std::streamsize>(e.info.name.size()));
        put_u64(os, e.info.rows);
        put_u64(os, e.info.cols);
        put_u32(os, static_cast<std::uint32_t>(e.info.group));
        put_u64(os, static_cast<std::uint64_t>(e.t));
        put_vec(os, e.value);
        put_vec(os, e.m);
        put_vec(os, e.v);
    }
    if (!os) throw MalformedInput(path, "write failed");
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileNotFound(path);
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw MalformedInput(path, "not a checkpoint file");
    const std::uint32_t version = get_u32(is, path);
    if (version != kVersion)
        throw MalformedInput(path, "unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t steps = get_u64(is, path);
    const std::uint64_t n = get_u64(is, path);
    if (n != store.entries_.size())
        throw IdMismatch("checkpoint has " + std::to_string(n) + " parameters, store has " +
                         std::to_string(store.entries_.size()));
    for (ParamStore::Entry& e : store.entries_) {
        const std::uint32_t name_len = get_u32(is, path);
        if (name_len > 4096) throw MalformedInput(path, "implausible name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw MalformedInput(path, "truncated checkpoint");
        if (name != e.info.name)
            throw IdMismatch("checkpoint parameter '" + name + "' where store expects '" +
                             e.info.name + "'");
        const std::uint64_t rows = get_u64(is, path);
        const std::uint64_t cols = get_u64(is, path);
        const std::uint32_t group = get_u32(is, path);
        if (rows != e.info.rows || cols != e.info.cols)
            throw IdMismatch("checkpoint shape for '" + name + "' is " + std::to_string(rows) +
                             "x" + std::to_string(cols) + ", store has " +
                             std::to_string(e.info.rows) + "x" + std::to_string(e.info.cols));
        if (group != static_cast<std::uint32_t>(e.info.group))
            throw IdMismatch("checkpoint group for '" + name + "' differs from store");
        e.t = static_cast<long>(get_u64(is, path));
        get_vec(is, e.value, path);
        get_vec(is, e.m, path);
        get_vec(is, e.v, path);
    }
    store.adam_steps_ = static_cast<long>(steps);
}

}  // namespace gpsql
