#include "geomsplat/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "geomsplat/errors.hpp"

namespace geomsplat {

Tensor ParamStore::add(const std::string& id, Tensor t, bool trainable) {
    if (index_.count(id)) throw ConfigError("param store: duplicate id " + id);
    Entry e;
    e.id = id;
    e.tensor = t;
    e.m.assign(t.numel(), 0.0);
    e.v.assign(t.numel(), 0.0);
    e.trainable = trainable;
    index_[id] = entries_.size();
    entries_.push_back(std::move(e));
    return t;
}

Tensor ParamStore::add_uniform(const std::string& id, std::vector<int> shape, double lo,
                               double hi, Rng& rng, bool trainable) {
    Tensor t = Tensor::zeros(shape, true);
    auto d = t.mutable_data();
    for (auto& v : d) v = rng.uniform(lo, hi);
    return add(id, t, trainable);
}

bool ParamStore::contains(const std::string& id) const { return index_.count(id) > 0; }

Tensor ParamStore::get(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ConfigError("param store: unknown id " + id);
    return entries_[it->second].tensor;
}

ParamStore::Entry& ParamStore::entry(const std::string& id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw ConfigError("param store: unknown id " + id);
    return entries_[it->second];
}

const ParamStore::Entry& ParamStore::entry(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ConfigError("param store: unknown id " + id);
    return entries_[it->second];
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.tensor.clear_grad();
}

double ParamStore::grad_abs_sum(const std::string& prefix) const {
    double acc = 0.0;
    for (const auto& e : entries_) {
        if (!e.id.starts_with(prefix)) continue;
        for (double g : e.tensor.grad()) acc += std::fabs(g);
    }
    return acc;
}

uint64_t ParamStore::content_hash() const {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& e : entries_) {
        mix(e.id.data(), e.id.size());
        for (int d : e.tensor.shape()) mix(&d, sizeof(d));
        auto data = e.tensor.data();
        mix(data.data(), data.size() * sizeof(double));
    }
    return h;
}

void adamw_step(ParamStore& store, double lr, double weight_decay, const AdamWConfig& cfg) {
    if (lr <= 0.0) throw ConfigError("adamw: learning rate must be positive");
    for (auto& e : store.entries()) {
        if (!e.trainable) continue;
        auto g = e.tensor.grad();
        if (g.empty()) continue;  // unreachable this step: no update, no decay
        e.step += 1;
        auto theta = e.tensor.mutable_data();
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
        for (size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * gi;
            e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = e.m[i] / bc1;
            const double vhat = e.v[i] / bc2;
            theta[i] -= lr * weight_decay * theta[i];
            theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << "GEOMSPLAT-CKPT 1\n";
    out.precision(17);
    for (const auto& e : store.entries()) {
        out << "param " << e.id << ' ' << (e.trainable ? 1 : 0) << ' ' << e.tensor.shape().size();
        for (int d : e.tensor.shape()) out << ' ' << d;
        out << '\n';
        auto data = e.tensor.data();
        for (size_t i = 0; i < data.size(); ++i)
            out << data[i] << (i + 1 == data.size() ? '\n' : ' ');
        if (data.empty()) out << '\n';
    }
    out << "end\n";
    if (!out) throw IoError("checkpoint write failed: " + path);
}

void load_checkpoint(ParamStore& store, const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "GEOMSPLAT-CKPT" || version != 1)
        throw IoError("not a checkpoint file: " + path);
    size_t loaded = 0;
    std::string tok;
    while (in >> tok) {
        if (tok == "end") break;
        if (tok != "param") throw IoError("malformed checkpoint record in " + path);
        std::string id;
        int trainable = 0, ndim = 0;
        in >> id >> trainable >> ndim;
        std::vector<int> shape(ndim);
        int64_t numel = 1;
        for (int i = 0; i < ndim; ++i) {
            in >> shape[i];
            numel *= shape[i];
        }
        std::vector<double> values(numel);
        for (auto& v : values) in >> v;
        if (!in) throw IoError("truncated checkpoint: " + path);
        if (!store.contains(id)) {
            if (strict) throw ConfigError("checkpoint has unknown parameter " + id);
            continue;
        }
        auto& e = store.entry(id);
        if (e.tensor.shape() != shape)
            throw ConfigError("checkpoint shape mismatch for parameter " + id);
        auto dst = e.tensor.mutable_data();
        std::copy(values.begin(), values.end(), dst.begin());
        ++loaded;
    }
    if (strict && loaded != store.size())
        throw ConfigError("checkpoint is missing parameters (" + std::to_string(loaded) + "/" +
                          std::to_string(store.size()) + ")");
}

}  // namespace geomsplat
