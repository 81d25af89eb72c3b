#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "geomsplat/rng.hpp"
#include "geomsplat/tensor.hpp"

namespace geomsplat {

// Named parameter set plus per-parameter AdamW state. Iteration follows
// insertion order so optimizer sweeps are deterministic.
class ParamStore {
public:
    struct Entry {
        std::string id;
        Tensor tensor;
        std::vector<double> m;  // first moment
        std::vector<double> v;  // second moment
        int64_t step = 0;
        bool trainable = true;
    };

    Tensor add(const std::string& id, Tensor t, bool trainable = true);
    Tensor add_uniform(const std::string& id, std::vector<int> shape, double lo, double hi,
                       Rng& rng, bool trainable = true);

    bool contains(const std::string& id) const;
    Tensor get(const std::string& id) const;
    Entry& entry(const std::string& id);
    const Entry& entry(const std::string& id) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    size_t size() const { return entries_.size(); }

    void zero_grad();
    // Sum of |g| over every trainable parameter whose id starts with `prefix`.
    double grad_abs_sum(const std::string& prefix = "") const;

    // FNV-1a over ids, shapes and exact value bytes; order-sensitive.
    uint64_t content_hash() const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam step over trainable parameters. Parameters
// whose gradient buffer was never touched by backward are skipped entirely
// (no update, no decay, no moment change), so gated-off heads stay at their
// initialization.
void adamw_step(ParamStore& store, double lr, double weight_decay,
                const AdamWConfig& cfg = {});

// Checkpoint container: a self-describing text format, one parameter per
// record. Values round-trip exactly (printed with max_digits10).
void save_checkpoint(const ParamStore& store, const std::string& path);
// Loads values into matching parameters. With strict=true every stored record
// must match an existing parameter in shape, and vice versa.
void load_checkpoint(ParamStore& store, const std::string& path, bool strict = true);

}  // namespace geomsplat
