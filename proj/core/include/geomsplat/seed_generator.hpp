#pragma once

#include <string>
#include <vector>

#include "geomsplat/mlp.hpp"
#include "geomsplat/volume.hpp"

namespace geomsplat {

// Learnable voxel queries on a regular d x d x d lattice. Reference
// positions are lattice cell centers in [0,1]^3; mapped affinely into the
// volume bounds when sampling.
struct VoxelQuerySet {
    int d = 0;
    int channels = 0;
    Tensor queries;                            // [d^3, C], learnable
    std::vector<double> reference_positions;   // d^3 * 3, normalized lattice

    int count() const { return d * d * d; }
    static VoxelQuerySet create(ParamStore& store, const std::string& prefix, int d,
                                int channels, Rng& rng);
    static VoxelQuerySet attach(ParamStore& store, const std::string& prefix, int d,
                                int channels);

    // lattice positions mapped into the given box, as a constant [d^3,3] tensor
    Tensor world_reference_positions(const Bounds& bounds) const;
};

struct CoarseAttnParams {
    Tensor wq, wk, wv;  // [C, C] each
    static CoarseAttnParams create(ParamStore& store, const std::string& prefix, int channels,
                                   Rng& rng);
    static CoarseAttnParams attach(ParamStore& store, const std::string& prefix);
};

struct CoarseAttnResult {
    Tensor proposals;  // [d^3, C]
    Tensor weights;    // [d^3, d^3], rows sum to 1
};

// Single-head cross-attention between the voxel queries and the volume
// average-pooled to the query resolution. `logit_bias` ([1, d^3] or d^3)
// is added to every row of the raw logits when provided.
CoarseAttnResult coarse_cross_attention(const VoxelQuerySet& queries, const DenseVolume& volume,
                                        const CoarseAttnParams& params,
                                        const Tensor* logit_bias = nullptr);

struct DeformableAttnParams {
    int offsets_per_query = 8;          // N_p
    double offset_cap_fraction = 0.25;  // of the volume extent, per axis
    MlpBlock offset_head;               // C -> ... -> N_p*3
    MlpBlock cpb;                       // 3 -> ... -> 1, bias on relative position
    Tensor wq, wk, wv;
    bool use_cpb = true;

    static DeformableAttnParams create(ParamStore& store, const std::string& prefix,
                                       int channels, int offsets_per_query, int hidden,
                                       Rng& rng);
    static DeformableAttnParams attach(ParamStore& store, const std::string& prefix,
                                       int channels, int offsets_per_query, int hidden);
};

struct DeformableAttnResult {
    Tensor tokens;                          // [d^3, C] seed tokens
    Tensor weights;                         // [d^3, N_p], rows sum to 1
    std::vector<double> sample_positions;   // (d^3*N_p)*3 world coords, for inspection
    long long fetches = 0;                  // trilinear volume fetches performed
};

// Each query fetches the volume at N_p offset locations around its reference
// position (offsets tanh-capped to offset_cap_fraction of the extent), scores
// them with query-key logits plus the continuous positional bias, and returns
// the softmax-weighted sum of value-projected fetches.
DeformableAttnResult deformable_cross_attention(const Tensor& proposals,
                                                const VoxelQuerySet& queries,
                                                const DenseVolume& volume,
                                                const DeformableAttnParams& params);

struct FullAttnResult {
    Tensor tokens;
    long long fetches = 0;  // num_queries * D^3
};

// Dense reference: every query attends over all D^3 cells. Used as the cost
// baseline for the fetch-count comparison.
FullAttnResult full_cross_attention(const Tensor& proposals, const DenseVolume& volume,
                                    const CoarseAttnParams& params);

// Decodes seed tokens to world coordinates, tanh-squashed into the bounds so
// a zero decoder lands every seed at the workspace center.
Tensor decode_seeds(const Tensor& seed_tokens, const MlpBlock& decoder, const Bounds& bounds);

}  // namespace geomsplat
