#pragma once

#include <string>
#include <vector>

#include "geomsplat/keyframes.hpp"
#include "geomsplat/mlp.hpp"
#include "geomsplat/volume.hpp"

namespace geomsplat {

struct PolicyConfig {
    int token_dim = 64;    // C_tok
    int num_latents = 64;  // M
    int patch_size = 8;    // 2D patches over the RGB-D input
    int volume_patch = 2;  // 3D patches over the frozen volume
    int hidden = 64;
    int num_tasks = 4;
    int task_emb_dim = 8;
    int attn_blocks = 2;
};

// Latent token bundle; role is bookkeeping only.
enum class TokenRole { PolicyLatent, PredictedNext, Reference, ReferenceNext };

struct LatentTokens {
    Tensor tokens;  // [M, C_tok]
    TokenRole role = TokenRole::PolicyLatent;
};

// Patch-embedding encoder with learnable latents attending to image patches,
// plus the latent dynamics model and action head.
struct PolicyModel {
    PolicyConfig cfg;
    ParamStore store;

    Tensor patch_w, patch_b;  // (p*p*4) -> C_tok
    Tensor latents;           // [M, C_tok]
    struct AttnBlock {
        Tensor wq, wk, wv;
        MlpBlock mlp;
    };
    std::vector<AttnBlock> blocks;
    MlpBlock dynamics_head;  // [C_tok + 8 + E] -> ... -> C_tok (residual delta)
    Tensor task_table;       // [num_tasks, E]
    MlpBlock action_head;    // C_tok -> ... -> 8
    Tensor ref_projection;   // [C_vol, C_tok], fixed (not trained)

    static PolicyModel create(const PolicyConfig& cfg, int volume_channels, uint64_t seed);
};

// Deterministic encoding of one RGB-D observation into M latent tokens.
LatentTokens encode_policy(const Observation& obs, const PolicyModel& model);

struct ReferenceTokenStats {
    int zero_norm_tokens = 0;
};

// Mean-pools non-overlapping volume_patch^3 blocks of the (frozen) volume,
// maps them through the fixed projection, and keeps the M largest-norm
// tokens (ties by index). The result is a constant: no gradient can reach
// the volume. Requires D divisible by volume_patch and at least M patches.
LatentTokens reference_tokens(const DenseVolume& volume, const PolicyModel& model);

// Residual latent transition conditioned on proprioception and the task
// embedding; zero-weight delta head makes it the identity map.
LatentTokens latent_dynamics(const LatentTokens& x, const Proprio& proprio, int task_id,
                             const PolicyModel& model);

// Pools tokens and decodes an 8-dof action: free position, unit quaternion
// (normalized around +w), sigmoid gripper. Returns a [1,8] tensor.
Tensor decode_action(const LatentTokens& next_tokens, const PolicyModel& model);

struct DistillLoss {
    Tensor total;          // sum of the two per-step terms
    double step_t = 0.0;   // L_cos(x^t, ref^t)
    double step_t1 = 0.0;  // L_cos(x̂^{t+1}, ref^{t+1})
    int zero_norm_tokens = 0;
};

// Two-step cosine alignment; reference sides are constants, so the gradient
// stops there. Token pairs where either side has zero norm contribute 0 and
// bump the warning counter.
DistillLoss distill_loss(const LatentTokens& x_t, const LatentTokens& ref_t,
                         const LatentTokens& x_next, const LatentTokens& ref_next);

struct PolicyLoss {
    Tensor total;
    double action_term = 0.0;
    double distill_term = 0.0;
};

// ||a - a*||^2 + lambda * distill
PolicyLoss policy_loss(const Tensor& action, const std::array<double, 8>& expert,
                       const Tensor& distill, double lambda_distill);

// mean over rows of (1 - cosine similarity); b acts as a constant target.
Tensor mean_one_minus_cosine(const Tensor& a, const Tensor& b, int* zero_norm_counter = nullptr);

}  // namespace geomsplat
