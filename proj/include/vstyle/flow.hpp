#pragma once

#include <functional>
#include <optional>

#include "vstyle/conditioning.hpp"
#include "vstyle/rng.hpp"
#include "vstyle/tensor.hpp"

namespace vstyle {

// Gaussian draws for one training example or one sampling run, fixed for its
// duration. eps_style/eps_first are single-frame.
struct NoiseDraw {
    Latent eps_video;
    Latent eps_style;
    Latent eps_first;
    uint64_t seed = 0;
};

NoiseDraw make_noise_draw(int latent_channels, int frames, int height, int width, uint64_t seed);

struct SamplerConfig {
    int steps = 16;
    uint64_t seed = 0;
};

// velocity target of the interpolation path z_t = t*z + (1-t)*eps
Latent velocity_target(const Latent& z_sty, const Latent& eps);

// Mean squared error between the prediction restricted to video tokens and
// the velocity target; condition-token predictions are excluded.
Tensor training_loss(const Tensor& pred, const Latent& target_velocity, const ModelInput& input);

// Per-token velocity prediction for an assembled input at time t. The real
// model and test oracles both implement this signature.
using VelocityFn = std::function<Tensor(const ModelInput&, float)>;

// Conditions for one sampling run. z_raw empty (zero) channels means the
// empty video condition. Style/first latents are single-frame.
struct SampleConditions {
    int latent_channels = 0;
    int frames = 0;
    int height = 0;  // latent-space dims
    int width = 0;
    std::optional<Latent> z_raw;
    std::optional<Latent> z_first;
    std::optional<Latent> z_style;
    AssembleOptions assemble_opts;
};

// Euler integration of the learned field from t=0 (noise) to t=1 (data).
// Condition slabs are rebuilt analytically at every step with their own fixed
// noise; the video slab's noisy part is the current integration state.
Video euler_sample(const VelocityFn& velocity, CondMode mode, const SampleConditions& cond, int patch,
                   const SamplerConfig& cfg);

// Latent-space variant (used by the chaining logic, which re-encodes frames).
Latent euler_sample_latent(const VelocityFn& velocity, CondMode mode, const SampleConditions& cond, int patch,
                           const SamplerConfig& cfg);

}  // namespace vstyle
