#include "vstyle/flow.hpp"

#include <stdexcept>

namespace vstyle {

Latent add_noise(const Latent& z, float t, const Latent& eps) {
    if (!z.same_shape(eps)) throw std::invalid_argument("add_noise: noise shape differs from latent");
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("add_noise: t outside [0,1]");
    Latent out = z;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = t * z.data[i] + (1.0f - t) * eps.data[i];
    }
    return out;
}

Latent velocity_target(const Latent& z_sty, const Latent& eps) {
    if (!z_sty.same_shape(eps)) throw std::invalid_argument("velocity_target: noise shape differs from latent");
    Latent out = z_sty;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = z_sty.data[i] - eps.data[i];
    return out;
}

NoiseDraw make_noise_draw(int latent_channels, int frames, int height, int width, uint64_t seed) {
    Rng rng(seed);
    NoiseDraw d;
    d.seed = seed;
    d.eps_video = Latent::zeros(latent_channels, frames, height, width);
    for (auto& v : d.eps_video.data) v = rng.normal();
    d.eps_style = Latent::zeros(latent_channels, 1, height, width);
    for (auto& v : d.eps_style.data) v = rng.normal();
    d.eps_first = Latent::zeros(latent_channels, 1, height, width);
    for (auto& v : d.eps_first.data) v = rng.normal();
    return d;
}

Tensor training_loss(const Tensor& pred, const Latent& target_velocity, const ModelInput& input) {
    if (pred.rank() != 2 || pred.dim(0) != input.tokens.tokens) {
        throw std::invalid_argument("training_loss: prediction must cover all " +
                                    std::to_string(input.tokens.tokens) + " tokens");
    }
    const int content_dim = input.latent_channels * input.patch * input.patch;
    if (pred.dim(1) != content_dim) {
        throw std::invalid_argument("training_loss: prediction dim " + std::to_string(pred.dim(1)) +
                                    " != latent content dim " + std::to_string(content_dim));
    }
    if (target_velocity.channels != input.latent_channels || target_velocity.frames != input.video_frames ||
        target_velocity.height != input.height || target_velocity.width != input.width) {
        throw std::invalid_argument("training_loss: target does not cover the video frames");
    }
    TokenSeq target_tokens = patchify(target_velocity, input.patch);
    Tensor target({target_tokens.tokens, target_tokens.dim}, std::move(target_tokens.data));
    Tensor video_pred = slice(pred, 0, input.video_token_start, input.video_token_len);
    return squared_error(video_pred, target);
}

namespace {

ModelInput build_step_input(CondMode mode, const SampleConditions& cond, const Latent& z_state, float t,
                            const NoiseDraw& noise, int patch) {
    Latent z_raw = cond.z_raw ? *cond.z_raw
                              : Latent::zeros(cond.latent_channels, cond.frames, cond.height, cond.width);
    // the integration state plays the role of the noisy stylized latent
    ConditionSlab video;
    video.kind = TokenType::video;
    video.mask_value = 0.0f;
    {
        const int cl = z_state.channels;
        Latent slab = Latent::zeros(2 * cl + kMaskChannels, z_state.frames, z_state.height, z_state.width);
        const int64_t plane = int64_t(z_state.frames) * z_state.height * z_state.width;
        std::copy(z_state.data.begin(), z_state.data.end(), slab.data.begin());
        std::fill(slab.data.begin() + cl * plane, slab.data.begin() + (cl + kMaskChannels) * plane, 0.0f);
        std::copy(z_raw.data.begin(), z_raw.data.end(), slab.data.begin() + (cl + kMaskChannels) * plane);
        video.tensor = std::move(slab);
    }
    std::optional<ConditionSlab> first, style;
    if (cond.z_first) first = build_first_frame_input(*cond.z_first, t, noise.eps_first);
    if (cond.z_style) style = build_style_image_input(*cond.z_style, t, noise.eps_style);
    return assemble(mode, video, first, style, patch, cond.assemble_opts);
}

}  // namespace

Latent euler_sample_latent(const VelocityFn& velocity, CondMode mode, const SampleConditions& cond, int patch,
                           const SamplerConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("euler_sample: steps must be >= 1");
    NoiseDraw noise = make_noise_draw(cond.latent_channels, cond.frames, cond.height, cond.width, cfg.seed);
    Latent z = noise.eps_video;
    const float dt = 1.0f / float(cfg.steps);
    for (int k = 0; k < cfg.steps; ++k) {
        const float t = float(k) / float(cfg.steps);
        ModelInput mi = build_step_input(mode, cond, z, t, noise, patch);
        Tensor pred = velocity(mi, t);
        Tensor video_pred = slice(pred, 0, mi.video_token_start, mi.video_token_len);
        TokenSeq vt;
        vt.tokens = mi.video_token_len;
        vt.dim = video_pred.dim(1);
        vt.data.assign(video_pred.data().begin(), video_pred.data().end());
        Latent vel = unpatchify(vt, cond.latent_channels, cond.frames, cond.height, cond.width, patch);
        for (size_t i = 0; i < z.data.size(); ++i) z.data[i] += dt * vel.data[i];
    }
    return z;
}

Video euler_sample(const VelocityFn& velocity, CondMode mode, const SampleConditions& cond, int patch,
                   const SamplerConfig& cfg) {
    return decode(euler_sample_latent(velocity, mode, cond, patch, cfg), kCodecStride, true);
}

}  // namespace vstyle
