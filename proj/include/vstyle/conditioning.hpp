#pragma once

#include <optional>
#include <vector>

#include "vstyle/codec.hpp"

namespace vstyle {

inline constexpr int kMaskChannels = 4;

// Token types used for LoRA routing and mask conventions.
enum class TokenType : int { first_frame = 0, video = 1, style_image = 2 };

enum class CondMode { text, style_image, first_frame, fused };

// slab layout along channels: [noisy C_l | mask 4 | clean-condition C_l]
struct ConditionSlab {
    Latent tensor;
    TokenType kind = TokenType::video;
    float mask_value = 0.0f;
};

struct TypeRun {
    int type = 0;
    int start = 0;
    int len = 0;
};

// The assembled model input: patchified condition slabs in frame order
// [first? | video | style?], with per-token type labels.
struct ModelInput {
    TokenSeq tokens;
    std::vector<int> type_map;             // 0 first-frame, 1 video, 2 style
    std::vector<TypeRun> type_runs;        // contiguous runs of equal type
    std::vector<float> frame_positions;    // -1 for first slab, 0..F-1 video, F style
    int video_token_start = 0;
    int video_token_len = 0;
    CondMode mode = CondMode::text;
    // geometry needed to reconstruct slabs
    int channels = 0;
    int latent_channels = 0;
    int video_frames = 0;
    int height = 0;
    int width = 0;
    int patch = 0;
    bool has_first = false;
    bool has_style = false;
};

// z_t = t*z + (1-t)*eps; declared here because slab construction uses it,
// defined with the rest of the flow-matching machinery.
Latent add_noise(const Latent& z, float t, const Latent& eps);

// Eq.-(2)-style slab for a single style reference frame: mask filled with 1.0,
// clean part carries the reference latent itself.
ConditionSlab build_style_image_input(const Latent& z_style, float t, const Latent& eps);

// Video slab: noisy stylized latent, mask 0.0, clean raw-video latent. For
// empty-video conditioning pass a zero z_raw.
ConditionSlab build_video_input(const Latent& z_sty, const Latent& z_raw, float t, const Latent& eps);

// First-frame slab, identical composition to the style-image slab.
ConditionSlab build_first_frame_input(const Latent& z_first, float t, const Latent& eps);

struct AssembleOptions {
    // ablation arm: style slab mask rewritten to -1.0 so a standard LoRA can
    // tell token groups apart by mask value alone
    bool style_mask_negative = false;
};

ModelInput assemble(CondMode mode, const ConditionSlab& video_slab, const std::optional<ConditionSlab>& first_slab,
                    const std::optional<ConditionSlab>& style_slab, int patch, const AssembleOptions& opts = {});

// Inverse of assemble: recover the per-part slabs bitwise.
struct DisassembledInput {
    std::optional<Latent> first;
    Latent video;
    std::optional<Latent> style;
};
DisassembledInput disassemble(const ModelInput& input);

// Reads the mask channels back from an assembled token; errors if the token's
// mask entries disagree with each other.
float token_mask_value(const ModelInput& input, int token);

}  // namespace vstyle
