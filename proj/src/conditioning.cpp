#include "vstyle/conditioning.hpp"

#include <cstring>
#include <stdexcept>

namespace vstyle {

namespace {

// [noisy | mask | clean] along channels
Latent compose_slab(const Latent& noisy, float mask_value, const Latent& clean) {
    const int cl = noisy.channels;
    Latent slab = Latent::zeros(2 * cl + kMaskChannels, noisy.frames, noisy.height, noisy.width);
    const int64_t plane = int64_t(noisy.frames) * noisy.height * noisy.width;
    std::memcpy(slab.data.data(), noisy.data.data(), size_t(cl * plane) * sizeof(float));
    std::fill(slab.data.begin() + cl * plane, slab.data.begin() + (cl + kMaskChannels) * plane, mask_value);
    std::memcpy(slab.data.data() + (cl + kMaskChannels) * plane, clean.data.data(),
                size_t(cl * plane) * sizeof(float));
    return slab;
}

}  // namespace

ConditionSlab build_style_image_input(const Latent& z_style, float t, const Latent& eps) {
    if (z_style.frames != 1) {
        throw std::invalid_argument("build_style_image_input: style latent must be single-frame, got " +
                                    std::to_string(z_style.frames));
    }
    return ConditionSlab{compose_slab(add_noise(z_style, t, eps), 1.0f, z_style), TokenType::style_image, 1.0f};
}

ConditionSlab build_video_input(const Latent& z_sty, const Latent& z_raw, float t, const Latent& eps) {
    if (!z_sty.same_shape(z_raw)) {
        throw std::invalid_argument("build_video_input: stylized and raw latents differ in shape");
    }
    return ConditionSlab{compose_slab(add_noise(z_sty, t, eps), 0.0f, z_raw), TokenType::video, 0.0f};
}

ConditionSlab build_first_frame_input(const Latent& z_first, float t, const Latent& eps) {
    if (z_first.frames != 1) {
        throw std::invalid_argument("build_first_frame_input: first-frame latent must be single-frame, got " +
                                    std::to_string(z_first.frames));
    }
    return ConditionSlab{compose_slab(add_noise(z_first, t, eps), 1.0f, z_first), TokenType::first_frame, 1.0f};
}

ModelInput assemble(CondMode mode, const ConditionSlab& video_slab, const std::optional<ConditionSlab>& first_slab,
                    const std::optional<ConditionSlab>& style_slab, int patch, const AssembleOptions& opts) {
    if (video_slab.kind != TokenType::video) throw std::invalid_argument("assemble: video slab has wrong kind");
    switch (mode) {
        case CondMode::text:
            if (first_slab || style_slab) throw std::invalid_argument("assemble: text mode takes no extra slabs");
            break;
        case CondMode::style_image:
            if (!style_slab || first_slab) throw std::invalid_argument("assemble: style_image mode needs exactly the style slab");
            break;
        case CondMode::first_frame:
            if (!first_slab || style_slab) throw std::invalid_argument("assemble: first_frame mode needs exactly the first slab");
            break;
        case CondMode::fused:
            if (!first_slab && !style_slab) throw std::invalid_argument("assemble: fused mode needs at least one extra slab");
            break;
    }

    const Latent& vz = video_slab.tensor;
    for (const auto& s : {&first_slab, &style_slab}) {
        if (s->has_value()) {
            const Latent& o = (*s)->tensor;
            if (o.channels != vz.channels || o.height != vz.height || o.width != vz.width) {
                throw std::invalid_argument("assemble: condition slab geometry mismatch");
            }
        }
    }

    // frame-wise order: [first?] ++ video ++ [style?]
    const int f_first = first_slab ? 1 : 0;
    const int f_style = style_slab ? 1 : 0;
    Latent all = Latent::zeros(vz.channels, f_first + vz.frames + f_style, vz.height, vz.width);
    const int64_t plane = int64_t(vz.height) * vz.width;
    const int total_frames = all.frames;
    auto copy_frames = [&](const Latent& src, int dst_frame) {
        for (int c = 0; c < all.channels; ++c) {
            for (int f = 0; f < src.frames; ++f) {
                std::memcpy(all.data.data() + (int64_t(c) * total_frames + dst_frame + f) * plane,
                            src.data.data() + (int64_t(c) * src.frames + f) * plane, size_t(plane) * sizeof(float));
            }
        }
    };
    if (first_slab) copy_frames(first_slab->tensor, 0);
    copy_frames(vz, f_first);
    if (style_slab) {
        Latent st = style_slab->tensor;
        if (opts.style_mask_negative) {
            const int cl = (st.channels - kMaskChannels) / 2;
            const int64_t splane = int64_t(st.frames) * st.height * st.width;
            std::fill(st.data.begin() + cl * splane, st.data.begin() + (cl + kMaskChannels) * splane, -1.0f);
        }
        copy_frames(st, f_first + vz.frames);
    }

    ModelInput mi;
    mi.tokens = patchify(all, patch);
    mi.mode = mode;
    mi.channels = all.channels;
    mi.latent_channels = (all.channels - kMaskChannels) / 2;
    mi.video_frames = vz.frames;
    mi.height = vz.height;
    mi.width = vz.width;
    mi.patch = patch;
    mi.has_first = bool(first_slab);
    mi.has_style = bool(style_slab);

    const int tokens_per_frame = (vz.height / patch) * (vz.width / patch);
    mi.video_token_start = f_first * tokens_per_frame;
    mi.video_token_len = vz.frames * tokens_per_frame;
    mi.type_map.resize(size_t(mi.tokens.tokens));
    mi.frame_positions.resize(size_t(mi.tokens.tokens));
    for (int i = 0; i < mi.tokens.tokens; ++i) {
        const int f = mi.tokens.frame_index[size_t(i)];
        if (first_slab && f < f_first) {
            mi.type_map[size_t(i)] = int(TokenType::first_frame);
            mi.frame_positions[size_t(i)] = -1.0f;
        } else if (f < f_first + vz.frames) {
            mi.type_map[size_t(i)] = int(TokenType::video);
            mi.frame_positions[size_t(i)] = float(f - f_first);
        } else {
            mi.type_map[size_t(i)] = int(TokenType::style_image);
            mi.frame_positions[size_t(i)] = float(vz.frames);
        }
    }
    if (first_slab) mi.type_runs.push_back({int(TokenType::first_frame), 0, tokens_per_frame});
    mi.type_runs.push_back({int(TokenType::video), mi.video_token_start, mi.video_token_len});
    if (style_slab) {
        mi.type_runs.push_back({int(TokenType::style_image), mi.video_token_start + mi.video_token_len,
                                tokens_per_frame});
    }
    return mi;
}

DisassembledInput disassemble(const ModelInput& input) {
    const int f_first = input.has_first ? 1 : 0;
    const int f_style = input.has_style ? 1 : 0;
    const int total_frames = f_first + input.video_frames + f_style;
    Latent all = unpatchify(input.tokens, input.channels, total_frames, input.height, input.width, input.patch);

    auto take = [&](int from, int count) {
        Latent out = Latent::zeros(all.channels, count, all.height, all.width);
        const int64_t plane = int64_t(all.height) * all.width;
        for (int c = 0; c < all.channels; ++c) {
            for (int f = 0; f < count; ++f) {
                std::memcpy(out.data.data() + (int64_t(c) * count + f) * plane,
                            all.data.data() + (int64_t(c) * total_frames + from + f) * plane,
                            size_t(plane) * sizeof(float));
            }
        }
        return out;
    };

    DisassembledInput d{std::nullopt, take(f_first, input.video_frames), std::nullopt};
    if (input.has_first) d.first = take(0, 1);
    if (input.has_style) d.style = take(f_first + input.video_frames, 1);
    return d;
}

float token_mask_value(const ModelInput& input, int token) {
    const int cl = input.latent_channels;
    const int per_channel = input.patch * input.patch;
    const float v = input.tokens.at(token, cl * per_channel);
    for (int c = cl; c < cl + kMaskChannels; ++c) {
        for (int i = 0; i < per_channel; ++i) {
            if (input.tokens.at(token, c * per_channel + i) != v) {
                throw std::runtime_error("token_mask_value: mask entries disagree within a token");
            }
        }
    }
    return v;
}

}  // namespace vstyle
