#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vstyle {

// Raw pixel video, F x H x W x 3 row-major, values in [0,1].
struct Video {
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    float& at(int f, int y, int x, int c) {
        return data[size_t(((int64_t(f) * height + y) * width + x) * 3 + c)];
    }
    float at(int f, int y, int x, int c) const {
        return data[size_t(((int64_t(f) * height + y) * width + x) * 3 + c)];
    }
    int64_t numel() const { return int64_t(frames) * height * width * 3; }
    bool same_geometry(const Video& o) const {
        return frames == o.frames && height == o.height && width == o.width;
    }
    static Video zeros(int f, int h, int w) {
        return Video{f, h, w, std::vector<float>(size_t(int64_t(f) * h * w * 3), 0.0f)};
    }
    Video frame(int f) const;  // single-frame copy
};

// Codec-space slab, C x F x H x W row-major. Used both for latents proper
// (C == 3*s^2) and for condition slabs with extra channels.
struct Latent {
    int channels = 0;
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    float& at(int c, int f, int y, int x) {
        return data[size_t(((int64_t(c) * frames + f) * height + y) * width + x)];
    }
    float at(int c, int f, int y, int x) const {
        return data[size_t(((int64_t(c) * frames + f) * height + y) * width + x)];
    }
    int64_t numel() const { return int64_t(channels) * frames * height * width; }
    bool same_shape(const Latent& o) const {
        return channels == o.channels && frames == o.frames && height == o.height && width == o.width;
    }
    static Latent zeros(int c, int f, int h, int w) {
        return Latent{c, f, h, w, std::vector<float>(size_t(int64_t(c) * f * h * w), 0.0f)};
    }
    Latent frame(int f) const;  // single-frame copy, all channels
};

// Single-channel per-frame maps (edge controls, subject masks).
struct FrameMaps {
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    float& at(int f, int y, int x) { return data[size_t((int64_t(f) * height + y) * width + x)]; }
    float at(int f, int y, int x) const { return data[size_t((int64_t(f) * height + y) * width + x)]; }
    static FrameMaps zeros(int f, int h, int w) {
        return FrameMaps{f, h, w, std::vector<float>(size_t(int64_t(f) * h * w), 0.0f)};
    }
};

// Token matrix T x D with per-token provenance.
struct TokenSeq {
    int tokens = 0;
    int dim = 0;
    std::vector<float> data;
    std::vector<int> frame_index;
    std::vector<int> spatial_index;

    float& at(int t, int d) { return data[size_t(int64_t(t) * dim + d)]; }
    float at(int t, int d) const { return data[size_t(int64_t(t) * dim + d)]; }
};

inline constexpr int kCodecStride = 2;
inline constexpr int kLatentChannels = 3 * kCodecStride * kCodecStride;  // 12

// Space-to-channel codec: each s x s pixel block of each color channel
// becomes s^2 latent channels. Exactly invertible, frame count preserved.
Latent encode(const Video& v, int stride = kCodecStride);
Video decode(const Latent& z, int stride = kCodecStride, bool clamp_output = false);

// Frame-major, then row-major spatial tokenization of a C-channel slab.
TokenSeq patchify(const Latent& slab, int patch);
Latent unpatchify(const TokenSeq& t, int channels, int frames, int height, int width, int patch);

// ---- file formats ----------------------------------------------------------
// .vtf: magic "VTF1", four LE u32 (F,H,W,C), then F*H*W*C LE f32 values.
void write_vtf(const std::string& path, int frames, int height, int width, int channels,
               const std::vector<float>& data);
struct VtfData {
    int frames, height, width, channels;
    std::vector<float> data;
};
VtfData read_vtf(const std::string& path);

void write_video_vtf(const std::string& path, const Video& v);
Video read_video_vtf(const std::string& path);
void write_maps_vtf(const std::string& path, const FrameMaps& m);
FrameMaps read_maps_vtf(const std::string& path);

// Binary PPM (P6), 8-bit, value = round(255*clamp(v,0,1)).
void write_ppm(const std::string& path, const Video& v, int frame);
void export_ppm_frames(const std::string& dir_prefix, const Video& v);

}  // namespace vstyle
