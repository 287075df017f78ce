#include "vstyle/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vstyle {

namespace {

[[noreturn]] void data_error(const std::string& msg) { throw std::runtime_error(msg); }

void put_u32(std::ofstream& os, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

}  // namespace

Video Video::frame(int f) const {
    Video out = Video::zeros(1, height, width);
    std::memcpy(out.data.data(), data.data() + size_t(int64_t(f) * height * width * 3),
                size_t(int64_t(height) * width * 3) * sizeof(float));
    return out;
}

Latent Latent::frame(int f) const {
    Latent out = Latent::zeros(channels, 1, height, width);
    for (int c = 0; c < channels; ++c) {
        std::memcpy(out.data.data() + size_t(int64_t(c) * height * width),
                    data.data() + size_t((int64_t(c) * frames + f) * height * width),
                    size_t(int64_t(height) * width) * sizeof(float));
    }
    return out;
}

Latent encode(const Video& v, int stride) {
    if (v.height % stride != 0 || v.width % stride != 0) {
        data_error("encode: video " + std::to_string(v.height) + "x" + std::to_string(v.width) +
                   " not divisible by stride " + std::to_string(stride));
    }
    const int hl = v.height / stride, wl = v.width / stride;
    Latent z = Latent::zeros(3 * stride * stride, v.frames, hl, wl);
    for (int c = 0; c < 3; ++c) {
        for (int dy = 0; dy < stride; ++dy) {
            for (int dx = 0; dx < stride; ++dx) {
                const int cl = (c * stride + dy) * stride + dx;
                for (int f = 0; f < v.frames; ++f) {
                    for (int y = 0; y < hl; ++y) {
                        for (int x = 0; x < wl; ++x) {
                            z.at(cl, f, y, x) = v.at(f, y * stride + dy, x * stride + dx, c);
                        }
                    }
                }
            }
        }
    }
    return z;
}

Video decode(const Latent& z, int stride, bool clamp_output) {
    if (z.channels != 3 * stride * stride) {
        data_error("decode: latent has " + std::to_string(z.channels) + " channels, expected " +
                   std::to_string(3 * stride * stride));
    }
    Video v = Video::zeros(z.frames, z.height * stride, z.width * stride);
    for (int c = 0; c < 3; ++c) {
        for (int dy = 0; dy < stride; ++dy) {
            for (int dx = 0; dx < stride; ++dx) {
                const int cl = (c * stride + dy) * stride + dx;
                for (int f = 0; f < z.frames; ++f) {
                    for (int y = 0; y < z.height; ++y) {
                        for (int x = 0; x < z.width; ++x) {
                            float val = z.at(cl, f, y, x);
                            if (clamp_output) val = std::clamp(val, 0.0f, 1.0f);
                            v.at(f, y * stride + dy, x * stride + dx, c) = val;
                        }
                    }
                }
            }
        }
    }
    return v;
}

TokenSeq patchify(const Latent& slab, int patch) {
    if (slab.height % patch != 0 || slab.width % patch != 0) {
        data_error("patchify: spatial dims " + std::to_string(slab.height) + "x" + std::to_string(slab.width) +
                   " not divisible by patch " + std::to_string(patch));
    }
    const int gh = slab.height / patch, gw = slab.width / patch;
    TokenSeq t;
    t.tokens = slab.frames * gh * gw;
    t.dim = slab.channels * patch * patch;
    t.data.resize(size_t(int64_t(t.tokens) * t.dim));
    t.frame_index.resize(size_t(t.tokens));
    t.spatial_index.resize(size_t(t.tokens));
    int tok = 0;
    for (int f = 0; f < slab.frames; ++f) {
        for (int py = 0; py < gh; ++py) {
            for (int px = 0; px < gw; ++px, ++tok) {
                t.frame_index[size_t(tok)] = f;
                t.spatial_index[size_t(tok)] = py * gw + px;
                float* dst = t.data.data() + size_t(int64_t(tok) * t.dim);
                for (int c = 0; c < slab.channels; ++c) {
                    for (int dy = 0; dy < patch; ++dy) {
                        for (int dx = 0; dx < patch; ++dx) {
                            dst[(c * patch + dy) * patch + dx] = slab.at(c, f, py * patch + dy, px * patch + dx);
                        }
                    }
                }
            }
        }
    }
    return t;
}

Latent unpatchify(const TokenSeq& t, int channels, int frames, int height, int width, int patch) {
    if (int64_t(t.tokens) * t.dim != int64_t(channels) * frames * height * width) {
        data_error("unpatchify: token payload " + std::to_string(int64_t(t.tokens) * t.dim) +
                   " does not fill slab of size " + std::to_string(int64_t(channels) * frames * height * width));
    }
    if (t.dim != channels * patch * patch) data_error("unpatchify: token dim does not match channels*patch^2");
    const int gh = height / patch, gw = width / patch;
    Latent slab = Latent::zeros(channels, frames, height, width);
    int tok = 0;
    for (int f = 0; f < frames; ++f) {
        for (int py = 0; py < gh; ++py) {
            for (int px = 0; px < gw; ++px, ++tok) {
                const float* src = t.data.data() + size_t(int64_t(tok) * t.dim);
                for (int c = 0; c < channels; ++c) {
                    for (int dy = 0; dy < patch; ++dy) {
                        for (int dx = 0; dx < patch; ++dx) {
                            slab.at(c, f, py * patch + dy, px * patch + dx) = src[(c * patch + dy) * patch + dx];
                        }
                    }
                }
            }
        }
    }
    return slab;
}

// ---- files -----------------------------------------------------------------

void write_vtf(const std::string& path, int frames, int height, int width, int channels,
               const std::vector<float>& data) {
    if (int64_t(data.size()) != int64_t(frames) * height * width * channels) {
        data_error("write_vtf: data length mismatch for " + path);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) data_error("write_vtf: cannot open " + path);
    os.write("VTF1", 4);
    put_u32(os, uint32_t(frames));
    put_u32(os, uint32_t(height));
    put_u32(os, uint32_t(width));
    put_u32(os, uint32_t(channels));
    for (float v : data) {
        const uint32_t bits = std::bit_cast<uint32_t>(v);
        unsigned char b[4] = {(unsigned char)(bits & 0xff), (unsigned char)((bits >> 8) & 0xff),
                              (unsigned char)((bits >> 16) & 0xff), (unsigned char)((bits >> 24) & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 4);
    }
    if (!os) data_error("write_vtf: write failed for " + path);
}

VtfData read_vtf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) data_error("read_vtf: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VTF1", 4) != 0) data_error("read_vtf: bad magic in " + path);
    VtfData d;
    d.frames = int(get_u32(is));
    d.height = int(get_u32(is));
    d.width = int(get_u32(is));
    d.channels = int(get_u32(is));
    const int64_t n = int64_t(d.frames) * d.height * d.width * d.channels;
    if (!is || n < 0 || n > (int64_t(1) << 32)) data_error("read_vtf: bad header in " + path);
    d.data.resize(size_t(n));
    for (int64_t i = 0; i < n; ++i) {
        unsigned char b[4];
        is.read(reinterpret_cast<char*>(b), 4);
        const uint32_t bits =
            uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
        d.data[size_t(i)] = std::bit_cast<float>(bits);
    }
    if (!is) data_error("read_vtf: truncated file " + path);
    return d;
}

void write_video_vtf(const std::string& path, const Video& v) {
    write_vtf(path, v.frames, v.height, v.width, 3, v.data);
}

Video read_video_vtf(const std::string& path) {
    VtfData d = read_vtf(path);
    if (d.channels != 3) data_error("read_video_vtf: " + path + " has " + std::to_string(d.channels) + " channels");
    return Video{d.frames, d.height, d.width, std::move(d.data)};
}

void write_maps_vtf(const std::string& path, const FrameMaps& m) {
    write_vtf(path, m.frames, m.height, m.width, 1, m.data);
}

FrameMaps read_maps_vtf(const std::string& path) {
    VtfData d = read_vtf(path);
    if (d.channels != 1) data_error("read_maps_vtf: " + path + " has " + std::to_string(d.channels) + " channels");
    return FrameMaps{d.frames, d.height, d.width, std::move(d.data)};
}

void write_ppm(const std::string& path, const Video& v, int frame) {
    std::ofstream os(path, std::ios::binary);
    if (!os) data_error("write_ppm: cannot open " + path);
    os << "P6\n" << v.width << " " << v.height << "\n255\n";
    for (int y = 0; y < v.height; ++y) {
        for (int x = 0; x < v.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float val = std::clamp(v.at(frame, y, x, c), 0.0f, 1.0f);
                const unsigned char b = (unsigned char)std::lround(255.0f * val);
                os.write(reinterpret_cast<const char*>(&b), 1);
            }
        }
    }
}

void export_ppm_frames(const std::string& dir_prefix, const Video& v) {
    for (int f = 0; f < v.frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03d.ppm", f);
        write_ppm(dir_prefix + name, v, f);
    }
}

}  // namespace vstyle
