#include "vstyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vstyle/rng.hpp"

namespace vstyle {

namespace {

float luminance(const Video& v, int f, int y, int x) {
    return 0.299f * v.at(f, y, x, 0) + 0.587f * v.at(f, y, x, 1) + 0.114f * v.at(f, y, x, 2);
}

int clamp_idx(int v, int lo, int hi) { return std::clamp(v, lo, hi); }

// 8 seeded 3x3 filters, zero-meaned so flat regions give no response, and
// rescaled so the Gram block and the histogram block land on comparable
// magnitudes after pooling.
std::vector<float> filter_bank(const MetricConfig& cfg) {
    Rng rng(cfg.filter_bank_seed);
    std::vector<float> bank(size_t(kStyleFilterCount) * 9);
    for (int k = 0; k < kStyleFilterCount; ++k) {
        float* f = bank.data() + k * 9;
        float mean = 0.0f;
        for (int i = 0; i < 9; ++i) {
            f[i] = rng.normal();
            mean += f[i];
        }
        float norm = 0.0f;
        for (int i = 0; i < 9; ++i) {
            f[i] -= mean / 9.0f;
            norm += f[i] * f[i];
        }
        const float scale = 3.5f / std::sqrt(norm);
        for (int i = 0; i < 9; ++i) f[i] *= scale;
    }
    return bank;
}

void l2_normalize(std::vector<float>& v) {
    double n = 0.0;
    for (float x : v) n += double(x) * x;
    if (n > 0.0) {
        const float inv = float(1.0 / std::sqrt(n));
        for (float& x : v) x *= inv;
    }
}

std::vector<float> descriptor_impl(const Video& v, int frame, const FrameMaps* masks, bool keep_subject,
                                   const MetricConfig& cfg) {
    static const std::vector<float> bank = filter_bank(MetricConfig{});
    const int H = v.height, W = v.width;

    auto in_region = [&](int y, int x) {
        if (!masks) return true;
        const bool subject = masks->at(frame, y, x) > 0.5f;
        return subject == keep_subject;
    };

    // filter responses over luminance, replicate padding
    std::vector<float> resp(size_t(kStyleFilterCount) * H * W, 0.0f);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            float window[9];
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    window[(dy + 1) * 3 + (dx + 1)] =
                        luminance(v, frame, clamp_idx(y + dy, 0, H - 1), clamp_idx(x + dx, 0, W - 1));
                }
            }
            for (int k = 0; k < kStyleFilterCount; ++k) {
                float acc = 0.0f;
                for (int i = 0; i < 9; ++i) acc += bank[size_t(k * 9 + i)] * window[i];
                resp[size_t((k * H + y) * W + x)] = acc;
            }
        }
    }

    int64_t count = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (in_region(y, x)) ++count;
        }
    }
    std::vector<float> desc(kStyleDescriptorDim, 0.0f);
    if (count == 0) return desc;

    // upper-triangle Gram of the responses, mean-pooled over the region
    int idx = 0;
    for (int a = 0; a < kStyleFilterCount; ++a) {
        for (int b = a; b < kStyleFilterCount; ++b, ++idx) {
            double acc = 0.0;
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    if (!in_region(y, x)) continue;
                    acc += double(resp[size_t((a * H + y) * W + x)]) * resp[size_t((b * H + y) * W + x)];
                }
            }
            desc[size_t(idx)] = float(acc / double(count));
        }
    }

    // 8-bin histogram per RGB channel
    const int bins = cfg.histogram_bins_per_channel;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (!in_region(y, x)) continue;
                const float val = std::clamp(v.at(frame, y, x, c), 0.0f, 1.0f);
                const int b = std::min(bins - 1, int(val * float(bins)));
                desc[size_t(idx + c * bins + b)] += 1.0f;
            }
        }
    }
    for (int i = idx; i < kStyleDescriptorDim; ++i) desc[size_t(i)] /= float(count);

    // balance the two blocks before the final normalization so neither the
    // texture statistics nor the color statistics can drown the other
    auto normalize_range = [&](int lo, int hi) {
        double n = 0.0;
        for (int i = lo; i < hi; ++i) n += double(desc[size_t(i)]) * desc[size_t(i)];
        if (n > 0.0) {
            const float inv = float(1.0 / std::sqrt(n));
            for (int i = lo; i < hi; ++i) desc[size_t(i)] *= inv;
        }
    };
    normalize_range(0, idx);
    normalize_range(idx, kStyleDescriptorDim);

    l2_normalize(desc);
    return desc;
}

}  // namespace

std::vector<float> style_descriptor(const Video& v, int frame, const MetricConfig& cfg) {
    return descriptor_impl(v, frame, nullptr, true, cfg);
}

std::vector<float> style_descriptor_masked(const Video& v, int frame, const FrameMaps& masks, bool keep_subject,
                                           const MetricConfig& cfg) {
    return descriptor_impl(v, frame, &masks, keep_subject, cfg);
}

float cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0f;
    return float(dot / (std::sqrt(na) * std::sqrt(nb)));
}

float style_score(const Video& v, const std::vector<Video>& refs, const MetricConfig& cfg) {
    if (refs.empty()) throw std::invalid_argument("style_score: at least one reference required");
    std::vector<std::vector<float>> ref_desc;
    ref_desc.reserve(refs.size());
    for (const Video& r : refs) ref_desc.push_back(style_descriptor(r, 0, cfg));
    double total = 0.0;
    for (int f = 0; f < v.frames; ++f) {
        const std::vector<float> d = style_descriptor(v, f, cfg);
        for (const auto& rd : ref_desc) total += cosine(d, rd);
    }
    return float(total / double(v.frames * int(refs.size())));
}

float structure_score(const Video& a, const Video& b, const MetricConfig& cfg) {
    if (!a.same_geometry(b)) throw std::invalid_argument("structure_score: videos differ in geometry");
    const int p = cfg.patch_size;
    if (a.height % p != 0 || a.width % p != 0) {
        throw std::invalid_argument("structure_score: geometry not divisible by patch size");
    }
    const int gh = a.height / p, gw = a.width / p;
    const int in_dim = p * p * 3;
    const int out_dim = cfg.patch_feature_dim;

    static std::vector<float> proj;  // out_dim x in_dim
    if (proj.empty()) {
        Rng rng(MetricConfig{}.patch_proj_seed);
        proj.resize(size_t(out_dim) * in_dim);
        for (auto& v : proj) v = rng.normal();
    }

    auto patch_feature = [&](const Video& v, int f, int py, int px, float* out) {
        float patch[3 * 16];
        int i = 0;
        for (int dy = 0; dy < p; ++dy) {
            for (int dx = 0; dx < p; ++dx) {
                for (int c = 0; c < 3; ++c, ++i) patch[i] = v.at(f, py * p + dy, px * p + dx, c);
            }
        }
        for (int o = 0; o < out_dim; ++o) {
            float acc = 0.0f;
            const float* row = proj.data() + o * in_dim;
            for (int k = 0; k < in_dim; ++k) acc += row[k] * patch[k];
            out[o] = acc;
        }
    };

    double total = 0.0;
    int64_t n = 0;
    std::vector<float> fa(static_cast<size_t>(out_dim)), fb(static_cast<size_t>(out_dim));
    for (int f = 0; f < a.frames; ++f) {
        for (int py = 0; py < gh; ++py) {
            for (int px = 0; px < gw; ++px) {
                patch_feature(a, f, py, px, fa.data());
                patch_feature(b, f, py, px, fb.data());
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (int o = 0; o < out_dim; ++o) {
                    dot += double(fa[size_t(o)]) * fb[size_t(o)];
                    na += double(fa[size_t(o)]) * fa[size_t(o)];
                    nb += double(fb[size_t(o)]) * fb[size_t(o)];
                }
                if (na > 0.0 && nb > 0.0) total += dot / (std::sqrt(na) * std::sqrt(nb));
                ++n;
            }
        }
    }
    return float(total / double(n));
}

float dynamic_degree(const Video& v) {
    if (v.frames < 2) return 0.0f;
    const int64_t per_frame = int64_t(v.height) * v.width * 3;
    double total = 0.0;
    for (int f = 0; f + 1 < v.frames; ++f) {
        const float* cur = v.data.data() + f * per_frame;
        const float* nxt = v.data.data() + (f + 1) * per_frame;
        double acc = 0.0;
        for (int64_t i = 0; i < per_frame; ++i) acc += std::abs(double(nxt[i]) - cur[i]);
        total += acc / double(per_frame);
    }
    return float(total / double(v.frames - 1));
}

RegionConsistency region_consistency(const Video& v, const FrameMaps& masks, const MetricConfig& cfg) {
    if (v.frames != masks.frames || v.height != masks.height || v.width != masks.width) {
        throw std::invalid_argument("region_consistency: mask geometry mismatch");
    }
    RegionConsistency out;
    for (int region = 0; region < 2; ++region) {
        const bool subject = (region == 0);
        double total = 0.0;
        int pairs = 0;
        std::vector<float> prev = style_descriptor_masked(v, 0, masks, subject, cfg);
        for (int f = 1; f < v.frames; ++f) {
            std::vector<float> cur = style_descriptor_masked(v, f, masks, subject, cfg);
            const bool prev_empty = std::all_of(prev.begin(), prev.end(), [](float x) { return x == 0.0f; });
            const bool cur_empty = std::all_of(cur.begin(), cur.end(), [](float x) { return x == 0.0f; });
            if (!prev_empty && !cur_empty) {
                total += cosine(prev, cur);
                ++pairs;
            }
            prev = std::move(cur);
        }
        const float score = pairs ? float(total / pairs) : 1.0f;
        if (subject) {
            out.subject = score;
        } else {
            out.background = score;
        }
    }
    return out;
}

float text_style_alignment(int style_tag, const Video& v, const CentroidTable& table, const MetricConfig& cfg) {
    auto it = table.find(style_tag);
    if (it == table.end()) {
        throw std::invalid_argument("text_style_alignment: no centroid for style tag " + std::to_string(style_tag));
    }
    std::vector<float> mean_desc(kStyleDescriptorDim, 0.0f);
    for (int f = 0; f < v.frames; ++f) {
        const std::vector<float> d = style_descriptor(v, f, cfg);
        for (int i = 0; i < kStyleDescriptorDim; ++i) mean_desc[size_t(i)] += d[size_t(i)];
    }
    for (float& x : mean_desc) x /= float(v.frames);
    return cosine(mean_desc, it->second);
}

void write_report_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_report_csv: cannot open " + path);
    os << "sample_id,mode,metric,value\n";
    for (const auto& r : rows) {
        os << r.sample_id << "," << r.mode << "," << r.metric << "," << r.value << "\n";
    }
}

void write_report_json(const std::string& path, const std::vector<MetricRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        arr.push_back({{"sample_id", r.sample_id}, {"mode", r.mode}, {"metric", r.metric}, {"value", r.value}});
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_report_json: cannot open " + path);
    os << arr.dump(2) << "\n";
}

}  // namespace vstyle
