#include "vstyle/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vstyle {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---- tag vocabulary ----------------------------------------------------------

namespace {

const std::vector<std::string>& tag_table() {
    static const std::vector<std::string> table = [] {
        std::vector<std::string> t(kTagVocabSize);
        t[0] = "circle";
        t[1] = "square";
        t[2] = "triangle";
        const char* colors[8] = {"red", "green", "blue", "yellow", "magenta", "cyan", "white", "orange"};
        for (int i = 0; i < 8; ++i) t[size_t(3 + i)] = colors[i];
        t[11] = "moving_slow";
        t[12] = "moving_fast";
        t[13] = "orbiting_slow";
        t[14] = "orbiting_fast";
        t[15] = "bg_horizontal";
        t[16] = "bg_vertical";
        t[17] = "bg_diagonal";
        t[18] = "bg_radial";
        const char* styles[kStyleOperatorCount] = {"style_palette", "style_invert", "style_sepia", "style_poster",
                                                   "style_sketch",  "style_checker", "style_hue",  "style_pixel"};
        for (int i = 0; i < kStyleOperatorCount; ++i) t[size_t(kStyleTagBase + i)] = styles[i];
        return t;
    }();
    return table;
}

}  // namespace

const std::string& tag_name(int id) {
    static const std::string empty;
    if (id < 0 || id >= kTagVocabSize) return empty;
    return tag_table()[size_t(id)];
}

int tag_id(const std::string& name) {
    const auto& t = tag_table();
    for (int i = 0; i < kTagVocabSize; ++i) {
        if (!t[size_t(i)].empty() && t[size_t(i)] == name) return i;
    }
    return -1;
}

bool is_style_tag(int id) { return id >= kStyleTagBase && id < kStyleTagBase + kStyleOperatorCount; }

// ---- scenes -------------------------------------------------------------------

SceneSpec random_scene(Rng& rng) {
    SceneSpec s;
    s.shape = SubjectShape(rng.uniform_int(3));
    s.color_id = rng.uniform_int(8);
    s.motion = MotionKind(rng.uniform_int(2));
    s.fast = rng.uniform_int(2) == 1;
    s.background_id = rng.uniform_int(4);
    return s;
}

std::vector<int> content_tags(const SceneSpec& spec) {
    std::vector<int> tags{int(spec.shape), 3 + spec.color_id,
                          11 + int(spec.motion) * 2 + (spec.fast ? 1 : 0), 15 + spec.background_id};
    std::sort(tags.begin(), tags.end());
    return tags;
}

namespace {

struct Rgb {
    float r, g, b;
};

constexpr Rgb kSubjectPalette[8] = {
    {0.95f, 0.15f, 0.10f}, {0.10f, 0.85f, 0.20f}, {0.15f, 0.25f, 0.95f}, {0.95f, 0.90f, 0.10f},
    {0.90f, 0.15f, 0.85f}, {0.10f, 0.85f, 0.90f}, {0.97f, 0.97f, 0.97f}, {0.95f, 0.55f, 0.08f},
};

Rgb lerp(const Rgb& a, const Rgb& b, float t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// one shared ramp, four orientations: backgrounds differ in geometry, not
// palette, so global color statistics stay comparable across scenes
Rgb background_color(int id, float x01, float y01) {
    const Rgb dark{0.10f, 0.14f, 0.30f};
    const Rgb light{0.30f, 0.42f, 0.62f};
    switch (id) {
        case 0: return lerp(dark, light, x01);
        case 1: return lerp(dark, light, y01);
        case 2: return lerp(dark, light, 0.5f * (x01 + y01));
        default: {
            const float dx = x01 - 0.5f, dy = y01 - 0.5f;
            const float d = std::min(1.0f, std::sqrt(dx * dx + dy * dy) / 0.7071f);
            return lerp(light, dark, d);
        }
    }
}

bool inside_subject(SubjectShape shape, float px, float py, float cx, float cy, float radius) {
    const float dx = px - cx, dy = py - cy;
    switch (shape) {
        case SubjectShape::circle:
            return dx * dx + dy * dy <= radius * radius;
        case SubjectShape::square: {
            const float h = 0.82f * radius;
            return std::abs(dx) <= h && std::abs(dy) <= h;
        }
        case SubjectShape::triangle: {
            // equilateral, apex up, circumradius = radius
            const float v0x = 0.0f, v0y = -radius;
            const float v1x = -0.8660254f * radius, v1y = 0.5f * radius;
            const float v2x = 0.8660254f * radius, v2y = 0.5f * radius;
            auto side = [&](float ax, float ay, float bx, float by) {
                return (bx - ax) * (dy - ay) - (by - ay) * (dx - ax);
            };
            const float s0 = side(v0x, v0y, v1x, v1y);
            const float s1 = side(v1x, v1y, v2x, v2y);
            const float s2 = side(v2x, v2y, v0x, v0y);
            return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
        }
    }
    return false;
}

}  // namespace

RenderedScene gen_raw_video(const SceneSpec& spec, int frames, int height, int width, uint64_t seed) {
    Rng rng(seed);
    const float dim = float(std::min(height, width));
    const float radius = dim * rng.uniform(0.18f, 0.23f);
    const float margin = radius + 1.0f;

    // per-frame subject center, guaranteed in frame
    std::vector<float> cx(static_cast<size_t>(frames)), cy(static_cast<size_t>(frames));
    if (spec.motion == MotionKind::linear) {
        const float speed = dim * (spec.fast ? rng.uniform(0.034f, 0.056f) : rng.uniform(0.016f, 0.025f));
        const float angle = rng.uniform(0.0f, 6.2831853f);
        const float vx = speed * std::cos(angle), vy = speed * std::sin(angle);
        const float total_x = vx * float(frames - 1), total_y = vy * float(frames - 1);
        const float lo_x = margin + std::max(0.0f, -total_x), hi_x = float(width) - margin - std::max(0.0f, total_x);
        const float lo_y = margin + std::max(0.0f, -total_y), hi_y = float(height) - margin - std::max(0.0f, total_y);
        if (lo_x > hi_x || lo_y > hi_y) {
            throw std::runtime_error("gen_raw_video: motion does not fit in frame; enlarge geometry");
        }
        const float x0 = rng.uniform(lo_x, hi_x), y0 = rng.uniform(lo_y, hi_y);
        for (int f = 0; f < frames; ++f) {
            cx[size_t(f)] = x0 + vx * float(f);
            cy[size_t(f)] = y0 + vy * float(f);
        }
    } else {
        const float max_path = 0.5f * dim - margin - 0.5f;
        if (max_path < 0.8f) throw std::runtime_error("gen_raw_video: geometry too small for orbit");
        const float rho = rng.uniform(std::min(0.8f, max_path * 0.5f), max_path);
        const float speed = dim * (spec.fast ? rng.uniform(0.034f, 0.056f) : rng.uniform(0.016f, 0.025f));
        const float omega = speed / rho;
        const float phase = rng.uniform(0.0f, 6.2831853f);
        const float ox = float(width) * 0.5f + rng.uniform(-0.5f, 0.5f);
        const float oy = float(height) * 0.5f + rng.uniform(-0.5f, 0.5f);
        for (int f = 0; f < frames; ++f) {
            cx[size_t(f)] = ox + rho * std::cos(phase + omega * float(f));
            cy[size_t(f)] = oy + rho * std::sin(phase + omega * float(f));
        }
    }

    RenderedScene out;
    out.video = Video::zeros(frames, height, width);
    out.masks = FrameMaps::zeros(frames, height, width);
    const Rgb color = kSubjectPalette[size_t(spec.color_id)];
    for (int f = 0; f < frames; ++f) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const float px = float(x) + 0.5f, py = float(y) + 0.5f;
                const bool subj = inside_subject(spec.shape, px, py, cx[size_t(f)], cy[size_t(f)], radius);
                const Rgb c = subj ? color
                                   : background_color(spec.background_id, float(x) / float(width - 1),
                                                      float(y) / float(height - 1));
                out.video.at(f, y, x, 0) = c.r;
                out.video.at(f, y, x, 1) = c.g;
                out.video.at(f, y, x, 2) = c.b;
                out.masks.at(f, y, x) = subj ? 1.0f : 0.0f;
            }
        }
    }
    return out;
}

// ---- style operators ------------------------------------------------------------

const std::vector<StyleOperator>& style_operator_roster() {
    static const std::vector<StyleOperator> roster = [] {
        std::vector<StyleOperator> r;
        r.push_back({StyleOpKind::palette_remap, 4, 0, 0, kStyleTagBase + 0, "palette_remap(4)", true});
        r.push_back({StyleOpKind::invert, 0, 0, 0, kStyleTagBase + 1, "invert", true});
        r.push_back({StyleOpKind::sepia, 0, 0, 0, kStyleTagBase + 2, "sepia", true});
        r.push_back({StyleOpKind::posterize, 3, 0, 0, kStyleTagBase + 3, "posterize(3)", true});
        r.push_back({StyleOpKind::edge_sketch, 0, 0, 0, kStyleTagBase + 4, "edge_sketch", false});
        r.push_back({StyleOpKind::checker_overlay, 0, 0, 2, kStyleTagBase + 5, "checker_overlay(2)", true});
        r.push_back({StyleOpKind::hue_rotate, 0, 200.0f, 0, kStyleTagBase + 6, "hue_rotate(200)", true});
        r.push_back({StyleOpKind::pixelate, 0, 0, 4, kStyleTagBase + 7, "pixelate(4)", false});
        return r;
    }();
    return roster;
}

const StyleOperator& style_operator(int index) {
    const auto& r = style_operator_roster();
    if (index < 0 || index >= int(r.size())) throw std::invalid_argument("style_operator: bad index");
    return r[size_t(index)];
}

int style_operator_index_for_tag(int style_tag) {
    const auto& r = style_operator_roster();
    for (int i = 0; i < int(r.size()); ++i) {
        if (r[size_t(i)].style_tag == style_tag) return i;
    }
    return -1;
}

namespace {

float lum_at(const Video& v, int f, int y, int x) {
    return 0.299f * v.at(f, y, x, 0) + 0.587f * v.at(f, y, x, 1) + 0.114f * v.at(f, y, x, 2);
}

// Sobel magnitude with replicate padding, divided by the kernel maximum so a
// unit step maps below 1 and a constant frame maps to exactly 0.
float sobel_mag(const Video& v, int f, int y, int x) {
    auto l = [&](int yy, int xx) {
        return lum_at(v, f, std::clamp(yy, 0, v.height - 1), std::clamp(xx, 0, v.width - 1));
    };
    const float gx = -l(y - 1, x - 1) + l(y - 1, x + 1) - 2.0f * l(y, x - 1) + 2.0f * l(y, x + 1) -
                     l(y + 1, x - 1) + l(y + 1, x + 1);
    const float gy = -l(y - 1, x - 1) - 2.0f * l(y - 1, x) - l(y - 1, x + 1) + l(y + 1, x - 1) +
                     2.0f * l(y + 1, x) + l(y + 1, x + 1);
    return std::sqrt(gx * gx + gy * gy) / 5.6568542f;  // 4*sqrt(2)
}

int quantize_level(float v, int levels) {
    return std::min(levels - 1, int(std::clamp(v, 0.0f, 1.0f) * float(levels)));
}

}  // namespace

Video apply_style(const StyleOperator& op, const Video& v) {
    Video out = v;
    switch (op.kind) {
        case StyleOpKind::palette_remap: {
            // quantize per channel, then push levels through fixed permutations
            static const int lut[3][4] = {{2, 0, 3, 1}, {1, 3, 0, 2}, {3, 1, 2, 0}};
            const float denom = float(op.levels - 1);
            for (int f = 0; f < v.frames; ++f)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x)
                        for (int c = 0; c < 3; ++c) {
                            const int q = quantize_level(v.at(f, y, x, c), op.levels);
                            out.at(f, y, x, c) = float(lut[c][q]) / denom;
                        }
            break;
        }
        case StyleOpKind::invert:
            for (auto& x : out.data) x = 1.0f - x;
            break;
        case StyleOpKind::sepia:
            for (int f = 0; f < v.frames; ++f)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        const float r = v.at(f, y, x, 0), g = v.at(f, y, x, 1), b = v.at(f, y, x, 2);
                        out.at(f, y, x, 0) = std::min(1.0f, 0.393f * r + 0.769f * g + 0.189f * b);
                        out.at(f, y, x, 1) = std::min(1.0f, 0.349f * r + 0.686f * g + 0.168f * b);
                        out.at(f, y, x, 2) = std::min(1.0f, 0.272f * r + 0.534f * g + 0.131f * b);
                    }
            break;
        case StyleOpKind::posterize: {
            const float denom = float(op.levels - 1);
            for (auto& x : out.data) x = float(quantize_level(x, op.levels)) / denom;
            break;
        }
        case StyleOpKind::edge_sketch:
            for (int f = 0; f < v.frames; ++f)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        const float s = 1.0f - std::min(1.0f, 3.0f * sobel_mag(v, f, y, x));
                        out.at(f, y, x, 0) = s;
                        out.at(f, y, x, 1) = s;
                        out.at(f, y, x, 2) = s;
                    }
            break;
        case StyleOpKind::checker_overlay: {
            const int cell = op.block;
            for (int f = 0; f < v.frames; ++f)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        const float factor = (((x / cell) + (y / cell)) % 2 == 0) ? 1.0f : 0.62f;
                        for (int c = 0; c < 3; ++c) out.at(f, y, x, c) = v.at(f, y, x, c) * factor;
                    }
            break;
        }
        case StyleOpKind::hue_rotate: {
            const float a = op.angle_deg * 0.017453293f;
            const float cosa = std::cos(a), sina = std::sin(a);
            const float third = 1.0f / 3.0f, rt3 = 0.57735027f;  // 1/sqrt(3)
            float m[9];
            m[0] = cosa + (1 - cosa) * third;
            m[1] = third * (1 - cosa) - rt3 * sina;
            m[2] = third * (1 - cosa) + rt3 * sina;
            m[3] = third * (1 - cosa) + rt3 * sina;
            m[4] = cosa + third * (1 - cosa);
            m[5] = third * (1 - cosa) - rt3 * sina;
            m[6] = third * (1 - cosa) - rt3 * sina;
            m[7] = third * (1 - cosa) + rt3 * sina;
            m[8] = cosa + third * (1 - cosa);
            for (int f = 0; f < v.frames; ++f)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        const float r = v.at(f, y, x, 0), g = v.at(f, y, x, 1), b = v.at(f, y, x, 2);
                        out.at(f, y, x, 0) = std::clamp(m[0] * r + m[1] * g + m[2] * b, 0.0f, 1.0f);
                        out.at(f, y, x, 1) = std::clamp(m[3] * r + m[4] * g + m[5] * b, 0.0f, 1.0f);
                        out.at(f, y, x, 2) = std::clamp(m[6] * r + m[7] * g + m[8] * b, 0.0f, 1.0f);
                    }
            break;
        }
        case StyleOpKind::pixelate: {
            const int b = op.block;
            for (int f = 0; f < v.frames; ++f) {
                for (int by = 0; by < v.height; by += b) {
                    for (int bx = 0; bx < v.width; bx += b) {
                        const int ey = std::min(by + b, v.height), ex = std::min(bx + b, v.width);
                        for (int c = 0; c < 3; ++c) {
                            float acc = 0.0f;
                            for (int y = by; y < ey; ++y)
                                for (int x = bx; x < ex; ++x) acc += v.at(f, y, x, c);
                            const float avg = acc / float((ey - by) * (ex - bx));
                            for (int y = by; y < ey; ++y)
                                for (int x = bx; x < ex; ++x) out.at(f, y, x, c) = avg;
                        }
                    }
                }
            }
            break;
        }
    }
    return out;
}

FrameMaps extract_control(const Video& v) {
    FrameMaps m = FrameMaps::zeros(v.frames, v.height, v.width);
    for (int f = 0; f < v.frames; ++f)
        for (int y = 0; y < v.height; ++y)
            for (int x = 0; x < v.width; ++x) m.at(f, y, x) = std::min(1.0f, sobel_mag(v, f, y, x));
    return m;
}

// ---- samples -------------------------------------------------------------------

SamplePair make_sample(const SceneSpec& spec, int op_index, int k, Tier tier, uint64_t seed,
                       const DataGeometry& geom, const CtPerturbation& perturb) {
    if (tier == Tier::CT && k != 1) {
        throw std::invalid_argument("make_sample: CT tier carries exactly one style reference");
    }
    if (tier == Tier::SFT && (k < 1 || k > 16)) {
        throw std::invalid_argument("make_sample: SFT tier carries 1..16 style references, got " +
                                    std::to_string(k));
    }
    const StyleOperator& op = style_operator(op_index);

    SamplePair s;
    s.scene = spec;
    s.seed = seed;
    s.op_index = op_index;
    s.tier = tier;

    RenderedScene scene = gen_raw_video(spec, geom.frames, geom.height, geom.width, derive_seed(seed, 2));
    s.x_raw = std::move(scene.video);
    s.masks = std::move(scene.masks);
    s.x_sty = apply_style(op, s.x_raw);
    if (tier == Tier::CT) {
        // models the noisier upstream stylizer of the large dataset
        Rng prng(derive_seed(seed, 3));
        for (int f = 0; f < s.x_sty.frames; ++f) {
            const float brightness = prng.uniform(-perturb.brightness_jitter, perturb.brightness_jitter);
            for (int y = 0; y < s.x_sty.height; ++y)
                for (int x = 0; x < s.x_sty.width; ++x)
                    for (int c = 0; c < 3; ++c) {
                        float val = s.x_sty.at(f, y, x, c) + brightness +
                                    prng.uniform(-perturb.pixel_noise, perturb.pixel_noise);
                        s.x_sty.at(f, y, x, c) = std::clamp(val, 0.0f, 1.0f);
                    }
        }
    }

    Rng ref_rng(derive_seed(seed, 1));
    for (int j = 0; j < k; ++j) {
        SceneSpec ref_spec = random_scene(ref_rng);
        while (ref_spec == spec) ref_spec = random_scene(ref_rng);
        RenderedScene ref = gen_raw_video(ref_spec, 1, geom.height, geom.width, derive_seed(seed, 16 + uint64_t(j)));
        s.refs.push_back(apply_style(op, ref.video));
    }

    s.control = extract_control(s.x_raw);
    s.tags_ns = content_tags(spec);
    s.tags_sty = s.tags_ns;
    s.tags_sty.push_back(op.style_tag);
    return s;
}

FilterResult auto_filter(const SamplePair& s, float tau_style, float tau_struct) {
    FilterResult r;
    r.style = style_score(s.x_sty, s.refs);
    r.structure = structure_score(s.x_raw, s.x_sty);
    r.accepted = r.style >= tau_style && (s.tier == Tier::CT || r.structure >= tau_struct);
    return r;
}

// ---- dataset -------------------------------------------------------------------

namespace {

ordered_json scene_to_json(const SceneSpec& s) {
    return ordered_json{{"shape", int(s.shape)},
                        {"color", s.color_id},
                        {"motion", int(s.motion)},
                        {"fast", s.fast},
                        {"background", s.background_id}};
}

SceneSpec scene_from_json(const ordered_json& j) {
    SceneSpec s;
    s.shape = SubjectShape(j.at("shape").get<int>());
    s.color_id = j.at("color").get<int>();
    s.motion = MotionKind(j.at("motion").get<int>());
    s.fast = j.at("fast").get<bool>();
    s.background_id = j.at("background").get<int>();
    return s;
}

}  // namespace

DatasetManifest build_dataset(Tier profile, int n, uint64_t seed, const std::string& out_dir,
                              const DataGeometry& geom, const FilterThresholds& thresholds,
                              const CtPerturbation& perturb, BuildReport* report) {
    if (n < 1) throw std::invalid_argument("build_dataset: n must be >= 1");
    fs::create_directories(out_dir);

    DatasetManifest m;
    m.profile = profile == Tier::CT ? "CT" : "SFT";
    m.seed = seed;
    m.geometry = geom;
    m.thresholds = thresholds;
    m.root_dir = out_dir;

    const float tau_style = profile == Tier::CT ? thresholds.ct_tau_style : thresholds.sft_tau_style;
    const float tau_struct = thresholds.sft_tau_struct;
    const int op_count = int(style_operator_roster().size());

    BuildReport local;
    BuildReport& rep = report ? *report : local;

    const int64_t max_attempts = int64_t(50) * n + 1000;
    int64_t attempt = 0;
    while (int(m.entries.size()) < n) {
        if (attempt >= max_attempts) {
            std::string ops;
            for (int i = 0; i < op_count; ++i) {
                if (rep.rejected_by_op[size_t(i)] > 0) {
                    ops += (ops.empty() ? "" : ", ") + style_operator(i).name + "(" +
                           std::to_string(rep.rejected_by_op[size_t(i)]) + ")";
                }
            }
            throw std::runtime_error("build_dataset: retry budget exhausted; rejections by op: " + ops);
        }
        const uint64_t sample_seed = derive_seed(seed, 0x5A5A0000ull + uint64_t(attempt));
        ++attempt;
        Rng srng(sample_seed);
        const SceneSpec spec = random_scene(srng);
        const int op_index = srng.uniform_int(op_count);
        const int k = profile == Tier::CT ? 1 : 1 + srng.uniform_int(16);

        SamplePair s = make_sample(spec, op_index, k, profile, derive_seed(sample_seed, 7), geom, perturb);
        const FilterResult f = auto_filter(s, tau_style, tau_struct);
        if (!f.accepted) {
            ++rep.rejected;
            ++rep.rejected_by_op[size_t(op_index)];
            rep.rejected_style_scores.push_back(f.style);
            continue;
        }
        ++rep.accepted;
        rep.accepted_style_scores.push_back(f.style);

        char id[32];
        std::snprintf(id, sizeof(id), "%s_%06d", profile == Tier::CT ? "ct" : "sft", int(m.entries.size()));
        const std::string sdir = out_dir + "/" + id;
        fs::create_directories(sdir);
        write_video_vtf(sdir + "/raw.vtf", s.x_raw);
        write_video_vtf(sdir + "/sty.vtf", s.x_sty);
        for (int j = 0; j < int(s.refs.size()); ++j) {
            write_video_vtf(sdir + "/ref_" + std::to_string(j) + ".vtf", s.refs[size_t(j)]);
        }
        write_maps_vtf(sdir + "/control.vtf", s.control);
        {
            ordered_json tags{{"tags_ns", s.tags_ns}, {"tags_sty", s.tags_sty}, {"op", s.op_index}};
            std::ofstream os(sdir + "/tags.json");
            os << tags.dump(2) << "\n";
        }

        ManifestEntry e;
        e.id = id;
        e.dir = id;
        e.scene = spec;
        e.seed = s.seed;
        e.op_index = op_index;
        e.k = k;
        e.tier = profile;
        e.tags_ns = s.tags_ns;
        e.tags_sty = s.tags_sty;
        e.style_score = f.style;
        e.structure_score = f.structure;
        m.entries.push_back(std::move(e));
    }

    ordered_json j;
    j["profile"] = m.profile;
    j["seed"] = m.seed;
    j["geometry"] = ordered_json{{"frames", geom.frames}, {"height", geom.height}, {"width", geom.width}};
    j["thresholds"] = ordered_json{{"ct_tau_style", thresholds.ct_tau_style},
                                   {"sft_tau_style", thresholds.sft_tau_style},
                                   {"sft_tau_struct", thresholds.sft_tau_struct}};
    j["entries"] = ordered_json::array();
    for (const auto& e : m.entries) {
        j["entries"].push_back(ordered_json{{"id", e.id},
                                            {"dir", e.dir},
                                            {"scene", scene_to_json(e.scene)},
                                            {"seed", e.seed},
                                            {"op", e.op_index},
                                            {"op_name", style_operator(e.op_index).name},
                                            {"k", e.k},
                                            {"tier", m.profile},
                                            {"tags_ns", e.tags_ns},
                                            {"tags_sty", e.tags_sty},
                                            {"style_score", e.style_score},
                                            {"structure_score", e.structure_score}});
    }
    std::ofstream os(out_dir + "/manifest.json");
    if (!os) throw std::runtime_error("build_dataset: cannot write manifest in " + out_dir);
    os << j.dump(2) << "\n";
    return m;
}

DatasetManifest load_manifest(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("load_manifest: cannot open " + manifest_path);
    ordered_json j;
    is >> j;

    DatasetManifest m;
    m.profile = j.at("profile").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.geometry.frames = j.at("geometry").at("frames").get<int>();
    m.geometry.height = j.at("geometry").at("height").get<int>();
    m.geometry.width = j.at("geometry").at("width").get<int>();
    m.thresholds.ct_tau_style = j.at("thresholds").at("ct_tau_style").get<float>();
    m.thresholds.sft_tau_style = j.at("thresholds").at("sft_tau_style").get<float>();
    m.thresholds.sft_tau_struct = j.at("thresholds").at("sft_tau_struct").get<float>();
    m.root_dir = fs::path(manifest_path).parent_path().string();
    if (m.root_dir.empty()) m.root_dir = ".";
    for (const auto& ej : j.at("entries")) {
        ManifestEntry e;
        e.id = ej.at("id").get<std::string>();
        e.dir = ej.at("dir").get<std::string>();
        e.scene = scene_from_json(ej.at("scene"));
        e.seed = ej.at("seed").get<uint64_t>();
        e.op_index = ej.at("op").get<int>();
        e.k = ej.at("k").get<int>();
        e.tier = ej.at("tier").get<std::string>() == "CT" ? Tier::CT : Tier::SFT;
        e.tags_ns = ej.at("tags_ns").get<std::vector<int>>();
        e.tags_sty = ej.at("tags_sty").get<std::vector<int>>();
        e.style_score = ej.at("style_score").get<float>();
        e.structure_score = ej.at("structure_score").get<float>();
        m.entries.push_back(std::move(e));
    }
    return m;
}

SamplePair load_sample(const DatasetManifest& m, const ManifestEntry& e) {
    SamplePair s;
    s.scene = e.scene;
    s.seed = e.seed;
    s.op_index = e.op_index;
    s.tier = e.tier;
    s.tags_ns = e.tags_ns;
    s.tags_sty = e.tags_sty;
    const std::string dir = m.root_dir + "/" + e.dir;
    s.x_raw = read_video_vtf(dir + "/raw.vtf");
    s.x_sty = read_video_vtf(dir + "/sty.vtf");
    for (int j = 0; j < e.k; ++j) s.refs.push_back(read_video_vtf(dir + "/ref_" + std::to_string(j) + ".vtf"));
    s.control = read_maps_vtf(dir + "/control.vtf");
    s.masks = gen_raw_video(e.scene, m.geometry.frames, m.geometry.height, m.geometry.width,
                            derive_seed(e.seed, 2))
                  .masks;
    return s;
}

CentroidTable build_centroid_table(const DataGeometry& geom, uint64_t seed, int videos_per_op) {
    CentroidTable table;
    const auto& roster = style_operator_roster();
    for (int oi = 0; oi < int(roster.size()); ++oi) {
        std::vector<double> acc(kStyleDescriptorDim, 0.0);
        int count = 0;
        for (int i = 0; i < videos_per_op; ++i) {
            const uint64_t s = derive_seed(seed, uint64_t(oi) * 1000 + uint64_t(i));
            Rng rng(s);
            const SceneSpec spec = random_scene(rng);
            RenderedScene scene = gen_raw_video(spec, geom.frames, geom.height, geom.width, derive_seed(s, 2));
            Video styled = apply_style(roster[size_t(oi)], scene.video);
            for (int f = 0; f < styled.frames; ++f) {
                const std::vector<float> d = style_descriptor(styled, f);
                for (int k = 0; k < kStyleDescriptorDim; ++k) acc[size_t(k)] += double(d[size_t(k)]);
                ++count;
            }
        }
        std::vector<float> centroid(kStyleDescriptorDim);
        double norm = 0.0;
        for (int k = 0; k < kStyleDescriptorDim; ++k) {
            centroid[size_t(k)] = float(acc[size_t(k)] / double(count));
            norm += double(centroid[size_t(k)]) * centroid[size_t(k)];
        }
        if (norm > 0.0) {
            const float inv = float(1.0 / std::sqrt(norm));
            for (auto& v : centroid) v *= inv;
        }
        table[roster[size_t(oi)].style_tag] = std::move(centroid);
    }
    return table;
}

}  // namespace vstyle
