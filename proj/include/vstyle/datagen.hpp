#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vstyle/codec.hpp"
#include "vstyle/metrics.hpp"
#include "vstyle/rng.hpp"

namespace vstyle {

// ---- caption tag vocabulary -------------------------------------------------
// Content tags and style tags are disjoint id ranges inside one table.
inline constexpr int kTagVocabSize = 64;
inline constexpr int kStyleTagBase = 32;
inline constexpr int kStyleOperatorCount = 8;

const std::string& tag_name(int id);
int tag_id(const std::string& name);          // -1 if unknown
bool is_style_tag(int id);

// ---- scenes ------------------------------------------------------------------
enum class SubjectShape : int { circle = 0, square = 1, triangle = 2 };
enum class MotionKind : int { linear = 0, circular = 1 };

struct SceneSpec {
    SubjectShape shape = SubjectShape::circle;
    int color_id = 0;       // 8-color subject palette
    MotionKind motion = MotionKind::linear;
    bool fast = false;      // speed class
    int background_id = 0;  // 4 gradient backgrounds

    bool operator==(const SceneSpec&) const = default;
};

SceneSpec random_scene(Rng& rng);
std::vector<int> content_tags(const SceneSpec& spec);  // sorted tag ids, no style tags

struct RenderedScene {
    Video video;
    FrameMaps masks;  // exact rasterized subject footprint, 1.0 inside
};
// Deterministic given (spec, geometry, seed); the seed picks the concrete
// path placement inside the speed class, always fully in frame.
RenderedScene gen_raw_video(const SceneSpec& spec, int frames, int height, int width, uint64_t seed);

// ---- style operators ----------------------------------------------------------
enum class StyleOpKind : int {
    palette_remap = 0,
    invert = 1,
    sepia = 2,
    posterize = 3,
    edge_sketch = 4,
    checker_overlay = 5,
    hue_rotate = 6,
    pixelate = 7,
};

struct StyleOperator {
    StyleOpKind kind = StyleOpKind::invert;
    int levels = 0;       // palette_remap / posterize
    float angle_deg = 0;  // hue_rotate
    int block = 0;        // pixelate / checker cell
    int style_tag = kStyleTagBase;
    std::string name;
    bool pointwise = true;  // per-position color map (no neighborhood mixing)
};

// The shipped roster: one concrete operator per kind, one style tag each.
const std::vector<StyleOperator>& style_operator_roster();
const StyleOperator& style_operator(int index);
int style_operator_index_for_tag(int style_tag);  // -1 if not a style tag

Video apply_style(const StyleOperator& op, const Video& v);

// Sobel-magnitude luminance edges, fixed normalization to [0,1].
FrameMaps extract_control(const Video& v);

// ---- samples -------------------------------------------------------------------
enum class Tier : int { CT = 0, SFT = 1 };

struct SamplePair {
    SceneSpec scene;
    uint64_t seed = 0;
    int op_index = 0;
    Tier tier = Tier::CT;
    Video x_raw;
    Video x_sty;
    std::vector<int> tags_ns;
    std::vector<int> tags_sty;
    std::vector<Video> refs;  // K single-frame stylized references
    FrameMaps control;
    FrameMaps masks;
};

struct DataGeometry {
    int frames = 8;
    int height = 16;
    int width = 16;
};

struct CtPerturbation {
    float pixel_noise = 0.03f;
    float brightness_jitter = 0.02f;
};

SamplePair make_sample(const SceneSpec& spec, int op_index, int k, Tier tier, uint64_t seed,
                       const DataGeometry& geom, const CtPerturbation& perturb = {});

// Calibrated once against the reference-swap test and frozen; the swap
// rejection / clean acceptance rates in the acceptance suite depend on them.
struct FilterThresholds {
    float ct_tau_style = 0.5f;
    float sft_tau_style = 0.78f;
    float sft_tau_struct = 0.6f;
};

struct FilterResult {
    bool accepted = false;
    float style = 0.0f;
    float structure = 0.0f;
};
FilterResult auto_filter(const SamplePair& s, float tau_style, float tau_struct);

// ---- dataset ------------------------------------------------------------------
struct ManifestEntry {
    std::string id;
    std::string dir;  // relative to the manifest
    SceneSpec scene;
    uint64_t seed = 0;
    int op_index = 0;
    int k = 1;
    Tier tier = Tier::CT;
    std::vector<int> tags_ns;
    std::vector<int> tags_sty;
    float style_score = 0.0f;
    float structure_score = 0.0f;
};

struct DatasetManifest {
    std::string profile;  // "CT" or "SFT"
    uint64_t seed = 0;
    DataGeometry geometry;
    FilterThresholds thresholds;
    std::vector<ManifestEntry> entries;
    std::string root_dir;  // directory containing manifest.json
};

struct BuildReport {
    int accepted = 0;
    int rejected = 0;
    std::array<int, kStyleOperatorCount> rejected_by_op{};
    std::vector<float> accepted_style_scores;
    std::vector<float> rejected_style_scores;
};

// Generates until n samples pass the filter, writing
//   <out_dir>/manifest.json and per-sample raw.vtf / sty.vtf / ref_<j>.vtf /
//   control.vtf / tags.json.
// Deterministic given (profile, n, seed). Throws when the retry budget runs out.
DatasetManifest build_dataset(Tier profile, int n, uint64_t seed, const std::string& out_dir,
                              const DataGeometry& geom = {}, const FilterThresholds& thresholds = {},
                              const CtPerturbation& perturb = {}, BuildReport* report = nullptr);

DatasetManifest load_manifest(const std::string& manifest_path);
SamplePair load_sample(const DatasetManifest& m, const ManifestEntry& e);

// Held-out centroid table for text-style alignment, one centroid per style tag.
CentroidTable build_centroid_table(const DataGeometry& geom, uint64_t seed, int videos_per_op = 8);

}  // namespace vstyle
