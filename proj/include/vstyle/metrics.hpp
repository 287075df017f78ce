#pragma once

#include <map>
#include <string>
#include <vector>

#include "vstyle/codec.hpp"

namespace vstyle {

// Fixed seeds of the hand-crafted feature extractors. Recorded here so every
// score is a pure function of pixels.
struct MetricConfig {
    uint64_t filter_bank_seed = 9;  // calibrated against the operator-separation suite
    uint64_t patch_proj_seed = 0x5EEDC0DEu;
    int histogram_bins_per_channel = 8;  // 3 channels -> 24 bins
    int patch_size = 4;
    int patch_feature_dim = 16;
};

// Style descriptor of one frame: upper-triangle Gram matrix of the responses
// to a bank of 8 seeded 3x3 filters over luminance, concatenated with a
// 24-bin RGB histogram, L2-normalized. 36 + 24 = 60 dims.
inline constexpr int kStyleFilterCount = 8;
inline constexpr int kStyleDescriptorDim = kStyleFilterCount * (kStyleFilterCount + 1) / 2 + 24;

std::vector<float> style_descriptor(const Video& v, int frame, const MetricConfig& cfg = {});
// Region-restricted variant; pixels where mask==keep_value contribute.
// Returns a zero vector when the region is empty.
std::vector<float> style_descriptor_masked(const Video& v, int frame, const FrameMaps& masks, bool keep_subject,
                                           const MetricConfig& cfg = {});

float cosine(const std::vector<float>& a, const std::vector<float>& b);

// Mean over frames and refs of cosine(descriptor(frame), descriptor(ref)).
float style_score(const Video& v, const std::vector<Video>& refs, const MetricConfig& cfg = {});

// Mean over frames and patches of the cosine between seeded random
// projections of corresponding 4x4 patches.
float structure_score(const Video& a, const Video& b, const MetricConfig& cfg = {});

// Mean absolute change between adjacent frames.
float dynamic_degree(const Video& v);

struct RegionConsistency {
    float subject = 1.0f;
    float background = 1.0f;
};
// Mean adjacent-frame cosine of region-restricted style descriptors.
RegionConsistency region_consistency(const Video& v, const FrameMaps& masks, const MetricConfig& cfg = {});

// Per-style-tag centroid descriptors from a reference corpus.
using CentroidTable = std::map<int, std::vector<float>>;
float text_style_alignment(int style_tag, const Video& v, const CentroidTable& table, const MetricConfig& cfg = {});

// ---- report writer ---------------------------------------------------------
struct MetricRow {
    std::string sample_id;
    std::string mode;
    std::string metric;
    double value = 0.0;
};
void write_report_csv(const std::string& path, const std::vector<MetricRow>& rows);
void write_report_json(const std::string& path, const std::vector<MetricRow>& rows);

}  // namespace vstyle
