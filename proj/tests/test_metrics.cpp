#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vstyle/datagen.hpp"
#include "vstyle/metrics.hpp"

using namespace vstyle;

namespace {

Video corpus_video(uint64_t i, const DataGeometry& geom = {}) {
    Rng rng(derive_seed(90001, i));
    SceneSpec spec = random_scene(rng);
    return gen_raw_video(spec, geom.frames, geom.height, geom.width, derive_seed(90002, i)).video;
}

Video noise_video(int f, int h, int w, uint64_t seed) {
    Rng rng(seed);
    Video v = Video::zeros(f, h, w);
    for (auto& x : v.data) x = rng.uniform();
    return v;
}

}  // namespace

TEST_CASE("style_score of a video whose frames equal the single ref is 1.0") {
    Video v = corpus_video(1);
    Video ref = v.frame(3);
    Video constant_v = Video::zeros(4, v.height, v.width);
    for (int f = 0; f < 4; ++f) {
        std::copy(ref.data.begin(), ref.data.end(),
                  constant_v.data.begin() + size_t(f) * ref.data.size());
    }
    CHECK(style_score(constant_v, {ref}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS(style_score(v, {}));
}

TEST_CASE("style_score is invariant to frame order") {
    Video v = corpus_video(2);
    Video ref = apply_style(style_operator(2), corpus_video(3).frame(0));
    Video reversed = v;
    const int64_t per_frame = int64_t(v.height) * v.width * 3;
    for (int f = 0; f < v.frames; ++f) {
        std::copy(v.data.begin() + f * per_frame, v.data.begin() + (f + 1) * per_frame,
                  reversed.data.begin() + (v.frames - 1 - f) * per_frame);
    }
    CHECK(style_score(v, {ref}) == doctest::Approx(style_score(reversed, {ref})).epsilon(1e-6));
}

TEST_CASE("operator-pair separation on a small corpus") {
    const auto& roster = style_operator_roster();
    const int n_ops = int(roster.size());
    std::vector<Video> corpus;
    for (uint64_t i = 0; i < 8; ++i) corpus.push_back(corpus_video(100 + i));
    std::vector<std::vector<Video>> refs{size_t(n_ops)};
    for (int o = 0; o < n_ops; ++o) {
        for (uint64_t j = 0; j < 4; ++j) {
            refs[size_t(o)].push_back(apply_style(roster[size_t(o)], corpus_video(200 + uint64_t(o) * 10 + j).frame(0)));
        }
    }
    for (int a = 0; a < n_ops; ++a) {
        double own = 0.0;
        for (const Video& v : corpus) own += style_score(apply_style(roster[size_t(a)], v), refs[size_t(a)]);
        for (int b = 0; b < n_ops; ++b) {
            if (a == b) continue;
            double cross = 0.0;
            for (const Video& v : corpus) cross += style_score(apply_style(roster[size_t(a)], v), refs[size_t(b)]);
            CHECK(own > cross);
        }
    }
}

TEST_CASE("structure_score: identity, shuffle sensitivity, symmetry, bounds") {
    Video a = corpus_video(4);
    CHECK(structure_score(a, a) == doctest::Approx(1.0).epsilon(1e-6));

    // shuffle 4x4 patches spatially
    Video shuffled = a;
    Rng rng(5);
    const int p = 4, gh = a.height / p, gw = a.width / p;
    std::vector<int> perm(size_t(gh * gw));
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
    rng.shuffle(perm);
    for (int f = 0; f < a.frames; ++f) {
        for (int g = 0; g < gh * gw; ++g) {
            const int src = perm[size_t(g)];
            for (int dy = 0; dy < p; ++dy)
                for (int dx = 0; dx < p; ++dx)
                    for (int c = 0; c < 3; ++c)
                        shuffled.at(f, (g / gw) * p + dy, (g % gw) * p + dx, c) =
                            a.at(f, (src / gw) * p + dy, (src % gw) * p + dx, c);
        }
    }
    const float s = structure_score(a, shuffled);
    CHECK(s < 1.0f);
    CHECK(structure_score(shuffled, a) == doctest::Approx(s).epsilon(1e-6));
    CHECK(s >= -1.0f);
    CHECK_THROWS(structure_score(a, Video::zeros(2, a.height, a.width)));
}

TEST_CASE("dynamic_degree: zero for static, larger for faster motion") {
    Video still = Video::zeros(6, 16, 16);
    for (auto& x : still.data) x = 0.4f;
    CHECK(dynamic_degree(still) == 0.0f);

    SceneSpec slow_spec;
    slow_spec.motion = MotionKind::linear;
    slow_spec.fast = false;
    SceneSpec fast_spec = slow_spec;
    fast_spec.fast = true;
    const Video slow = gen_raw_video(slow_spec, 8, 16, 16, 7).video;
    const Video fast = gen_raw_video(fast_spec, 8, 16, 16, 7).video;
    const float ds = dynamic_degree(slow);
    const float df = dynamic_degree(fast);
    CHECK(df > ds);
    CHECK(ds >= 0.0f);
    CHECK(std::isfinite(df));
}

TEST_CASE("region_consistency: static video, noise video, degenerate mask") {
    Video still = Video::zeros(4, 16, 16);
    for (int f = 0; f < 4; ++f)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                still.at(f, y, x, 0) = float(x) / 15.0f;
                still.at(f, y, x, 1) = 0.3f;
                still.at(f, y, x, 2) = float(y) / 15.0f;
            }
    FrameMaps masks = FrameMaps::zeros(4, 16, 16);
    for (int f = 0; f < 4; ++f)
        for (int y = 4; y < 10; ++y)
            for (int x = 4; x < 10; ++x) masks.at(f, y, x) = 1.0f;

    RegionConsistency rc = region_consistency(still, masks);
    CHECK(rc.subject == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rc.background == doctest::Approx(1.0).epsilon(1e-6));

    Video noisy = noise_video(4, 16, 16, 8);
    RegionConsistency rn = region_consistency(noisy, masks);
    CHECK(rn.subject < 0.9f);
    CHECK(rn.background < 0.9f);

    // all-ones mask: subject region equals the whole frame
    FrameMaps ones = FrameMaps::zeros(4, 16, 16);
    for (auto& m : ones.data) m = 1.0f;
    RegionConsistency ro = region_consistency(noisy, ones);
    double whole = 0.0;
    for (int f = 1; f < 4; ++f) {
        whole += cosine(style_descriptor(noisy, f - 1), style_descriptor(noisy, f));
    }
    CHECK(ro.subject == doctest::Approx(whole / 3.0).epsilon(1e-6));
}

TEST_CASE("text_style_alignment: exact centroid match, missing tag, classification") {
    DataGeometry geom;
    CentroidTable table = build_centroid_table(geom, 42, 4);

    CHECK_THROWS(text_style_alignment(0, corpus_video(9), table));  // content tag has no centroid

    // classification sanity on a small corpus
    const auto& roster = style_operator_roster();
    int correct = 0, total = 0;
    for (uint64_t i = 0; i < 16; ++i) {
        Rng rng(derive_seed(91000, i));
        const int op = int(rng.uniform_int(int(roster.size())));
        Video styled = apply_style(roster[size_t(op)], corpus_video(300 + i));
        float best = -2.0f;
        int best_tag = -1;
        for (const auto& [tag, centroid] : table) {
            const float sc = text_style_alignment(tag, styled, table);
            if (sc > best) {
                best = sc;
                best_tag = tag;
            }
        }
        ++total;
        if (best_tag == roster[size_t(op)].style_tag) ++correct;
    }
    CHECK(correct >= (total * 9) / 10);

    // identical centroid and descriptor give exactly 1
    Video one = corpus_video(10);
    CentroidTable t2;
    std::vector<float> mean(kStyleDescriptorDim, 0.0f);
    for (int f = 0; f < one.frames; ++f) {
        auto d = style_descriptor(one, f);
        for (int i = 0; i < kStyleDescriptorDim; ++i) mean[size_t(i)] += d[size_t(i)] / float(one.frames);
    }
    t2[33] = mean;
    CHECK(text_style_alignment(33, one, t2) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("scores stay within declared ranges on stylized corpus") {
    for (uint64_t i = 0; i < 4; ++i) {
        Video v = corpus_video(400 + i);
        for (int o = 0; o < kStyleOperatorCount; ++o) {
            Video s = apply_style(style_operator(o), v);
            Video r = apply_style(style_operator(o), corpus_video(500 + i).frame(0));
            const float sc = style_score(s, {r});
            CHECK(sc >= -1.0f);
            CHECK(sc <= 1.0f);
            const float st = structure_score(v, s);
            CHECK(st >= -1.0f);
            CHECK(st <= 1.0f);
            CHECK(dynamic_degree(s) >= 0.0f);
        }
    }
}

TEST_CASE("report writer emits one row per (sample, metric)") {
    std::vector<MetricRow> rows = {
        {"s0", "style_image", "csd_score", 0.5},
        {"s0", "style_image", "dino_score", 0.25},
        {"s1", "text", "clip_t", 0.75},
    };
    write_report_csv("test_metrics_tmp.csv", rows);
    write_report_json("test_metrics_tmp.json", rows);
    std::ifstream is("test_metrics_tmp.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "sample_id,mode,metric,value");
    int count = 0;
    while (std::getline(is, line)) {
        if (!line.empty()) ++count;
    }
    CHECK(count == 3);
    std::remove("test_metrics_tmp.csv");
    std::remove("test_metrics_tmp.json");
}
