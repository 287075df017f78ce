#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "vstyle/codec.hpp"
#include "vstyle/rng.hpp"

using namespace vstyle;

namespace {

Video random_video(int f, int h, int w, Rng& rng) {
    Video v = Video::zeros(f, h, w);
    for (auto& x : v.data) x = rng.uniform();
    return v;
}

}  // namespace

TEST_CASE("encode shape arithmetic and value preservation") {
    Rng rng(1);
    Video v = random_video(4, 16, 16, rng);
    Latent z = encode(v);
    CHECK(z.channels == 12);
    CHECK(z.frames == 4);
    CHECK(z.height == 8);
    CHECK(z.width == 8);

    Video c = Video::zeros(2, 8, 8);
    for (auto& x : c.data) x = 0.5f;
    Latent zc = encode(c);
    for (float x : zc.data) CHECK(x == 0.5f);
}

TEST_CASE("decode shape arithmetic, clamp flag semantics") {
    Latent z = Latent::zeros(12, 4, 8, 8);
    Video v = decode(z);
    CHECK(v.frames == 4);
    CHECK(v.height == 16);
    CHECK(v.width == 16);

    z.at(0, 0, 0, 0) = 3.5f;
    z.at(1, 0, 0, 0) = -1.0f;
    Video raw = decode(z, kCodecStride, false);
    CHECK(raw.at(0, 0, 0, 0) == 3.5f);
    CHECK(raw.at(0, 0, 1, 0) == -1.0f);
    Video clamped = decode(z, kCodecStride, true);
    CHECK(clamped.at(0, 0, 0, 0) == 1.0f);
    CHECK(clamped.at(0, 0, 1, 0) == 0.0f);
}

TEST_CASE("encode/decode round-trips are bitwise exact on 100 seeded videos") {
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        Video v = random_video(1 + rng.uniform_int(6), 8 + 4 * rng.uniform_int(3), 8 + 4 * rng.uniform_int(3), rng);
        Video back = decode(encode(v));
        REQUIRE(back.same_geometry(v));
        REQUIRE(std::memcmp(back.data.data(), v.data.data(), v.data.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("dimension errors") {
    Rng rng(3);
    CHECK_THROWS(encode(random_video(1, 15, 16, rng)));
    CHECK_THROWS(decode(Latent::zeros(11, 1, 4, 4)));
    CHECK_THROWS(patchify(Latent::zeros(4, 1, 7, 8), 2));
}

TEST_CASE("patchify shapes, ordering, and bitwise round-trip") {
    Rng rng(4);
    Latent slab = Latent::zeros(28, 4, 8, 8);
    for (auto& x : slab.data) x = rng.uniform(-2.0f, 2.0f);

    TokenSeq t = patchify(slab, 2);
    CHECK(t.tokens == 4 * 4 * 4);
    CHECK(t.dim == 112);

    // frame-major ordering: frame indices never decrease, spatial row-major
    for (int i = 1; i < t.tokens; ++i) {
        CHECK(t.frame_index[size_t(i)] >= t.frame_index[size_t(i - 1)]);
        if (t.frame_index[size_t(i)] == t.frame_index[size_t(i - 1)]) {
            CHECK(t.spatial_index[size_t(i)] == t.spatial_index[size_t(i - 1)] + 1);
        }
    }

    Latent back = unpatchify(t, 28, 4, 8, 8, 2);
    CHECK(std::memcmp(back.data.data(), slab.data.data(), slab.data.size() * sizeof(float)) == 0);

    // degenerate patch p=1
    TokenSeq t1 = patchify(slab, 1);
    CHECK(t1.tokens == 4 * 8 * 8);
    CHECK(t1.dim == 28);
    Latent back1 = unpatchify(t1, 28, 4, 8, 8, 1);
    CHECK(std::memcmp(back1.data.data(), slab.data.data(), slab.data.size() * sizeof(float)) == 0);
}

TEST_CASE("vtf round-trip is bitwise, bad files rejected") {
    Rng rng(5);
    Video v = random_video(3, 8, 12, rng);
    const std::string path = "test_codec_tmp.vtf";
    write_video_vtf(path, v);
    Video back = read_video_vtf(path);
    CHECK(back.same_geometry(v));
    CHECK(std::memcmp(back.data.data(), v.data.data(), v.data.size() * sizeof(float)) == 0);

    FrameMaps m = FrameMaps::zeros(2, 4, 4);
    for (auto& x : m.data) x = rng.uniform();
    write_maps_vtf(path, m);
    FrameMaps mb = read_maps_vtf(path);
    CHECK(std::memcmp(mb.data.data(), m.data.data(), m.data.size() * sizeof(float)) == 0);

    {
        std::ofstream os(path, std::ios::binary);
        os << "JUNKJUNKJUNK";
    }
    CHECK_THROWS(read_vtf(path));
    CHECK_THROWS(read_vtf("does_not_exist.vtf"));
    std::remove(path.c_str());
}

TEST_CASE("ppm export header and payload") {
    Video v = Video::zeros(1, 2, 2);
    v.at(0, 0, 0, 0) = 1.0f;   // red pixel
    v.at(0, 1, 1, 2) = 2.0f;   // clamps to 255
    v.at(0, 1, 0, 1) = -0.5f;  // clamps to 0
    const std::string path = "test_codec_tmp.ppm";
    write_ppm(path, v, 0);
    std::ifstream is(path, std::ios::binary);
    std::string header;
    std::getline(is, header);
    CHECK(header == "P6");
    std::string dims, maxval;
    std::getline(is, dims);
    std::getline(is, maxval);
    CHECK(dims == "2 2");
    CHECK(maxval == "255");
    unsigned char px[12];
    is.read(reinterpret_cast<char*>(px), 12);
    CHECK(int(px[0]) == 255);  // red of (0,0)
    CHECK(int(px[1]) == 0);
    CHECK(int(px[11]) == 255);  // blue of (1,1) clamped
    std::remove(path.c_str());
}
