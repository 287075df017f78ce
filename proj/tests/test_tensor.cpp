#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "vstyle/rng.hpp"
#include "vstyle/tensor.hpp"

using namespace vstyle;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data().data(), b.data().data(), size_t(a.numel()) * sizeof(float)) == 0;
}

// Reference oracle: central differences of a double-precision scalar function,
// compared per coordinate against an analytic f32 gradient.
float fd_oracle_max_rel(const std::function<double(const std::vector<double>&)>& f_ref,
                        std::vector<double> x, std::span<const float> analytic, double h) {
    float max_rel = 0.0f;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f_ref(x);
        x[i] = orig - h;
        const double fm = f_ref(x);
        x[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = double(analytic[i]);
        const float rel = float(std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace

TEST_CASE("shape arithmetic of core ops") {
    Rng rng(1);
    Tensor a = Tensor::randn({3, 4}, rng);
    Tensor b = Tensor::randn({4, 5}, rng);
    CHECK(matmul(a, b).shape() == Shape{3, 5});

    Tensor c = Tensor::randn({2, 7}, rng);
    Tensor d = Tensor::randn({3, 7}, rng);
    CHECK(concat({c, d}, 0).shape() == Shape{5, 7});

    CHECK(slice(c, 1, 2, 3).shape() == Shape{2, 3});
    CHECK(reshape(c, {7, 2}).shape() == Shape{7, 2});
    CHECK(transpose_last(c).shape() == Shape{7, 2});
}

TEST_CASE("shape mismatches raise descriptive errors") {
    Rng rng(2);
    Tensor a = Tensor::randn({3, 4}, rng);
    Tensor b = Tensor::randn({3, 4}, rng);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
    CHECK_THROWS_AS(add(a, Tensor::randn({3, 5}, rng)), std::invalid_argument);
    CHECK_THROWS_AS(concat({a, Tensor::randn({3, 5}, rng)}, 0), std::invalid_argument);
    CHECK_THROWS_AS(slice(a, 1, 2, 9), std::invalid_argument);
    CHECK_THROWS_AS(reshape(a, {5, 5}), std::invalid_argument);
    // middle singleton is not a leading dim
    CHECK_THROWS_AS(add(Tensor::randn({3, 4, 5}, rng), Tensor::randn({3, 1, 5}, rng)), std::invalid_argument);
}

TEST_CASE("softmax of an all-equal row is uniform") {
    for (int n : {2, 5, 16}) {
        Tensor x = Tensor::full({1, n}, 3.7f);
        Tensor y = softmax_last(x);
        for (float v : y.data()) CHECK(v == 1.0f / float(n));
    }
}

TEST_CASE("backward: sum gives all-ones, elementwise product routes the partner") {
    Rng rng(3);
    {
        Tensor x = Tensor::randn({2, 2}, rng, 1.0f, true);
        Tape tape;
        Tensor loss = sum_all(x);
        tape.backward(loss);
        for (float g : x.grad()) CHECK(g == 1.0f);
    }
    {
        Tensor a = Tensor::randn({2, 3}, rng, 1.0f, true);
        Tensor b = Tensor::randn({2, 3}, rng, 1.0f, false);
        Tape tape;
        Tensor loss = sum_all(mul(a, b));
        tape.backward(loss);
        for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.grad()[size_t(i)] == b.data()[size_t(i)]);
    }
}

TEST_CASE("backward rejects non-scalar loss and empty tape") {
    Rng rng(4);
    Tensor x = Tensor::randn({2, 2}, rng, 1.0f, true);
    {
        Tape tape;
        Tensor y = add(x, x);
        CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
    }
    {
        Tape tape;
        CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0f)), std::runtime_error);
    }
}

TEST_CASE("gradient accumulation is additive until zeroed") {
    Rng rng(5);
    Tensor x = Tensor::randn({3, 3}, rng, 1.0f, true);
    Tensor w1 = Tensor::randn({3, 3}, rng);
    Tensor w2 = Tensor::randn({3, 3}, rng);

    auto loss1 = [&]() { return mean_all(mul(x, w1)); };
    auto loss2 = [&]() { return mean_all(mul(x, w2)); };

    // two passes, separate tapes
    {
        Tape t1;
        t1.backward(loss1());
    }
    {
        Tape t2;
        t2.backward(loss2());
    }
    std::vector<float> accumulated(x.grad().begin(), x.grad().end());

    x.zero_grad();
    {
        Tape t3;
        t3.backward(add(loss1(), loss2()));
    }
    for (size_t i = 0; i < accumulated.size(); ++i) {
        CHECK(std::abs(accumulated[i] - x.grad()[i]) < 1e-6f);
    }
}

TEST_CASE("two backward passes on one tape do not double-count") {
    Rng rng(6);
    Tensor x = Tensor::randn({4}, rng, 1.0f, true);
    Tape tape;
    Tensor h = mul(x, x);
    Tensor l1 = sum_all(h);
    Tensor l2 = mean_all(h);
    tape.backward(l1);
    std::vector<float> g1(x.grad().begin(), x.grad().end());
    x.zero_grad();
    tape.backward(l2);
    for (int64_t i = 0; i < x.numel(); ++i) {
        // d(mean)/dx = 2x/4
        CHECK(x.grad()[size_t(i)] == doctest::Approx(2.0f * x.data()[size_t(i)] / 4.0f).epsilon(1e-6));
        CHECK(g1[size_t(i)] == doctest::Approx(2.0f * x.data()[size_t(i)]).epsilon(1e-6));
    }
}

TEST_CASE("grad_check: exact quadratic") {
    Rng rng(7);
    Tensor x = Tensor::randn({2, 3}, rng);
    auto f = [](const Tensor& t) { return sum_all(mul(t, t)); };
    // central differences are exact for quadratics, so a large step keeps
    // f32 roundoff negligible
    CHECK(grad_check(f, x, 1.0f) < 1e-6f);
}

TEST_CASE("grad_check: every core op on random small shapes") {
    Rng rng(8);
    const float h = 1e-2f;
    auto check = [&](const std::function<Tensor(const Tensor&)>& f, const Tensor& x, float tol = 1e-4f) {
        CHECK(grad_check(f, x, h) < tol);
    };
    // probe partners bounded away from zero, so no gradient coordinate
    // degenerates relative to the f32 noise floor
    auto pos = [&](const Shape& s) { return Tensor::uniform_random(s, rng, 0.5f, 1.5f); };
    auto rnd = [&](const Shape& s) { return Tensor::uniform_random(s, rng, -1.0f, 1.0f); };

    Tensor m = pos({4, 3});
    check([&](const Tensor& t) { return mean_all(matmul(t, m)); }, rnd({5, 4}));
    check([&](const Tensor& t) { return mean_all(matmul(m, t)); }, rnd({3, 5}));

    Tensor other = pos({4, 4});
    check([&](const Tensor& t) { return mean_all(mul(add(t, other), other)); }, rnd({4, 4}));
    check([&](const Tensor& t) { return mean_all(mul(add(other, t), other)); }, rnd({4}));  // broadcast small side
    check([&](const Tensor& t) { return mean_all(mul(sub(t, other), other)); }, rnd({4, 4}));
    check([&](const Tensor& t) { return mean_all(mul(sub(other, t), other)); }, rnd({4, 4}));
    check([&](const Tensor& t) { return mean_all(mul(t, other)); }, rnd({4, 4}));
    check([&](const Tensor& t) { return mean_all(mul(other, t)); }, rnd({4}));
    check([&](const Tensor& t) { return mean_all(scalar_mul(t, -2.5f)); }, rnd({3, 3}));

    Tensor cpart = rnd({2, 3});
    Tensor wc = pos({4, 3});
    check([&](const Tensor& t) { return mean_all(mul(concat({t, cpart}, 0), wc)); }, rnd({2, 3}));
    Tensor ws = pos({3, 2});
    check([&](const Tensor& t) { return mean_all(mul(slice(t, 1, 1, 2), ws)); }, rnd({3, 4}));
    Tensor w62 = pos({6, 2});
    check([&](const Tensor& t) { return mean_all(mul(reshape(t, {6, 2}), w62)); }, rnd({3, 4}));
    Tensor w43 = pos({4, 3});
    check([&](const Tensor& t) { return mean_all(mul(transpose_last(t), w43)); }, rnd({3, 4}));

    // spread weights so softmax gradients do not cancel
    std::vector<float> wsmv(15);
    for (size_t i = 0; i < wsmv.size(); ++i) wsmv[i] = (i % 2 ? 1.7f : -1.3f) + 0.1f * float(i % 5);
    Tensor wsm({3, 5}, wsmv);
    check([&](const Tensor& t) { return mean_all(mul(softmax_last(t), wsm)); }, rnd({3, 5}));

    // stay clear of the flat spot of the gelu derivative near -0.78
    check([&](const Tensor& t) { return mean_all(gelu(t)); }, Tensor::uniform_random({4, 4}, rng, 0.1f, 1.5f));
    check([&](const Tensor& t) { return mean_all(t); }, rnd({7}));
    check([&](const Tensor& t) { return sum_all(t); }, rnd({7}));
    check([&](const Tensor& t) { return squared_error(t, other); }, rnd({4, 4}));
    check([&](const Tensor& t) { return squared_error(other, t); }, rnd({4, 4}));

    // layer-norm input direction: alternating rows make the normalized values
    // a clean +-1 pattern, and the probe weights put their energy into a
    // component the centering projection cannot null
    Tensor gamma = Tensor::uniform_random({8}, rng, 0.9f, 1.1f);
    Tensor beta = Tensor::uniform_random({8}, rng, -0.3f, 0.3f);
    const float wpat[4] = {2.0f, 2.0f, 0.4f, 0.4f};
    std::vector<float> wlnv(32);
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < 8; ++i) wlnv[size_t(r * 8 + i)] = wpat[(i + r) % 4];
    Tensor wln({4, 8}, wlnv);
    std::vector<float> xv(32);
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < 8; ++i)
            xv[size_t(r * 8 + i)] = 0.3f * float(r) + ((i % 2) ? 1.0f : -1.0f) + 0.03f * float((i * 5 + r * 3) % 7 - 3);
    CHECK(grad_check([&](const Tensor& t) { return sum_all(mul(layer_norm_last(t, gamma, beta), wln)); },
                     Tensor({4, 8}, xv), 2e-2f) < 1e-4f);
}

TEST_CASE("layer-norm gradients vs double-precision reference oracle") {
    Rng rng(6);
    const int R = 4, D = 8;
    Tensor x = Tensor::randn({R, D}, rng);
    Tensor gamma = Tensor::uniform_random({D}, rng, 0.5f, 1.5f);
    Tensor beta = Tensor::randn({D}, rng);
    Tensor weight = Tensor::uniform_random({R, D}, rng, 0.5f, 1.5f);

    // independent re-derivation of the probe in double precision
    auto ref = [&](const std::vector<double>& xs, const std::vector<double>& gs,
                   const std::vector<double>& bs) {
        double total = 0.0;
        for (int r = 0; r < R; ++r) {
            double mean = 0.0;
            for (int i = 0; i < D; ++i) mean += xs[size_t(r * D + i)];
            mean /= D;
            double var = 0.0;
            for (int i = 0; i < D; ++i) {
                const double d = xs[size_t(r * D + i)] - mean;
                var += d * d;
            }
            var /= D;
            const double istd = 1.0 / std::sqrt(var + 1e-5);
            for (int i = 0; i < D; ++i) {
                const double hat = (xs[size_t(r * D + i)] - mean) * istd;
                total += (gs[size_t(i)] * hat + bs[size_t(i)]) * double(weight.data()[size_t(r * D + i)]);
            }
        }
        return total;
    };
    auto as_double = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
    const std::vector<double> xd = as_double(x), gd = as_double(gamma), bd = as_double(beta);

    Tensor xg = x.detached_clone(true);
    Tensor gg = gamma.detached_clone(true);
    Tensor bg = beta.detached_clone(true);
    {
        Tape tape;
        tape.backward(sum_all(mul(layer_norm_last(xg, gg, bg), weight)));
    }
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return ref(v, gd, bd); }, xd, xg.grad(), 1e-4) <
          1e-5f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return ref(xd, v, bd); }, gd, gg.grad(), 1e-4) <
          1e-5f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return ref(xd, gd, v); }, bd, bg.grad(), 1e-4) <
          1e-5f);
}

TEST_CASE("random 3-layer MLP gradients vs finite-difference oracle at h=1e-3") {
    Rng rng(10);
    const int S = 5, I = 6, H = 8;
    Tensor w1 = Tensor::randn({I, H}, rng, 0.4f);
    Tensor b1 = Tensor::randn({H}, rng, 0.1f);
    Tensor w2 = Tensor::randn({H, H}, rng, 0.35f);
    Tensor b2 = Tensor::randn({H}, rng, 0.1f);
    Tensor w3 = Tensor::randn({H, 1}, rng, 0.35f);
    Tensor input = Tensor::randn({S, I}, rng);
    Tensor target = Tensor::randn({S, 1}, rng);

    // double-precision re-derivation of the whole forward pass
    auto ref = [&](const std::vector<double>& p1, const std::vector<double>& p2, const std::vector<double>& p3,
                   const std::vector<double>& p4, const std::vector<double>& p5) {
        auto dgelu = [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); };
        double loss = 0.0;
        for (int s = 0; s < S; ++s) {
            std::vector<double> h1(H), h2(H);
            for (int j = 0; j < H; ++j) {
                double acc = p2[size_t(j)];
                for (int i = 0; i < I; ++i) acc += double(input.data()[size_t(s * I + i)]) * p1[size_t(i * H + j)];
                h1[size_t(j)] = dgelu(acc);
            }
            for (int j = 0; j < H; ++j) {
                double acc = p4[size_t(j)];
                for (int i = 0; i < H; ++i) acc += h1[size_t(i)] * p3[size_t(i * H + j)];
                h2[size_t(j)] = dgelu(acc);
            }
            double out = 0.0;
            for (int i = 0; i < H; ++i) out += h2[size_t(i)] * p5[size_t(i)];
            const double d = out - double(target.data()[size_t(s)]);
            loss += d * d;
        }
        return loss / double(S);
    };
    auto as_double = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
    std::vector<double> p1 = as_double(w1), p2 = as_double(b1), p3 = as_double(w2), p4 = as_double(b2),
                        p5 = as_double(w3);

    Tensor g1 = w1.detached_clone(true), g2 = b1.detached_clone(true), g3 = w2.detached_clone(true),
           g4 = b2.detached_clone(true), g5 = w3.detached_clone(true);
    {
        Tape tape;
        Tensor h1 = gelu(add(matmul(input, g1), g2));
        Tensor h2 = gelu(add(matmul(h1, g3), g4));
        tape.backward(squared_error(matmul(h2, g5), target));
    }
    const double h = 1e-3;
    auto at = [&](int which, const std::vector<double>& v) {
        switch (which) {
            case 0: return ref(v, p2, p3, p4, p5);
            case 1: return ref(p1, v, p3, p4, p5);
            case 2: return ref(p1, p2, v, p4, p5);
            case 3: return ref(p1, p2, p3, v, p5);
            default: return ref(p1, p2, p3, p4, v);
        }
    };
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return at(0, v); }, p1, g1.grad(), h) < 1e-4f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return at(1, v); }, p2, g2.grad(), h) < 1e-4f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return at(2, v); }, p3, g3.grad(), h) < 1e-4f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return at(3, v); }, p4, g4.grad(), h) < 1e-4f);
    CHECK(fd_oracle_max_rel([&](const std::vector<double>& v) { return at(4, v); }, p5, g5.grad(), h) < 1e-4f);
}

TEST_CASE("grad_check rejects a non-deterministic function") {
    Tensor x = Tensor::scalar(1.0f);
    int calls = 0;
    auto f = [&calls](const Tensor& t) {
        ++calls;
        return scalar_mul(t, float(calls));
    };
    CHECK_THROWS_AS(grad_check(f, x, 1e-3f), std::runtime_error);
}

TEST_CASE("determinism: same seed and op sequence give bitwise equal results") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        Tensor a = Tensor::randn({6, 6}, rng, 1.0f, true);
        Tensor b = Tensor::randn({6, 6}, rng);
        Tape tape;
        Tensor y = softmax_last(matmul(gelu(a), b));
        Tensor loss = mean_all(y);
        tape.backward(loss);
        std::vector<float> out(y.data().begin(), y.data().end());
        out.insert(out.end(), a.grad().begin(), a.grad().end());
        return out;
    };
    auto r1 = run(42), r2 = run(42);
    CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(float)) == 0);
}

TEST_CASE("finite checks raise on NaN in debug-checked mode") {
    set_finite_checks(true);
    Tensor x = Tensor::full({2}, 1e30f);
    CHECK_THROWS_AS(mul(x, x), std::runtime_error);
    CHECK_THROWS_AS(Tensor({1}, {std::nanf("")}), std::runtime_error);
    set_finite_checks(false);
    Tensor y = mul(x, x);  // passes silently when disabled
    CHECK(std::isinf(y.data()[0]));
}

TEST_CASE("batched matmul matches per-slice matmul") {
    Rng rng(11);
    Tensor a = Tensor::randn({3, 4, 5}, rng);
    Tensor b = Tensor::randn({3, 5, 2}, rng);
    Tensor y = matmul(a, b);
    CHECK(y.shape() == Shape{3, 4, 2});
    for (int s = 0; s < 3; ++s) {
        Tensor as = slice(a, 0, s, 1);
        Tensor bs = slice(b, 0, s, 1);
        Tensor ys = matmul(reshape(as, {4, 5}), reshape(bs, {5, 2}));
        for (int i = 0; i < 8; ++i) {
            CHECK(ys.data()[size_t(i)] == y.data()[size_t(s * 8 + i)]);
        }
    }
}
