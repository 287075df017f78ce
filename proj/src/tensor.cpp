#include "vstyle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace vstyle {

namespace {

bool g_finite_checks = false;

void require_finite(const char* op, std::span<const float> v) {
    if (!g_finite_checks) return;
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
        }
    }
}

void accumulate(std::vector<float>& dst, std::span<const float> src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

// Leading-singleton broadcast: small, left-padded with 1s, must equal a
// suffix of big. Returns the replication count (product of leading dims).
int64_t broadcast_lead(const std::string& op, const Shape& big, const Shape& small) {
    if (small.size() > big.size()) shape_error(op, big, small);
    size_t off = big.size() - small.size();
    Shape padded(big.size(), 1);
    std::copy(small.begin(), small.end(), padded.begin() + long(off));
    size_t k = 0;
    while (k < big.size() && padded[k] == 1 && big[k] != 1) ++k;
    int64_t lead = 1;
    for (size_t i = 0; i < k; ++i) lead *= big[i];
    for (size_t i = k; i < big.size(); ++i) {
        if (padded[i] != big[i]) shape_error(op, big, small);
    }
    return lead;
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks_enabled() { return g_finite_checks; }

int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad) {
    if (numel_of(shape) != int64_t(data.size())) {
        throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match data length " +
                                    std::to_string(data.size()));
    }
    impl_ = std::make_shared<TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
    require_finite("tensor-create", impl_->data);
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
    return Tensor(s, std::vector<float>(size_t(numel_of(s)), 0.0f), requires_grad);
}

Tensor Tensor::full(const Shape& s, float v, bool requires_grad) {
    return Tensor(s, std::vector<float>(size_t(numel_of(s)), v), requires_grad);
}

Tensor Tensor::scalar(float v) { return Tensor({1}, {v}); }

Tensor Tensor::randn(const Shape& s, Rng& rng, float scale, bool requires_grad) {
    std::vector<float> d(size_t(numel_of(s)));
    for (auto& x : d) x = rng.normal() * scale;
    return Tensor(s, std::move(d), requires_grad);
}

Tensor Tensor::uniform_random(const Shape& s, Rng& rng, float lo, float hi, bool requires_grad) {
    std::vector<float> d(size_t(numel_of(s)));
    for (auto& x : d) x = rng.uniform(lo, hi);
    return Tensor(s, std::move(d), requires_grad);
}

float Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item: tensor is not scalar, shape " + shape_str(shape()));
    return impl_->data[0];
}

std::vector<float>& Tensor::grad_buffer() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
    return impl_->grad;
}

void Tensor::zero_grad() const {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

Tensor Tensor::detached_clone(bool requires_grad) const {
    return Tensor(impl_->shape, impl_->data, requires_grad);
}

// ---- Tape ------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
    prev_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backprop) {
    entries_.push_back({std::move(inputs), std::move(output), std::move(backprop)});
}

void Tape::backward(const Tensor& loss) {
    if (entries_.empty()) throw std::runtime_error("backward: tape is empty");
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    }
    bool on_tape = false;
    for (const auto& e : entries_) {
        if (e.output.impl() == loss.impl()) on_tape = true;
    }
    if (!on_tape) throw std::runtime_error("backward: loss was not produced on this tape");

    // Interior grads are per-pass scratch; leaves keep accumulating.
    for (auto& e : entries_) {
        e.output.grad_buffer();
        e.output.zero_grad();
    }
    Tensor(loss).grad_buffer()[0] = 1.0f;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        it->backprop();
    }
}

// ---- op helpers ------------------------------------------------------------

namespace {

Tensor make_output(const char* op, Shape shape, std::vector<float> data) {
    Tensor t(std::move(shape), std::move(data));
    require_finite(op, t.data());
    return t;
}

bool should_record(std::initializer_list<const Tensor*> ins) {
    if (!Tape::active()) return false;
    for (const Tensor* t : ins) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void mark_interior(Tensor& t) {
    t.impl()->requires_grad = true;
    t.impl()->leaf = false;
}

// Raw gemm kernels, row-major. C[m,n] += sum_k A[m,k] B[k,n] and friends.
void gemm_nn(const float* a, const float* b, float* c, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const float* arow = a + int64_t(i) * K;
        float* crow = c + int64_t(i) * N;
        for (int k = 0; k < K; ++k) {
            const float av = arow[k];
            if (av == 0.0f) continue;
            const float* brow = b + int64_t(k) * N;
            for (int n = 0; n < N; ++n) crow[n] += av * brow[n];
        }
    }
}

// C[m,n] += sum_k A[m,k] B[n,k]   (B transposed)
void gemm_nt(const float* a, const float* b, float* c, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const float* arow = a + int64_t(i) * K;
        float* crow = c + int64_t(i) * N;
        for (int n = 0; n < N; ++n) {
            const float* brow = b + int64_t(n) * K;
            float acc = 0.0f;
            for (int k = 0; k < K; ++k) acc += arow[k] * brow[k];
            crow[n] += acc;
        }
    }
}

// C[k,n] += sum_m A[m,k] B[m,n]   (A transposed)
void gemm_tn(const float* a, const float* b, float* c, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const float* arow = a + int64_t(m) * K;
        const float* brow = b + int64_t(m) * N;
        for (int k = 0; k < K; ++k) {
            const float av = arow[k];
            if (av == 0.0f) continue;
            float* crow = c + int64_t(k) * N;
            for (int n = 0; n < N; ++n) crow[n] += av * brow[n];
        }
    }
}

}  // namespace

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2 || a.rank() != b.rank()) shape_error("matmul", a.shape(), b.shape());
    const int r = a.rank();
    int64_t batch = 1;
    for (int i = 0; i < r - 2; ++i) {
        if (a.dim(i) != b.dim(i)) shape_error("matmul", a.shape(), b.shape());
        batch *= a.dim(i);
    }
    const int M = a.dim(r - 2), K = a.dim(r - 1), Kb = b.dim(r - 2), N = b.dim(r - 1);
    if (K != Kb) shape_error("matmul", a.shape(), b.shape());

    Shape out_shape(a.shape());
    out_shape[size_t(r - 1)] = N;
    std::vector<float> out(size_t(batch * M * N), 0.0f);
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    for (int64_t s = 0; s < batch; ++s) {
        gemm_nn(pa + s * M * K, pb + s * K * N, out.data() + s * M * N, M, K, N);
    }
    Tensor y = make_output("matmul", std::move(out_shape), std::move(out));

    if (should_record({&a, &b})) {
        mark_interior(y);
        Tape::active()->record({a, b}, y, [a, b, y, batch, M, K, N]() mutable {
            const float* dy = y.grad().data();
            if (a.requires_grad()) {
                float* da = a.grad_buffer().data();
                const float* pb2 = b.data().data();
                for (int64_t s = 0; s < batch; ++s) {
                    gemm_nt(dy + s * M * N, pb2 + s * K * N, da + s * M * K, M, N, K);
                }
            }
            if (b.requires_grad()) {
                float* db = b.grad_buffer().data();
                const float* pa2 = a.data().data();
                for (int64_t s = 0; s < batch; ++s) {
                    gemm_tn(pa2 + s * M * K, dy + s * M * N, db + s * K * N, M, K, N);
                }
            }
        });
    }
    return y;
}

namespace {

enum class EwKind { Add, Sub, Mul };

Tensor elementwise(const char* name, EwKind kind, const Tensor& a, const Tensor& b) {
    // Orient so that `big` drives the output shape.
    const bool b_small = numel_of(a.shape()) >= numel_of(b.shape());
    const Tensor& big = b_small ? a : b;
    const Tensor& small = b_small ? b : a;
    const int64_t lead = broadcast_lead(name, big.shape(), small.shape());
    const int64_t rest = small.numel();
    if (lead * rest != big.numel()) shape_error(name, a.shape(), b.shape());

    std::vector<float> out(size_t(big.numel()));
    const float* pb = big.data().data();
    const float* ps = small.data().data();
    for (int64_t l = 0; l < lead; ++l) {
        const float* pbig = pb + l * rest;
        float* po = out.data() + l * rest;
        switch (kind) {
            case EwKind::Add:
                for (int64_t i = 0; i < rest; ++i) po[i] = b_small ? pbig[i] + ps[i] : ps[i] + pbig[i];
                break;
            case EwKind::Sub:
                for (int64_t i = 0; i < rest; ++i) po[i] = b_small ? pbig[i] - ps[i] : ps[i] - pbig[i];
                break;
            case EwKind::Mul:
                for (int64_t i = 0; i < rest; ++i) po[i] = pbig[i] * ps[i];
                break;
        }
    }
    Tensor y = make_output(name, big.shape(), std::move(out));

    if (should_record({&a, &b})) {
        mark_interior(y);
        Tensor big_c = big, small_c = small;
        Tape::active()->record({a, b}, y, [=]() mutable {
            const float* dy = y.grad().data();
            auto add_into_big = [&](std::vector<float>& g, float sign) {
                const float* ps2 = small_c.data().data();
                for (int64_t l = 0; l < lead; ++l) {
                    for (int64_t i = 0; i < rest; ++i) {
                        float f = (kind == EwKind::Mul) ? ps2[i] : sign;
                        g[size_t(l * rest + i)] += dy[l * rest + i] * f;
                    }
                }
            };
            auto add_into_small = [&](std::vector<float>& g, float sign) {
                const float* pb2 = big_c.data().data();
                for (int64_t l = 0; l < lead; ++l) {
                    for (int64_t i = 0; i < rest; ++i) {
                        float f = (kind == EwKind::Mul) ? pb2[l * rest + i] : sign;
                        g[size_t(i)] += dy[l * rest + i] * f;
                    }
                }
            };
            const float sign_big = 1.0f;
            const float sign_small = (kind == EwKind::Sub) ? (b_small ? -1.0f : 1.0f) : 1.0f;
            const float sign_big2 = (kind == EwKind::Sub && !b_small) ? -1.0f : sign_big;
            if (big_c.requires_grad()) add_into_big(big_c.grad_buffer(), sign_big2);
            if (small_c.requires_grad()) add_into_small(small_c.grad_buffer(), sign_small);
        });
    }
    return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise("add", EwKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise("sub", EwKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise("mul", EwKind::Mul, a, b); }

Tensor scalar_mul(const Tensor& a, float s) {
    std::vector<float> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= s;
    Tensor y = make_output("scalar-mul", a.shape(), std::move(out));
    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y, s]() mutable {
            if (!a.requires_grad()) return;
            auto& g = a.grad_buffer();
            const float* dy = y.grad().data();
            for (size_t i = 0; i < g.size(); ++i) g[i] += s * dy[i];
        });
    }
    return y;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Shape& first = parts[0].shape();
    const int r = int(first.size());
    if (axis < 0 || axis >= r) throw std::invalid_argument("concat: bad axis " + std::to_string(axis));
    int axis_total = 0;
    for (const auto& p : parts) {
        if (p.rank() != r) shape_error("concat", first, p.shape());
        for (int i = 0; i < r; ++i) {
            if (i != axis && p.dim(i) != first[size_t(i)]) shape_error("concat", first, p.shape());
        }
        axis_total += p.dim(axis);
    }
    Shape out_shape = first;
    out_shape[size_t(axis)] = axis_total;

    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= first[size_t(i)];
    for (int i = axis + 1; i < r; ++i) inner *= first[size_t(i)];

    std::vector<float> out(size_t(numel_of(out_shape)));
    int64_t axis_off = 0;
    for (const auto& p : parts) {
        const int64_t pa = p.dim(axis);
        const float* src = p.data().data();
        for (int64_t o = 0; o < outer; ++o) {
            std::memcpy(out.data() + (o * axis_total + axis_off) * inner, src + o * pa * inner,
                        size_t(pa * inner) * sizeof(float));
        }
        axis_off += pa;
    }
    Tensor y = make_output("concat", std::move(out_shape), std::move(out));

    bool rec = false;
    if (Tape::active()) {
        for (const auto& p : parts) rec = rec || p.requires_grad();
    }
    if (rec) {
        mark_interior(y);
        std::vector<Tensor> ins = parts;
        Tape::active()->record(ins, y, [parts, y, outer, inner, axis_total, axis]() mutable {
            const float* dy = y.grad().data();
            int64_t axis_off = 0;
            for (auto& p : parts) {
                const int64_t pa = p.dim(axis);
                if (p.requires_grad()) {
                    float* g = p.grad_buffer().data();
                    for (int64_t o = 0; o < outer; ++o) {
                        const float* s = dy + (o * axis_total + axis_off) * inner;
                        float* d = g + o * pa * inner;
                        for (int64_t i = 0; i < pa * inner; ++i) d[i] += s[i];
                    }
                }
                axis_off += pa;
            }
        });
    }
    return y;
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
    const int r = a.rank();
    if (axis < 0 || axis >= r) throw std::invalid_argument("slice: bad axis " + std::to_string(axis));
    if (start < 0 || len <= 0 || start + len > a.dim(axis)) {
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                                    ") out of bounds for axis extent " + std::to_string(a.dim(axis)));
    }
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.dim(i);
    for (int i = axis + 1; i < r; ++i) inner *= a.dim(i);
    const int64_t da = a.dim(axis);

    Shape out_shape = a.shape();
    out_shape[size_t(axis)] = len;
    std::vector<float> out(size_t(outer * len * inner));
    const float* src = a.data().data();
    for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + o * len * inner, src + (o * da + start) * inner,
                    size_t(int64_t(len) * inner) * sizeof(float));
    }
    Tensor y = make_output("slice", std::move(out_shape), std::move(out));

    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y, outer, inner, da, start, len]() mutable {
            if (!a.requires_grad()) return;
            float* g = a.grad_buffer().data();
            const float* dy = y.grad().data();
            for (int64_t o = 0; o < outer; ++o) {
                float* d = g + (o * da + start) * inner;
                const float* s = dy + o * int64_t(len) * inner;
                for (int64_t i = 0; i < int64_t(len) * inner; ++i) d[i] += s[i];
            }
        });
    }
    return y;
}

Tensor reshape(const Tensor& a, const Shape& s) {
    if (numel_of(s) != a.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(s));
    }
    Tensor y(s, std::vector<float>(a.data().begin(), a.data().end()));
    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y]() mutable {
            if (!a.requires_grad()) return;
            accumulate(a.grad_buffer(), y.grad());
        });
    }
    return y;
}

Tensor transpose_last(const Tensor& a) {
    const int r = a.rank();
    if (r < 2) throw std::invalid_argument("transpose: rank must be >= 2, got shape " + shape_str(a.shape()));
    const int M = a.dim(r - 2), N = a.dim(r - 1);
    int64_t batch = a.numel() / (int64_t(M) * N);
    Shape out_shape = a.shape();
    std::swap(out_shape[size_t(r - 2)], out_shape[size_t(r - 1)]);

    std::vector<float> out(size_t(a.numel()));
    const float* src = a.data().data();
    for (int64_t s = 0; s < batch; ++s) {
        const float* ps = src + s * M * N;
        float* po = out.data() + s * M * N;
        for (int i = 0; i < M; ++i) {
            for (int j = 0; j < N; ++j) po[int64_t(j) * M + i] = ps[int64_t(i) * N + j];
        }
    }
    Tensor y = make_output("transpose", std::move(out_shape), std::move(out));

    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y, batch, M, N]() mutable {
            if (!a.requires_grad()) return;
            float* g = a.grad_buffer().data();
            const float* dy = y.grad().data();
            for (int64_t s = 0; s < batch; ++s) {
                const float* ps = dy + s * M * N;
                float* pg = g + s * M * N;
                for (int j = 0; j < N; ++j) {
                    for (int i = 0; i < M; ++i) pg[int64_t(i) * N + j] += ps[int64_t(j) * M + i];
                }
            }
        });
    }
    return y;
}

Tensor softmax_last(const Tensor& a) {
    const int r = a.rank();
    if (r < 1) throw std::invalid_argument("softmax: rank must be >= 1");
    const int64_t D = a.dim(r - 1);
    const int64_t rows = a.numel() / D;
    std::vector<float> out(size_t(a.numel()));
    const float* src = a.data().data();
    for (int64_t row = 0; row < rows; ++row) {
        const float* x = src + row * D;
        float* y = out.data() + row * D;
        float mx = x[0];
        for (int64_t i = 1; i < D; ++i) mx = std::max(mx, x[i]);
        float sum = 0.0f;
        for (int64_t i = 0; i < D; ++i) {
            y[i] = std::exp(x[i] - mx);
            sum += y[i];
        }
        const float inv = 1.0f / sum;
        for (int64_t i = 0; i < D; ++i) y[i] *= inv;
    }
    Tensor y = make_output("softmax", a.shape(), std::move(out));

    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y, rows, D]() mutable {
            if (!a.requires_grad()) return;
            float* g = a.grad_buffer().data();
            const float* yv = y.data().data();
            const float* dy = y.grad().data();
            for (int64_t row = 0; row < rows; ++row) {
                const float* yr = yv + row * D;
                const float* dr = dy + row * D;
                float dot = 0.0f;
                for (int64_t i = 0; i < D; ++i) dot += yr[i] * dr[i];
                float* gr = g + row * D;
                for (int64_t i = 0; i < D; ++i) gr[i] += yr[i] * (dr[i] - dot);
            }
        });
    }
    return y;
}

Tensor layer_norm_last(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    const int r = x.rank();
    const int64_t D = x.dim(r - 1);
    if (gamma.numel() != D || beta.numel() != D) shape_error("layer-norm", x.shape(), gamma.shape());
    const int64_t rows = x.numel() / D;

    std::vector<float> out(static_cast<size_t>(x.numel()));
    std::vector<float> xhat(static_cast<size_t>(x.numel()));
    std::vector<float> inv_std(static_cast<size_t>(rows));
    const float* px = x.data().data();
    const float* pg = gamma.data().data();
    const float* pb = beta.data().data();
    for (int64_t row = 0; row < rows; ++row) {
        const float* xr = px + row * D;
        double mean_acc = 0.0;
        for (int64_t i = 0; i < D; ++i) mean_acc += xr[i];
        const float mean = float(mean_acc / double(D));
        double var_acc = 0.0;
        for (int64_t i = 0; i < D; ++i) {
            const double d = double(xr[i]) - double(mean);
            var_acc += d * d;
        }
        const float var = float(var_acc / double(D));
        const float istd = 1.0f / std::sqrt(var + eps);
        inv_std[size_t(row)] = istd;
        float* hr = xhat.data() + row * D;
        float* yr = out.data() + row * D;
        for (int64_t i = 0; i < D; ++i) {
            hr[i] = (xr[i] - mean) * istd;
            yr[i] = pg[i] * hr[i] + pb[i];
        }
    }
    Tensor y = make_output("layer-norm", x.shape(), std::move(out));

    if (should_record({&x, &gamma, &beta})) {
        mark_interior(y);
        auto xhat_p = std::make_shared<std::vector<float>>(std::move(xhat));
        auto istd_p = std::make_shared<std::vector<float>>(std::move(inv_std));
        Tape::active()->record({x, gamma, beta}, y, [x, gamma, beta, y, xhat_p, istd_p, rows, D]() mutable {
            const float* dy = y.grad().data();
            const float* h = xhat_p->data();
            const float* pg2 = gamma.data().data();
            if (gamma.requires_grad() || beta.requires_grad()) {
                std::vector<float>* dgm = gamma.requires_grad() ? &gamma.grad_buffer() : nullptr;
                std::vector<float>* dbt = beta.requires_grad() ? &beta.grad_buffer() : nullptr;
                for (int64_t row = 0; row < rows; ++row) {
                    const float* dr = dy + row * D;
                    const float* hr = h + row * D;
                    for (int64_t i = 0; i < D; ++i) {
                        if (dgm) (*dgm)[size_t(i)] += dr[i] * hr[i];
                        if (dbt) (*dbt)[size_t(i)] += dr[i];
                    }
                }
            }
            if (x.requires_grad()) {
                float* gx = x.grad_buffer().data();
                for (int64_t row = 0; row < rows; ++row) {
                    const float* dr = dy + row * D;
                    const float* hr = h + row * D;
                    const float istd = (*istd_p)[size_t(row)];
                    float sum_g = 0.0f, sum_gh = 0.0f;
                    for (int64_t i = 0; i < D; ++i) {
                        const float gd = pg2[i] * dr[i];
                        sum_g += gd;
                        sum_gh += gd * hr[i];
                    }
                    const float inv_d = 1.0f / float(D);
                    float* gr = gx + row * D;
                    for (int64_t i = 0; i < D; ++i) {
                        const float gd = pg2[i] * dr[i];
                        gr[i] += istd * (gd - sum_g * inv_d - hr[i] * sum_gh * inv_d);
                    }
                }
            }
        });
    }
    return y;
}

Tensor gelu(const Tensor& a) {
    // exact erf form
    constexpr float inv_sqrt2 = 0.7071067811865476f;
    constexpr float inv_sqrt_2pi = 0.3989422804014327f;
    std::vector<float> out(size_t(a.numel()));
    const float* src = a.data().data();
    for (size_t i = 0; i < out.size(); ++i) {
        const float v = src[i];
        out[i] = 0.5f * v * (1.0f + std::erf(v * inv_sqrt2));
    }
    Tensor y = make_output("gelu", a.shape(), std::move(out));

    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y]() mutable {
            if (!a.requires_grad()) return;
            auto& g = a.grad_buffer();
            const float* dy = y.grad().data();
            const float* x = a.data().data();
            for (size_t i = 0; i < g.size(); ++i) {
                const float v = x[i];
                const float cdf = 0.5f * (1.0f + std::erf(v * inv_sqrt2));
                const float pdf = inv_sqrt_2pi * std::exp(-0.5f * v * v);
                g[i] += dy[i] * (cdf + v * pdf);
            }
        });
    }
    return y;
}

namespace {

Tensor reduce_all(const char* name, const Tensor& a, bool mean) {
    double acc = 0.0;
    for (float v : a.data()) acc += v;
    const float scale = mean ? 1.0f / float(a.numel()) : 1.0f;
    Tensor y = make_output(name, {1}, {float(acc) * scale});
    if (should_record({&a})) {
        mark_interior(y);
        Tape::active()->record({a}, y, [a, y, scale]() mutable {
            if (!a.requires_grad()) return;
            auto& g = a.grad_buffer();
            const float dy = y.grad()[0] * scale;
            for (auto& v : g) v += dy;
        });
    }
    return y;
}

}  // namespace

Tensor mean_all(const Tensor& a) { return reduce_all("mean-reduce", a, true); }
Tensor sum_all(const Tensor& a) { return reduce_all("sum-reduce", a, false); }

Tensor squared_error(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("squared-error", a.shape(), b.shape());
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double d = double(pa[i]) - double(pb[i]);
        acc += d * d;
    }
    const float inv_n = 1.0f / float(a.numel());
    Tensor y = make_output("squared-error", {1}, {float(acc) * inv_n});

    if (should_record({&a, &b})) {
        mark_interior(y);
        Tape::active()->record({a, b}, y, [a, b, y, inv_n]() mutable {
            const float dy = y.grad()[0];
            const float* pa2 = a.data().data();
            const float* pb2 = b.data().data();
            const float c = 2.0f * inv_n * dy;
            if (a.requires_grad()) {
                auto& g = a.grad_buffer();
                for (size_t i = 0; i < g.size(); ++i) g[i] += c * (pa2[i] - pb2[i]);
            }
            if (b.requires_grad()) {
                auto& g = b.grad_buffer();
                for (size_t i = 0; i < g.size(); ++i) g[i] -= c * (pa2[i] - pb2[i]);
            }
        });
    }
    return y;
}

// ---- grad_check ------------------------------------------------------------

float grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, float h) {
    if (h <= 0.0f) throw std::invalid_argument("grad_check: step must be positive");

    Tensor probe = x.detached_clone(false);
    const float y1 = f(probe).item();
    const float y2 = f(probe).item();
    if (std::memcmp(&y1, &y2, sizeof(float)) != 0) {
        throw std::runtime_error("grad_check: function is not deterministic");
    }

    Tensor xg = x.detached_clone(true);
    std::vector<float> analytic;
    {
        Tape tape;
        Tensor loss = f(xg);
        if (loss.numel() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
        tape.backward(loss);
        analytic.assign(xg.grad().begin(), xg.grad().end());
    }

    Tensor xp = x.detached_clone(false);
    float max_rel = 0.0f;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const float orig = xp.raw_data()[size_t(i)];
        xp.raw_data()[size_t(i)] = orig + h;
        const double xplus = double(xp.raw_data()[size_t(i)]);
        const double fp = double(f(xp).item());
        xp.raw_data()[size_t(i)] = orig - h;
        const double xminus = double(xp.raw_data()[size_t(i)]);
        const double fm = double(f(xp).item());
        xp.raw_data()[size_t(i)] = orig;
        // divide by the step as actually realized in f32
        const float numeric = float((fp - fm) / (xplus - xminus));
        const float a = analytic[size_t(i)];
        const float rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8f);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace vstyle
