#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vstyle/rng.hpp"

namespace vstyle {

using Shape = std::vector<int>;

int64_t numel_of(const Shape& s);
std::string shape_str(const Shape& s);

// Debug-checked mode: when enabled, every op output is scanned for NaN/Inf.
void set_finite_checks(bool on);
bool finite_checks_enabled();

struct TensorImpl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until first touched
    bool requires_grad = false;
    bool leaf = true;
};

// Dense row-major f32 tensor. Handle with shared storage; ops are free
// functions that record backward rules on the active Tape.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

    static Tensor zeros(const Shape& s, bool requires_grad = false);
    static Tensor full(const Shape& s, float v, bool requires_grad = false);
    static Tensor scalar(float v);
    static Tensor randn(const Shape& s, Rng& rng, float scale = 1.0f, bool requires_grad = false);
    static Tensor uniform_random(const Shape& s, Rng& rng, float lo, float hi, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return int(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[size_t(i)]; }
    int64_t numel() const { return int64_t(impl_->data.size()); }

    // Handle with shallow-const semantics: const Tensor still allows writing
    // through to the shared storage (optimizer updates, grad accumulation).
    std::span<const float> data() const { return impl_->data; }
    std::span<float> raw_data() const { return impl_->data; }
    float item() const;  // scalar only

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on) const { impl_->requires_grad = on; }
    bool is_leaf() const { return impl_->leaf; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const float> grad() const { return impl_->grad; }
    std::vector<float>& grad_buffer() const;  // allocates zero-filled on first use
    void zero_grad() const;

    // Same data, fresh node detached from any graph.
    Tensor detached_clone(bool requires_grad = false) const;

    TensorImpl* impl() const { return impl_.get(); }
    std::shared_ptr<TensorImpl> impl_ptr() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Wengert list. Entries are recorded in execution order, which makes the
// list topologically ordered by construction. backward() walks it once in
// reverse. Leaf grads accumulate across backward() calls until zeroed;
// interior grads are reset at the start of each backward().
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    size_t size() const { return entries_.size(); }
    void backward(const Tensor& loss);
    void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backprop);

private:
    struct Entry {
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backprop;
    };
    std::vector<Entry> entries_;
    Tape* prev_ = nullptr;
};

// ---- forward ops ----------------------------------------------------------
// Elementwise ops broadcast only over leading singleton dims: the smaller
// operand, left-padded with 1s, must match a suffix of the larger shape.

Tensor matmul(const Tensor& a, const Tensor& b);  // batched; leading dims equal
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, float s);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor reshape(const Tensor& a, const Shape& s);
Tensor transpose_last(const Tensor& a);
Tensor softmax_last(const Tensor& a);
Tensor layer_norm_last(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);
Tensor gelu(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor squared_error(const Tensor& a, const Tensor& b);  // scalar mean((a-b)^2)

// Central-difference check of f's gradient at x. Returns the max over
// coordinates of |analytic - numeric| / (|analytic| + |numeric| + 1e-8).
// f must be scalar-valued and deterministic (probed by double evaluation).
float grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, float h);

}  // namespace vstyle
