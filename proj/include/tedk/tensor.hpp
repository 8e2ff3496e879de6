#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tedk {

enum class Precision { f64, f32 };

Precision get_precision();
void set_precision(Precision p);

// Scoped precision override, restores the previous mode on exit.
class PrecisionGuard {
public:
    explicit PrecisionGuard(Precision p) : prev_(get_precision()) { set_precision(p); }
    ~PrecisionGuard() { set_precision(prev_); }
    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
    Precision prev_;
};

// Storage is always double; f32 mode rounds each op's stored outputs through
// float. Reductions still accumulate in double before the final rounding.
inline double round_output(double v) {
    return get_precision() == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // lazily sized to data.size(), zero-filled

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t numel() const { return impl_->data.size(); }
    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    std::vector<double>& grad() { impl_->ensure_grad(); return impl_->grad; }
    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }
    std::shared_ptr<TensorImpl> impl() const { return impl_; }

    double item() const;

    // Same data buffer, cut loose from gradient tracking.
    Tensor detach() const;
    Tensor clone() const;

    Tensor operator+(const Tensor& other) const;
    Tensor operator-(const Tensor& other) const;
    Tensor operator*(const Tensor& other) const;  // elementwise

    Tensor affine(double a, double b) const;  // a * x + b
    Tensor scale(double a) const { return affine(a, 0.0); }

    Tensor log() const;
    Tensor clamped_sqrt() const;  // sqrt(max(x, 0)), zero grad on the clamped branch
    Tensor sigmoid() const;
    Tensor tanh() const;
    Tensor elu() const;
    Tensor relu() const;

    // Copy with a leading batch axis of 1; gradients pass through unchanged.
    Tensor unsqueeze0() const;

    Tensor sum() const;
    Tensor mean() const;
    // Mean with the addends sorted ascending first, so the result is bitwise
    // independent of element order. Same gradient as mean().
    Tensor mean_sorted() const;
    Tensor take(const std::vector<std::int64_t>& indices) const;

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Gradient tape. Constructing one makes it the active tape for this thread;
// ops record backward closures onto it in execution order.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // `out` is the op's output; its adjoint is reset at the start of every
    // backward pass. Pass nullptr for closures with no tracked output.
    void record(std::function<void()> fn, std::shared_ptr<TensorImpl> out = nullptr) {
        nodes_.push_back({std::move(fn), std::move(out)});
    }
    std::size_t size() const { return nodes_.size(); }

    // Zeroes the recorded outputs' adjoints, seeds d(root)/d(root) = 1, and
    // replays closures in reverse. Leaf grads accumulate additively across
    // calls; the caller zeroes those between uses.
    void backward(const Tensor& root);

    static Tape* current();

private:
    struct Node {
        std::function<void()> fn;
        std::shared_ptr<TensorImpl> out;
    };
    std::vector<Node> nodes_;
    Tape* prev_ = nullptr;
};

enum class ActivationKind { Relu, Elu, Tanh };

ActivationKind activation_from_string(const std::string& s);
std::string activation_to_string(ActivationKind k);
Tensor apply_activation(ActivationKind kind, const Tensor& x);

// 3x3 convolution over NCHW input with zero padding equal to the dilation, so
// spatial size is preserved. weight is [Cout, Cin, 3, 3], bias is [Cout].
Tensor conv2d_3x3(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation = 1);

Tensor concat_channels(const std::vector<Tensor>& parts);

// Elementwise sum of K same-shape tensors with the addends sorted ascending
// per element before accumulation, making the result bitwise independent of
// the input order.
Tensor sum_sorted(const std::vector<Tensor>& parts);

struct GradCheckReport {
    double rel_error = 0.0;
    double linf_diff = 0.0;
    double linf_analytic = 0.0;
    double linf_numeric = 0.0;
    bool passed(double tol) const { return rel_error < tol; }
};

// Central-difference check of a scalar-valued function's gradient, run in f64
// regardless of the ambient precision mode. rel_error is
// linf(analytic - numeric) / max(linf(analytic), linf(numeric), 1e-12).
GradCheckReport grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           const std::vector<Tensor>& points, double eps = 1e-5);

}  // namespace tedk
