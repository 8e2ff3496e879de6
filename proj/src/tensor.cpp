#include "tedk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tedk {

namespace {

std::atomic<Precision> g_precision{Precision::f64};

thread_local Tape* t_current_tape = nullptr;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
}

Tensor make_output(Shape shape, std::size_t n, bool track) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data.resize(n);
    impl->requires_grad = track;
    return Tensor(std::move(impl));
}

bool tracking(const Tensor& t) { return Tape::current() != nullptr && t.requires_grad(); }

// Elementwise unary op with pointwise derivative computed from (x, y).
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd bwd) {
    bool track = tracking(x);
    Tensor out = make_output(x.shape(), x.numel(), track);
    const auto& xd = x.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = round_output(fwd(xd[i]));
    if (track) {
        auto xi = x.impl();
        auto oi = out.impl();
        Tape::current()->record([xi, oi, bwd]() {
            xi->ensure_grad();
            oi->ensure_grad();
            for (std::size_t i = 0; i < xi->data.size(); ++i) {
                xi->grad[i] += oi->grad[i] * bwd(xi->data[i], oi->data[i]);
            }
        }, oi);
    }
    return out;
}

}  // namespace

Precision get_precision() { return g_precision.load(std::memory_order_relaxed); }
void set_precision(Precision p) { g_precision.store(p, std::memory_order_relaxed); }

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    Tensor t = make_output(std::move(shape), n, requires_grad);
    std::fill(t.data().begin(), t.data().end(), 0.0);
    return t;
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    Tensor t = make_output(std::move(shape), n, requires_grad);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("from_data: " + std::to_string(data.size()) +
                                    " values for shape " + shape_str(shape));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item: tensor has " + std::to_string(numel()) + " elements");
    return impl_->data[0];
}

Tensor Tensor::detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = false;
    return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = impl_->requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::operator+(const Tensor& other) const {
    check_same_shape(*this, other, "add");
    bool track = tracking(*this) || tracking(other);
    Tensor out = make_output(shape(), numel(), track);
    const auto& a = data();
    const auto& b = other.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = round_output(a[i] + b[i]);
    if (track) {
        auto ai = impl_, bi = other.impl(), oi = out.impl();
        Tape::current()->record([ai, bi, oi]() {
            oi->ensure_grad();
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (std::size_t i = 0; i < ai->data.size(); ++i) ai->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (std::size_t i = 0; i < bi->data.size(); ++i) bi->grad[i] += oi->grad[i];
            }
        }, oi);
    }
    return out;
}

Tensor Tensor::operator-(const Tensor& other) const {
    check_same_shape(*this, other, "sub");
    bool track = tracking(*this) || tracking(other);
    Tensor out = make_output(shape(), numel(), track);
    const auto& a = data();
    const auto& b = other.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = round_output(a[i] - b[i]);
    if (track) {
        auto ai = impl_, bi = other.impl(), oi = out.impl();
        Tape::current()->record([ai, bi, oi]() {
            oi->ensure_grad();
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (std::size_t i = 0; i < ai->data.size(); ++i) ai->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (std::size_t i = 0; i < bi->data.size(); ++i) bi->grad[i] -= oi->grad[i];
            }
        }, oi);
    }
    return out;
}

Tensor Tensor::operator*(const Tensor& other) const {
    check_same_shape(*this, other, "mul");
    bool track = tracking(*this) || tracking(other);
    Tensor out = make_output(shape(), numel(), track);
    const auto& a = data();
    const auto& b = other.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = round_output(a[i] * b[i]);
    if (track) {
        auto ai = impl_, bi = other.impl(), oi = out.impl();
        Tape::current()->record([ai, bi, oi]() {
            oi->ensure_grad();
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (std::size_t i = 0; i < ai->data.size(); ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (std::size_t i = 0; i < bi->data.size(); ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
            }
        }, oi);
    }
    return out;
}

Tensor Tensor::affine(double a, double b) const {
    return unary_op(*this, [a, b](double x) { return a * x + b; },
                    [a](double, double) { return a; });
}

Tensor Tensor::log() const {
    return unary_op(*this, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor Tensor::clamped_sqrt() const {
    // Subgradient 0 on the clamped branch, including at exactly 0, so a loss
    // that bottoms out stays finite in the backward pass.
    return unary_op(*this, [](double x) { return std::sqrt(std::max(x, 0.0)); },
                    [](double x, double y) { return x > 0.0 ? 0.5 / y : 0.0; });
}

Tensor Tensor::sigmoid() const {
    return unary_op(*this,
                    [](double x) {
                        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                        double e = std::exp(x);
                        return e / (1.0 + e);
                    },
                    // e^-|x| / (1 + e^-|x|)^2 stays positive far past where
                    // y(1-y) rounds to zero, so saturated units can recover.
                    [](double x, double) {
                        double e = std::exp(-std::fabs(x));
                        return e / ((1.0 + e) * (1.0 + e));
                    });
}

Tensor Tensor::tanh() const {
    return unary_op(*this, [](double x) { return std::tanh(x); },
                    // sech^2 in the same underflow-resistant form as sigmoid
                    [](double x, double) {
                        double e = std::exp(-2.0 * std::fabs(x));
                        double d = 1.0 + e;
                        return 4.0 * e / (d * d);
                    });
}

Tensor Tensor::elu() const {
    return unary_op(*this, [](double x) { return x > 0.0 ? x : std::expm1(x); },
                    [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Tensor Tensor::relu() const {
    return unary_op(*this, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Tensor::unsqueeze0() const {
    bool track = tracking(*this);
    Shape s;
    s.reserve(shape().size() + 1);
    s.push_back(1);
    for (int d : shape()) s.push_back(d);
    Tensor out = make_output(std::move(s), numel(), track);
    out.data() = data();
    if (track) {
        auto xi = impl_, oi = out.impl();
        Tape::current()->record([xi, oi]() {
            xi->ensure_grad();
            oi->ensure_grad();
            for (std::size_t i = 0; i < xi->data.size(); ++i) xi->grad[i] += oi->grad[i];
        }, oi);
    }
    return out;
}

Tensor Tensor::sum() const {
    bool track = tracking(*this);
    double acc = 0.0;
    for (double v : data()) acc += v;
    Tensor out = make_output({1}, 1, track);
    out.data()[0] = round_output(acc);
    if (track) {
        auto xi = impl_, oi = out.impl();
        Tape::current()->record([xi, oi]() {
            xi->ensure_grad();
            oi->ensure_grad();
            double g = oi->grad[0];
            for (std::size_t i = 0; i < xi->data.size(); ++i) xi->grad[i] += g;
        }, oi);
    }
    return out;
}

Tensor Tensor::mean() const {
    if (numel() == 0) throw std::invalid_argument("mean of empty tensor");
    bool track = tracking(*this);
    double acc = 0.0;
    for (double v : data()) acc += v;
    double inv_n = 1.0 / static_cast<double>(numel());
    Tensor out = make_output({1}, 1, track);
    out.data()[0] = round_output(acc * inv_n);
    if (track) {
        auto xi = impl_, oi = out.impl();
        Tape::current()->record([xi, oi, inv_n]() {
            xi->ensure_grad();
            oi->ensure_grad();
            double g = oi->grad[0] * inv_n;
            for (std::size_t i = 0; i < xi->data.size(); ++i) xi->grad[i] += g;
        }, oi);
    }
    return out;
}

Tensor Tensor::mean_sorted() const {
    if (numel() == 0) throw std::invalid_argument("mean of empty tensor");
    bool track = tracking(*this);
    std::vector<double> sorted = data();
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (double v : sorted) acc += v;
    double inv_n = 1.0 / static_cast<double>(numel());
    Tensor out = make_output({1}, 1, track);
    out.data()[0] = round_output(acc * inv_n);
    if (track) {
        auto xi = impl_, oi = out.impl();
        Tape::current()->record([xi, oi, inv_n]() {
            xi->ensure_grad();
            oi->ensure_grad();
            double g = oi->grad[0] * inv_n;
            for (std::size_t i = 0; i < xi->data.size(); ++i) xi->grad[i] += g;
        }, oi);
    }
    return out;
}

Tensor Tensor::take(const std::vector<std::int64_t>& indices) const {
    bool track = tracking(*this);
    const auto& xd = data();
    Tensor out = make_output({static_cast<int>(indices.size())}, indices.size(), track);
    auto& od = out.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto idx = indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= xd.size()) {
            throw std::out_of_range("take: index " + std::to_string(idx) + " out of " +
                                    std::to_string(xd.size()));
        }
        od[i] = xd[static_cast<std::size_t>(idx)];
    }
    if (track) {
        auto xi = impl_, oi = out.impl();
        auto idxs = indices;
        Tape::current()->record([xi, oi, idxs]() {
            xi->ensure_grad();
            oi->ensure_grad();
            for (std::size_t i = 0; i < idxs.size(); ++i) {
                xi->grad[static_cast<std::size_t>(idxs[i])] += oi->grad[i];
            }
        }, oi);
    }
    return out;
}

Tape::Tape() {
    prev_ = t_current_tape;
    t_current_tape = this;
}

Tape::~Tape() { t_current_tape = prev_; }

Tape* Tape::current() { return t_current_tape; }

void Tape::backward(const Tensor& root) {
    if (root.numel() != 1) throw std::invalid_argument("backward: root must be a scalar");
    for (auto& node : nodes_) {
        if (node.out) {
            node.out->ensure_grad();
            std::fill(node.out->grad.begin(), node.out->grad.end(), 0.0);
        }
    }
    root.impl()->ensure_grad();
    root.impl()->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->fn();
}

ActivationKind activation_from_string(const std::string& s) {
    if (s == "relu") return ActivationKind::Relu;
    if (s == "elu") return ActivationKind::Elu;
    if (s == "tanh") return ActivationKind::Tanh;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string activation_to_string(ActivationKind k) {
    switch (k) {
        case ActivationKind::Relu: return "relu";
        case ActivationKind::Elu: return "elu";
        case ActivationKind::Tanh: return "tanh";
    }
    throw std::invalid_argument("bad activation kind");
}

Tensor apply_activation(ActivationKind kind, const Tensor& x) {
    switch (kind) {
        case ActivationKind::Relu: return x.relu();
        case ActivationKind::Elu: return x.elu();
        case ActivationKind::Tanh: return x.tanh();
    }
    throw std::invalid_argument("bad activation kind");
}

Tensor conv2d_3x3(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation) {
    const Shape& is = input.shape();
    const Shape& ws = weight.shape();
    if (is.size() != 4) throw std::invalid_argument("conv2d_3x3: input must be NCHW, got " + shape_str(is));
    if (ws.size() != 4 || ws[2] != 3 || ws[3] != 3) {
        throw std::invalid_argument("conv2d_3x3: weight must be [Cout,Cin,3,3], got " + shape_str(ws));
    }
    if (ws[1] != is[1]) {
        throw std::invalid_argument("conv2d_3x3: Cin mismatch, input " + shape_str(is) +
                                    " weight " + shape_str(ws));
    }
    if (bias.shape() != Shape{ws[0]}) {
        throw std::invalid_argument("conv2d_3x3: bias must be [Cout], got " + shape_str(bias.shape()));
    }
    if (dilation < 1) throw std::invalid_argument("conv2d_3x3: dilation must be >= 1");

    const int N = is[0], Cin = is[1], H = is[2], W = is[3], Cout = ws[0];
    bool track = tracking(input) || tracking(weight) || tracking(bias);
    Tensor out = make_output({N, Cout, H, W}, static_cast<std::size_t>(N) * Cout * H * W, track);

    const double* in = input.data().data();
    const double* wt = weight.data().data();
    const double* bs = bias.data().data();
    double* od = out.data().data();
    const std::size_t in_plane = static_cast<std::size_t>(H) * W;
    const std::size_t in_img = static_cast<std::size_t>(Cin) * in_plane;
    const std::size_t out_img = static_cast<std::size_t>(Cout) * in_plane;

    // Padding equals the dilation, so every tap lands in-range iff the shifted
    // row/col is; valid x spans are hoisted out of the inner loop.
    for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Cout; ++co) {
            double* orow0 = od + n * out_img + co * in_plane;
            double b = bs[co];
            for (std::size_t i = 0; i < in_plane; ++i) orow0[i] = b;
            for (int ci = 0; ci < Cin; ++ci) {
                const double* irow0 = in + n * in_img + ci * in_plane;
                const double* w9 = wt + ((static_cast<std::size_t>(co) * Cin + ci) * 9);
                for (int ky = 0; ky < 3; ++ky) {
                    int dy = (ky - 1) * dilation;
                    for (int kx = 0; kx < 3; ++kx) {
                        int dx = (kx - 1) * dilation;
                        double w = w9[ky * 3 + kx];
                        if (w == 0.0) continue;
                        int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                        for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
                            double* orow = orow0 + static_cast<std::size_t>(y) * W;
                            const double* irow = irow0 + static_cast<std::size_t>(y + dy) * W + dx;
                            for (int x = x0; x < x1; ++x) orow[x] += w * irow[x];
                        }
                    }
                }
            }
            if (get_precision() == Precision::f32) {
                for (std::size_t i = 0; i < in_plane; ++i) {
                    orow0[i] = static_cast<double>(static_cast<float>(orow0[i]));
                }
            }
        }
    }

    if (track) {
        auto ii = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl();
        Tape::current()->record([ii, wi, bi, oi, N, Cin, Cout, H, W, dilation]() {
            oi->ensure_grad();
            const std::size_t in_plane = static_cast<std::size_t>(H) * W;
            const std::size_t in_img = static_cast<std::size_t>(Cin) * in_plane;
            const std::size_t out_img = static_cast<std::size_t>(Cout) * in_plane;
            const double* og = oi->grad.data();
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (int n = 0; n < N; ++n) {
                    for (int co = 0; co < Cout; ++co) {
                        const double* grow = og + n * out_img + co * in_plane;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < in_plane; ++i) acc += grow[i];
                        bi->grad[co] += acc;
                    }
                }
            }
            if (wi->requires_grad) {
                wi->ensure_grad();
                const double* in = ii->data.data();
                for (int n = 0; n < N; ++n) {
                    for (int co = 0; co < Cout; ++co) {
                        const double* grow0 = og + n * out_img + co * in_plane;
                        for (int ci = 0; ci < Cin; ++ci) {
                            const double* irow0 = in + n * in_img + ci * in_plane;
                            double* gw9 = wi->grad.data() + ((static_cast<std::size_t>(co) * Cin + ci) * 9);
                            for (int ky = 0; ky < 3; ++ky) {
                                int dy = (ky - 1) * dilation;
                                for (int kx = 0; kx < 3; ++kx) {
                                    int dx = (kx - 1) * dilation;
                                    double acc = 0.0;
                                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                                    for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
                                        const double* grow = grow0 + static_cast<std::size_t>(y) * W;
                                        const double* irow = irow0 + static_cast<std::size_t>(y + dy) * W + dx;
                                        for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                                    }
                                    gw9[ky * 3 + kx] += acc;
                                }
                            }
                        }
                    }
                }
            }
            if (ii->requires_grad) {
                ii->ensure_grad();
                const double* wt = wi->data.data();
                for (int n = 0; n < N; ++n) {
                    for (int co = 0; co < Cout; ++co) {
                        const double* grow0 = og + n * out_img + co * in_plane;
                        for (int ci = 0; ci < Cin; ++ci) {
                            double* igrow0 = ii->grad.data() + n * in_img + ci * in_plane;
                            const double* w9 = wt + ((static_cast<std::size_t>(co) * Cin + ci) * 9);
                            for (int ky = 0; ky < 3; ++ky) {
                                int dy = (ky - 1) * dilation;
                                for (int kx = 0; kx < 3; ++kx) {
                                    int dx = (kx - 1) * dilation;
                                    double w = w9[ky * 3 + kx];
                                    if (w == 0.0) continue;
                                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                                    for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
                                        const double* grow = grow0 + static_cast<std::size_t>(y) * W;
                                        double* igrow = igrow0 + static_cast<std::size_t>(y + dy) * W + dx;
                                        for (int x = x0; x < x1; ++x) igrow[x] += w * grow[x];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }, oi);
    }
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const Shape& s0 = parts[0].shape();
    if (s0.size() != 4) throw std::invalid_argument("concat_channels: inputs must be NCHW");
    int N = s0[0], H = s0[2], W = s0[3];
    int Ctot = 0;
    bool track = false;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != 4 || s[0] != N || s[2] != H || s[3] != W) {
            throw std::invalid_argument("concat_channels: incompatible shape " + shape_str(s) +
                                        " vs " + shape_str(s0));
        }
        Ctot += s[1];
        track = track || tracking(p);
    }
    Tensor out = make_output({N, Ctot, H, W}, static_cast<std::size_t>(N) * Ctot * H * W, track);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t out_img = static_cast<std::size_t>(Ctot) * plane;
    double* od = out.data().data();
    int c_off = 0;
    for (const auto& p : parts) {
        int C = p.shape()[1];
        const double* pd = p.data().data();
        for (int n = 0; n < N; ++n) {
            std::copy(pd + n * C * plane, pd + (n + 1) * C * plane,
                      od + n * out_img + c_off * plane);
        }
        c_off += C;
    }
    if (track) {
        auto oi = out.impl();
        std::vector<std::shared_ptr<TensorImpl>> impls;
        impls.reserve(parts.size());
        for (const auto& p : parts) impls.push_back(p.impl());
        Tape::current()->record([oi, impls, N, Ctot, plane, out_img]() {
            oi->ensure_grad();
            const double* og = oi->grad.data();
            std::size_t c_off = 0;
            for (const auto& pi : impls) {
                std::size_t C = static_cast<std::size_t>(pi->shape[1]);
                if (pi->requires_grad) {
                    pi->ensure_grad();
                    for (int n = 0; n < N; ++n) {
                        const double* src = og + n * out_img + c_off * plane;
                        double* dst = pi->grad.data() + n * C * plane;
                        for (std::size_t i = 0; i < C * plane; ++i) dst[i] += src[i];
                    }
                }
                c_off += C;
            }
            (void)Ctot;
        }, oi);
    }
    return out;
}

Tensor sum_sorted(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("sum_sorted: no inputs");
    const Shape& s0 = parts[0].shape();
    bool track = false;
    for (const auto& p : parts) {
        if (p.shape() != s0) {
            throw std::invalid_argument("sum_sorted: shape mismatch " + shape_str(p.shape()) +
                                        " vs " + shape_str(s0));
        }
        track = track || tracking(p);
    }
    std::size_t n = parts[0].numel();
    Tensor out = make_output(s0, n, track);
    auto& od = out.data();
    std::vector<double> vals(parts.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < parts.size(); ++k) vals[k] = parts[k].data()[i];
        std::sort(vals.begin(), vals.end());
        double acc = 0.0;
        for (double v : vals) acc += v;
        od[i] = round_output(acc);
    }
    if (track) {
        auto oi = out.impl();
        std::vector<std::shared_ptr<TensorImpl>> impls;
        impls.reserve(parts.size());
        for (const auto& p : parts) impls.push_back(p.impl());
        Tape::current()->record([oi, impls]() {
            oi->ensure_grad();
            for (const auto& pi : impls) {
                if (!pi->requires_grad) continue;
                pi->ensure_grad();
                for (std::size_t i = 0; i < pi->data.size(); ++i) pi->grad[i] += oi->grad[i];
            }
        }, oi);
    }
    return out;
}

GradCheckReport grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           const std::vector<Tensor>& points, double eps) {
    PrecisionGuard guard(Precision::f64);

    std::vector<Tensor> inputs;
    inputs.reserve(points.size());
    for (const auto& p : points) {
        Tensor t = p.clone();
        t.set_requires_grad(true);
        inputs.push_back(t);
    }

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor loss = f(inputs);
        if (loss.numel() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
        tape.backward(loss);
        for (auto& t : inputs) analytic.push_back(t.grad());
    }

    GradCheckReport rep;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& buf = inputs[k].data();
        for (std::size_t i = 0; i < buf.size(); ++i) {
            double saved = buf[i];
            buf[i] = saved + eps;
            double hi = f(inputs).item();
            buf[i] = saved - eps;
            double lo = f(inputs).item();
            buf[i] = saved;
            double num = (hi - lo) / (2.0 * eps);
            double ana = analytic[k][i];
            rep.linf_diff = std::max(rep.linf_diff, std::abs(ana - num));
            rep.linf_analytic = std::max(rep.linf_analytic, std::abs(ana));
            rep.linf_numeric = std::max(rep.linf_numeric, std::abs(num));
        }
    }
    rep.rel_error = rep.linf_diff / std::max({rep.linf_analytic, rep.linf_numeric, 1e-12});
    return rep;
}

}  // namespace tedk
