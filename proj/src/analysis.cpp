#include "tedk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tedk/codec.hpp"
#include "tedk/util.hpp"

namespace tedk {

Tensor pca_principal_channel(const Tensor& features) {
    const Shape& s = features.shape();
    if (s.size() != 3 || s[0] < 1) {
        throw std::invalid_argument("pca expects [C,H,W], got " + shape_str(s));
    }
    const int C = s[0], H = s[1], W = s[2];
    const std::size_t n = static_cast<std::size_t>(H) * W;
    const double* f = features.data().data();

    std::vector<double> mean(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += f[c * n + i];
        mean[static_cast<std::size_t>(c)] = acc / static_cast<double>(n);
    }

    std::vector<double> cov(static_cast<std::size_t>(C) * C, 0.0);
    for (int a = 0; a < C; ++a) {
        for (int b = a; b < C; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += (f[a * n + i] - mean[static_cast<std::size_t>(a)]) *
                       (f[b * n + i] - mean[static_cast<std::size_t>(b)]);
            }
            acc /= static_cast<double>(n);
            cov[static_cast<std::size_t>(a) * C + b] = acc;
            cov[static_cast<std::size_t>(b) * C + a] = acc;
        }
    }

    int top_var = 0;
    for (int c = 1; c < C; ++c) {
        if (cov[static_cast<std::size_t>(c) * C + c] > cov[static_cast<std::size_t>(top_var) * C + top_var]) {
            top_var = c;
        }
    }
    if (cov[static_cast<std::size_t>(top_var) * C + top_var] <= 0.0) {
        return Tensor::zeros({1, H, W});  // constant features
    }

    // Power iteration, started from the covariance column of the strongest
    // channel so the start vector cannot be orthogonal to the top direction.
    std::vector<double> v(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) v[static_cast<std::size_t>(c)] = cov[static_cast<std::size_t>(c) * C + top_var];
    std::vector<double> next(static_cast<std::size_t>(C));
    for (int iter = 0; iter < 100; ++iter) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return Tensor::zeros({1, H, W});
        for (auto& x : v) x /= norm;
        for (int a = 0; a < C; ++a) {
            double acc = 0.0;
            for (int b = 0; b < C; ++b) acc += cov[static_cast<std::size_t>(a) * C + b] * v[static_cast<std::size_t>(b)];
            next[static_cast<std::size_t>(a)] = acc;
        }
        double delta = 0.0, nn = 0.0;
        for (int c = 0; c < C; ++c) nn += next[static_cast<std::size_t>(c)] * next[static_cast<std::size_t>(c)];
        nn = std::sqrt(nn);
        if (nn == 0.0) return Tensor::zeros({1, H, W});
        for (int c = 0; c < C; ++c) {
            delta = std::max(delta, std::abs(next[static_cast<std::size_t>(c)] / nn - v[static_cast<std::size_t>(c)]));
        }
        v.swap(next);
        if (delta < 1e-9) break;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    if (v[static_cast<std::size_t>(top_var)] < 0.0) {
        for (auto& x : v) x = -x;
    }

    std::vector<double> proj(n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int c = 0; c < C; ++c) {
            acc += v[static_cast<std::size_t>(c)] * (f[c * n + i] - mean[static_cast<std::size_t>(c)]);
        }
        proj[i] = acc;
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
    }
    if (hi - lo <= 0.0) return Tensor::zeros({1, H, W});
    for (auto& x : proj) x = (x - lo) / (hi - lo);
    return Tensor::from_data({1, H, W}, std::move(proj));
}

std::string pointcloud_ply(const Tensor& depth, const Tensor& rgb, const Tensor& mask,
                           const CameraIntrinsics& intr) {
    const Shape& ds = depth.shape();
    if (ds.size() != 3 || ds[0] != 1) throw std::invalid_argument("depth must be [1,H,W]");
    const int H = ds[1], W = ds[2];
    if (rgb.shape() != Shape{3, H, W} || mask.shape() != Shape{1, H, W}) {
        throw std::invalid_argument("rgb/mask shape mismatch with depth");
    }
    if (intr.fx <= 0.0 || intr.fy <= 0.0) throw std::invalid_argument("focal lengths must be positive");

    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::size_t count = 0;
    for (std::size_t i = 0; i < plane; ++i) count += mask.data()[i] != 0.0 ? 1 : 0;
    if (count == 0) throw std::invalid_argument("pointcloud needs a non-empty mask");

    std::string body;
    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            std::size_t i = static_cast<std::size_t>(v) * W + u;
            if (mask.data()[i] == 0.0) continue;
            double d = depth.data()[i];
            double X = (u - intr.cx) * d / intr.fx;
            double Y = (v - intr.cy) * d / intr.fy;
            body += format_float(X);
            body += ' ';
            body += format_float(Y);
            body += ' ';
            body += format_float(d);
            for (int c = 0; c < 3; ++c) {
                body += ' ';
                body += std::to_string(quantize_unit(std::clamp(rgb.data()[c * plane + i], 0.0, 1.0), 255));
            }
            body += '\n';
        }
    }

    std::string header = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(count) +
                         "\nproperty float x\nproperty float y\nproperty float z\n"
                         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                         "end_header\n";
    return header + body;
}

void write_pointcloud_ply(const std::filesystem::path& path, const Tensor& depth,
                          const Tensor& rgb, const Tensor& mask, const CameraIntrinsics& intr) {
    write_file_text(path, pointcloud_ply(depth, rgb, mask, intr));
}

}  // namespace tedk
