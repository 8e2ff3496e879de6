#include "tedk/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tedk {

namespace {

double bilinear(const double* plane, int H, int W, double sy, double sx) {
    int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
    double fx = sx - x0, fy = sy - y0;
    auto at = [&](int y, int x) {
        y = std::clamp(y, 0, H - 1);
        x = std::clamp(x, 0, W - 1);
        return plane[static_cast<std::size_t>(y) * W + x];
    };
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
}

}  // namespace

DepthSample hflip_sample(const DepthSample& s) {
    const int H = s.height(), W = s.width();
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    DepthSample out;
    out.id = s.id;
    std::vector<double> rgb(3 * plane), depth(plane), mask(plane);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            std::size_t dst = static_cast<std::size_t>(y) * W + x;
            std::size_t src = static_cast<std::size_t>(y) * W + (W - 1 - x);
            for (int c = 0; c < 3; ++c) rgb[c * plane + dst] = s.rgb.data()[c * plane + src];
            depth[dst] = s.depth.data()[src];
            mask[dst] = s.mask.data()[src];
        }
    }
    out.rgb = Tensor::from_data({3, H, W}, std::move(rgb));
    out.depth = Tensor::from_data({1, H, W}, std::move(depth));
    out.mask = Tensor::from_data({1, H, W}, std::move(mask));
    return out;
}

DepthSample rotate_sample(const DepthSample& s, double degrees) {
    if (degrees == 0.0) return s;
    const int H = s.height(), W = s.width();
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const double theta = degrees * std::numbers::pi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;

    DepthSample out;
    out.id = s.id;
    std::vector<double> rgb(3 * plane, 0.0), depth(plane, 0.0), mask(plane, 0.0);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double dx = x - cx, dy = y - cy;
            double sx = cx + dx * ct + dy * st;
            double sy = cy - dx * st + dy * ct;
            std::size_t dst = static_cast<std::size_t>(y) * W + x;
            if (sx < 0.0 || sx > W - 1.0 || sy < 0.0 || sy > H - 1.0) continue;
            int nx = static_cast<int>(std::lround(sx)), ny = static_cast<int>(std::lround(sy));
            std::size_t nsrc = static_cast<std::size_t>(ny) * W + nx;
            if (s.mask.data()[nsrc] == 0.0) continue;  // depth and validity travel together
            depth[dst] = s.depth.data()[nsrc];
            mask[dst] = 1.0;
            for (int c = 0; c < 3; ++c) {
                rgb[c * plane + dst] = bilinear(s.rgb.data().data() + c * plane, H, W, sy, sx);
            }
        }
    }
    out.rgb = Tensor::from_data({3, H, W}, std::move(rgb));
    out.depth = Tensor::from_data({1, H, W}, std::move(depth));
    out.mask = Tensor::from_data({1, H, W}, std::move(mask));
    return out;
}

DepthSample crop_sample(const DepthSample& s, int y0, int x0, int h, int w) {
    const int H = s.height(), W = s.width();
    if (h < 1 || w < 1 || h > H || w > W) {
        throw std::invalid_argument("crop " + std::to_string(w) + "x" + std::to_string(h) +
                                    " does not fit in " + std::to_string(W) + "x" + std::to_string(H));
    }
    if (y0 < 0 || x0 < 0 || y0 + h > H || x0 + w > W) {
        throw std::invalid_argument("crop origin out of range");
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t out_plane = static_cast<std::size_t>(h) * w;
    DepthSample out;
    out.id = s.id;
    std::vector<double> rgb(3 * out_plane), depth(out_plane), mask(out_plane);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t dst = static_cast<std::size_t>(y) * w + x;
            std::size_t src = static_cast<std::size_t>(y0 + y) * W + (x0 + x);
            for (int c = 0; c < 3; ++c) rgb[c * out_plane + dst] = s.rgb.data()[c * plane + src];
            depth[dst] = s.depth.data()[src];
            mask[dst] = s.mask.data()[src];
        }
    }
    out.rgb = Tensor::from_data({3, h, w}, std::move(rgb));
    out.depth = Tensor::from_data({1, h, w}, std::move(depth));
    out.mask = Tensor::from_data({1, h, w}, std::move(mask));
    return out;
}

DepthSample augment_sample(const DepthSample& s, const AugmentPolicy& policy, Rng& rng) {
    DepthSample out = s;
    if (policy.hflip && rng.bernoulli(0.5)) out = hflip_sample(out);
    if (policy.rotation_deg > 0.0) {
        out = rotate_sample(out, rng.uniform(-policy.rotation_deg, policy.rotation_deg));
    }
    if (policy.crop_height > 0 || policy.crop_width > 0) {
        int ch = policy.crop_height > 0 ? policy.crop_height : out.height();
        int cw = policy.crop_width > 0 ? policy.crop_width : out.width();
        if (ch > out.height() || cw > out.width()) {
            throw std::invalid_argument("augment crop larger than image");
        }
        int y0 = rng.uniform_int(0, out.height() - ch);
        int x0 = rng.uniform_int(0, out.width() - cw);
        out = crop_sample(out, y0, x0, ch, cw);
    }
    if (policy.photometric) {
        out.rgb = out.rgb.clone();  // tensors share buffers; never jitter the caller's copy
        auto& rgb = out.rgb.data();
        const std::size_t plane = static_cast<std::size_t>(out.height()) * out.width();
        if (rng.bernoulli(0.5)) {
            double f = rng.uniform(0.9, 1.1);
            for (auto& v : rgb) v = (v - 0.5) * f + 0.5;
        }
        if (rng.bernoulli(0.5)) {
            double f = rng.uniform(0.9, 1.1);
            for (auto& v : rgb) v *= f;
        }
        if (rng.bernoulli(0.5)) {
            for (int c = 0; c < 3; ++c) {
                double f = rng.uniform(0.9, 1.1);
                for (std::size_t i = 0; i < plane; ++i) rgb[c * plane + i] *= f;
            }
        }
        for (auto& v : rgb) v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

}  // namespace tedk
