#include "tedk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tedk/rng.hpp"

namespace tedk {

namespace {

struct Albedo {
    double r, g, b;
};

// Random per-primitive reflectance. The band is wide on purpose: shading
// alone pins depth only coarsely, so apparent object size carries real signal.
Albedo draw_albedo(Rng& rng) {
    return {rng.uniform(0.35, 0.95), rng.uniform(0.35, 0.95), rng.uniform(0.35, 0.95)};
}

struct Rect {
    int x0, y0, w, h;
};

Rect draw_rect(Rng& rng, int H, int W) {
    int w = std::max(2, static_cast<int>(rng.uniform(0.25, 0.6) * W));
    int h = std::max(2, static_cast<int>(rng.uniform(0.25, 0.6) * H));
    w = std::min(w, W);
    h = std::min(h, H);
    return {rng.uniform_int(0, W - w), rng.uniform_int(0, H - h), w, h};
}

}  // namespace

std::vector<DepthSample> generate_synthetic_dataset(const SceneConfig& cfg) {
    if (cfg.count < 1 || cfg.height < 2 || cfg.width < 2) {
        throw std::invalid_argument("scene config needs count >= 1 and at least 2x2 images");
    }
    if (cfg.max_depth <= 0.0) throw std::invalid_argument("max_depth must be positive");
    if (cfg.planes < 0 || cfg.boxes < 0 || cfg.spheres < 0) {
        throw std::invalid_argument("primitive counts must be non-negative");
    }

    const int H = cfg.height, W = cfg.width;
    const double kappa = cfg.max_depth;
    const std::size_t plane_sz = static_cast<std::size_t>(H) * W;

    std::vector<DepthSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.count));
    for (int n = 0; n < cfg.count; ++n) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(n)));

        std::vector<double> z(plane_sz);
        std::vector<int> prim(plane_sz, 0);
        std::vector<Albedo> albedos;

        double z_bg = rng.uniform(0.6, 0.9) * kappa;
        std::fill(z.begin(), z.end(), z_bg);
        albedos.push_back(draw_albedo(rng));

        auto occlude = [&](int x, int y, double depth, int id) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            if (depth < z[i]) {
                z[i] = depth;
                prim[i] = id;
            }
        };

        for (int p = 0; p < cfg.planes; ++p) {
            Rect r = draw_rect(rng, H, W);
            double z0 = rng.uniform(0.15, 0.8) * kappa;
            double gx = rng.uniform(-0.2, 0.2) * kappa;
            double gy = rng.uniform(-0.2, 0.2) * kappa;
            albedos.push_back(draw_albedo(rng));
            int id = static_cast<int>(albedos.size()) - 1;
            for (int y = r.y0; y < r.y0 + r.h; ++y) {
                for (int x = r.x0; x < r.x0 + r.w; ++x) {
                    double d = z0 + gx * (x - r.x0) / r.w + gy * (y - r.y0) / r.h;
                    occlude(x, y, std::clamp(d, 0.12 * kappa, 0.95 * kappa), id);
                }
            }
        }

        // Boxes and spheres have a fixed physical size, so their apparent
        // extent falls off as 1/z; depth is readable from how big they look.
        const double min_side = static_cast<double>(std::min(H, W));
        for (int b = 0; b < cfg.boxes; ++b) {
            double zq = rng.uniform(0.18, 0.85) * kappa;
            double side = 0.11 * min_side * kappa / zq;
            int w = std::clamp(static_cast<int>(side * rng.uniform(0.75, 1.35)), 2,
                               static_cast<int>(0.6 * W));
            int h = std::clamp(static_cast<int>(side * rng.uniform(0.75, 1.35)), 2,
                               static_cast<int>(0.6 * H));
            int x0 = rng.uniform_int(0, W - w);
            int y0 = rng.uniform_int(0, H - h);
            albedos.push_back(draw_albedo(rng));
            int id = static_cast<int>(albedos.size()) - 1;
            for (int y = y0; y < y0 + h; ++y) {
                for (int x = x0; x < x0 + w; ++x) occlude(x, y, zq, id);
            }
        }

        for (int s = 0; s < cfg.spheres; ++s) {
            double cx = rng.uniform(0.0, W - 1.0);
            double cy = rng.uniform(0.0, H - 1.0);
            double zc = rng.uniform(0.18, 0.85) * kappa;
            double radius = std::clamp(0.075 * min_side * kappa / zc, 1.8, 0.45 * min_side);
            double bump = 0.04 * kappa;
            albedos.push_back(draw_albedo(rng));
            int id = static_cast<int>(albedos.size()) - 1;
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    double du = (x - cx) / radius, dv = (y - cy) / radius;
                    double q = 1.0 - du * du - dv * dv;
                    if (q <= 0.0) continue;
                    occlude(x, y, zc - bump * std::sqrt(q), id);
                }
            }
        }

        std::vector<double> rgb(3 * plane_sz);
        std::vector<double> mask(plane_sz, 1.0);
        for (std::size_t i = 0; i < plane_sz; ++i) {
            z[i] = std::clamp(z[i], 0.101 * kappa, 0.995 * kappa);
            double shade = 1.0 - 0.85 * (z[i] / kappa);
            const Albedo& a = albedos[static_cast<std::size_t>(prim[i])];
            rgb[i] = a.r * shade;
            rgb[plane_sz + i] = a.g * shade;
            rgb[2 * plane_sz + i] = a.b * shade;
        }

        DepthSample sample;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "scene-%05d", n);
        sample.id = idbuf;
        sample.rgb = Tensor::from_data({3, H, W}, std::move(rgb));
        sample.depth = Tensor::from_data({1, H, W}, std::move(z));
        sample.mask = Tensor::from_data({1, H, W}, std::move(mask));
        samples.push_back(std::move(sample));
    }
    return samples;
}

}  // namespace tedk
