#pragma once

#include <cstdint>
#include <vector>

#include "tedk/dataset.hpp"

namespace tedk {

struct SceneConfig {
    int count = 1;
    int height = 32;
    int width = 32;
    double max_depth = 10.0;
    int planes = 2;
    int boxes = 2;
    int spheres = 1;
    std::uint64_t seed = 0;
};

// Layered random primitives over a slanted background plane. Depth lands in
// (0.1 * max_depth, max_depth); rgb is per-primitive albedo times a shading
// term that falls off with depth, so depth is recoverable from appearance.
// Deterministic in cfg.seed; masks are all valid.
std::vector<DepthSample> generate_synthetic_dataset(const SceneConfig& cfg);

}  // namespace tedk
