#pragma once

#include "tedk/dataset.hpp"
#include "tedk/rng.hpp"

namespace tedk {

struct AugmentPolicy {
    bool hflip = true;
    double rotation_deg = 2.5;  // angle drawn uniformly in +-rotation_deg; 0 disables
    int crop_height = 0;        // 0 keeps the full image
    int crop_width = 0;
    bool photometric = true;
};

// Geometric transforms move rgb, depth, and mask jointly; photometric jitter
// touches rgb only. Rotation resamples rgb bilinearly but depth and mask by
// nearest neighbor, and pixels mapped from outside become invalid.
DepthSample augment_sample(const DepthSample& s, const AugmentPolicy& policy, Rng& rng);

DepthSample hflip_sample(const DepthSample& s);
DepthSample rotate_sample(const DepthSample& s, double degrees);
DepthSample crop_sample(const DepthSample& s, int y0, int x0, int h, int w);

}  // namespace tedk
