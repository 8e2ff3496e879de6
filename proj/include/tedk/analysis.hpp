#pragma once

#include <filesystem>
#include <string>

#include "tedk/tensor.hpp"

namespace tedk {

// First principal component of a [C,H,W] feature map, treating pixels as
// H*W observations of C variables (power iteration on the C x C covariance).
// Output is min-max normalized into [0,1]; the direction's sign makes the
// loading of the largest-variance channel non-negative. Constant features
// produce all zeros.
Tensor pca_principal_channel(const Tensor& features);

struct CameraIntrinsics {
    double fx = 32.0;
    double fy = 32.0;
    double cx = 15.5;
    double cy = 15.5;
};

// ASCII PLY with one vertex {x,y,z,red,green,blue} per valid pixel:
// X = (u-cx)*d/fx, Y = (v-cy)*d/fy, Z = d.
std::string pointcloud_ply(const Tensor& depth, const Tensor& rgb, const Tensor& mask,
                           const CameraIntrinsics& intr);
void write_pointcloud_ply(const std::filesystem::path& path, const Tensor& depth,
                          const Tensor& rgb, const Tensor& mask, const CameraIntrinsics& intr);

}  // namespace tedk
