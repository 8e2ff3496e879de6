#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tedk/tensor.hpp"

namespace tedk {

struct DepthSample {
    Tensor rgb;    // [3,H,W] in [0,1]
    Tensor depth;  // [1,H,W] meters, 0 = invalid
    Tensor mask;   // [1,H,W] in {0,1}, true iff depth > 0
    std::string id;

    int height() const { return rgb.shape()[1]; }
    int width() const { return rgb.shape()[2]; }
};

void validate_sample(const DepthSample& s);

struct DatasetSplit {
    std::vector<std::string> train_base;
    std::vector<std::string> train_mixer;
    std::vector<std::string> test;
};

// Seeded shuffle, then floor(N/8) ids to train_mixer and the rest to
// train_base (the 7:1 rule). The test list is the caller's to fill.
DatasetSplit split_dataset(const std::vector<DepthSample>& samples, std::uint64_t seed);

// Directory layout: <root>/<id>.rgb.ppm, <root>/<id>.depth.pfm, and a
// manifest.txt with one id per line.
void save_dataset(const std::filesystem::path& root, const std::vector<DepthSample>& samples);
std::vector<DepthSample> load_dataset(const std::filesystem::path& root);

const DepthSample& sample_by_id(const std::vector<DepthSample>& samples, const std::string& id);

}  // namespace tedk
