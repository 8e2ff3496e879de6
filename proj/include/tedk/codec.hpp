#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tedk/tensor.hpp"

namespace tedk {

// PFM float maps, [1|3,H,W]. Written little-endian (scale line "-1.0"), rows
// bottom-first per the format. Roundtrip is bit-exact.
void write_pfm(const std::filesystem::path& path, const Tensor& image);
Tensor read_pfm(const std::filesystem::path& path);

// Binary PPM (P6, [3,H,W]) and PGM (P5, [1,H,W]) with maxval 255 or 65535.
// Values are in [0,1]; quantization is round-half-up; 16-bit is big-endian.
void write_ppm(const std::filesystem::path& path, const Tensor& rgb, int maxval = 255);
Tensor read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Tensor& gray, int maxval = 255);
Tensor read_pgm(const std::filesystem::path& path);

// Depth stored as 16-bit PGM at a fixed scale (default mm), with the scale
// recorded in a header comment so readers can undo it.
void write_depth_pgm16(const std::filesystem::path& path, const Tensor& depth, double scale = 1000.0);
std::pair<Tensor, double> read_depth_pgm16(const std::filesystem::path& path);

inline std::uint16_t quantize_unit(double v, int maxval) {
    return static_cast<std::uint16_t>(v * maxval + 0.5);
}

}  // namespace tedk
