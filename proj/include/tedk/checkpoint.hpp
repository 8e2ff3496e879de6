#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tedk/params.hpp"

namespace tedk {

inline constexpr char kCheckpointMagic[4] = {'T', 'E', 'D', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
    ParameterSet params;
    std::map<std::string, std::string> metadata;
};

// Layout, all integers little-endian u32:
//   "TEDK" | version | tensor count
//   per tensor: name length, name bytes, rank, dims, row-major f32 values
//   metadata count, then key/value string pairs in key order
// Values are stored as f32, so save -> load -> save is byte-identical.
std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params,
                                            const std::map<std::string, std::string>& metadata);
LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& metadata);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tedk
