#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tedk {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& s);

// Shortest decimal form that keeps ~9 significant digits; used everywhere a
// float goes into a CSV or config echo so reruns compare byte-identical.
std::string format_float(double v);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t size);
void write_file_text(const std::filesystem::path& path, const std::string& text);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace tedk
