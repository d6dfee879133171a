#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace skeltop::detail {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Little-endian float32 payload <-> values.
std::vector<float> decode_f32_le(std::string_view bytes);
std::string encode_f32_le(std::span<const float> values);

}  // namespace skeltop::detail
