#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nsn::util {

// Raw little-endian float32 files. The host is assumed little-endian
// (checked at compile time in the implementation).
void write_f32(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& path);

// Atomic-ish write: writes to a temporary sibling and renames it.
void write_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::vector<std::byte> read_bytes(const std::filesystem::path& path);

}  // namespace nsn::util
