#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace nsn::util {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

template <typename T>
std::string sha256_hex_of(std::span<const T> values) {
  return sha256_hex(std::as_bytes(values));
}

}  // namespace nsn::util
