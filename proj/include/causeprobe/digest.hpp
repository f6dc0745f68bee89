#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace causeprobe {

std::array<std::uint8_t, 32> sha256(std::string_view data);
// Lowercase hex.
std::string sha256_hex(std::string_view data);
std::string to_hex(const std::uint8_t* bytes, std::size_t size);

}  // namespace causeprobe
