#include "causeprobe/digest.hpp"

#include <openssl/evp.h>

#include "causeprobe/error.hpp"

namespace causeprobe {

std::array<std::uint8_t, 32> sha256(std::string_view data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error("internal", "SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(const std::uint8_t* bytes, std::size_t size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t k = 0; k < size; ++k) {
    out += kDigits[bytes[k] >> 4];
    out += kDigits[bytes[k] & 0xf];
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  const auto d = sha256(data);
  return to_hex(d.data(), d.size());
}

}  // namespace causeprobe
