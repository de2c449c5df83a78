#ifndef CHURNSTORE_HASH_HPP
#define CHURNSTORE_HASH_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace churnstore {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view text);
std::string to_hex(const Digest& digest);

}  // namespace churnstore

#endif  // CHURNSTORE_HASH_HPP
