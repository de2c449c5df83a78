#ifndef CHURNSTORE_ERASURE_HPP
#define CHURNSTORE_ERASURE_HPP

#include <churnstore/common.hpp>
#include <churnstore/hash.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace churnstore {

/// Any K of the L pieces reconstruct the payload.
struct CodeParams {
  std::uint16_t L = 0;
  std::uint16_t K = 0;

  /// L = h⌈ln n⌉, K = (h-2)⌈ln n⌉.
  static CodeParams for_committee(std::uint32_t n, std::uint32_t h);
  void validate() const;
  std::size_t piece_size(std::size_t payload_len) const { return (payload_len + K - 1) / K; }

  bool operator==(const CodeParams&) const = default;
};

inline constexpr std::size_t kPieceHeaderBytes = 32 + 2 + 2 + 2 + 8;

struct Piece {
  Digest item_id{};
  std::uint16_t index = 0;
  CodeParams params;
  std::uint64_t payload_len = 0;
  std::vector<std::uint8_t> data;

  std::size_t wire_size() const { return kPieceHeaderBytes + data.size(); }
};

/// Per chunk of K bytes, evaluates the polynomial with those coefficients
/// over GF(2^8) at L distinct points. The tail chunk is zero-padded.
std::vector<Piece> disperse(std::span<const std::uint8_t> payload, const CodeParams& params);
std::vector<Piece> disperse(std::span<const std::uint8_t> payload, const CodeParams& params, const Digest& item_id);

/// Interpolates from the first K distinct indices and checks the result
/// against the item id.
std::vector<std::uint8_t> reconstruct(std::span<const Piece> pieces);

std::vector<std::uint8_t> serialize(const Piece& piece);
Piece deserialize(std::span<const std::uint8_t> wire);

namespace gf256 {
std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);
}  // namespace gf256

}  // namespace churnstore

#endif  // CHURNSTORE_ERASURE_HPP
