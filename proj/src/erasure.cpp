#include <churnstore/erasure.hpp>

#include <algorithm>
#include <array>
#include <cstring>

namespace churnstore {

namespace {

// GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
  std::array<std::array<std::uint8_t, 256>, 256> mul{};

  Tables() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = static_cast<std::uint8_t>(i);
      x <<= 1;
      if (x & 0x100u) x ^= 0x11Du;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    for (int a = 1; a < 256; ++a) {
      for (int b = 1; b < 256; ++b) mul[a][b] = exp[log[a] + log[b]];
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

std::uint8_t point(std::uint16_t index) { return static_cast<std::uint8_t>(index + 1); }

// Inverse of the K x K Vandermonde matrix V[i][j] = x_i^j (Gauss-Jordan).
std::vector<std::uint8_t> invert_vandermonde(const std::vector<std::uint8_t>& xs) {
  const std::size_t k = xs.size();
  std::vector<std::uint8_t> a(k * k), inv(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uint8_t p = 1;
    for (std::size_t j = 0; j < k; ++j) {
      a[i * k + j] = p;
      p = gf256::mul(p, xs[i]);
    }
    inv[i * k + i] = 1;
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    while (pivot < k && a[pivot * k + col] == 0) ++pivot;
    if (pivot == k) throw Error(ErrorCode::InvalidParams, "singular evaluation points");
    if (pivot != col) {
      for (std::size_t j = 0; j < k; ++j) {
        std::swap(a[pivot * k + j], a[col * k + j]);
        std::swap(inv[pivot * k + j], inv[col * k + j]);
      }
    }
    const std::uint8_t scale = gf256::inv(a[col * k + col]);
    for (std::size_t j = 0; j < k; ++j) {
      a[col * k + j] = gf256::mul(a[col * k + j], scale);
      inv[col * k + j] = gf256::mul(inv[col * k + j], scale);
    }
    for (std::size_t row = 0; row < k; ++row) {
      const std::uint8_t f = a[row * k + col];
      if (row == col || f == 0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        a[row * k + j] ^= gf256::mul(f, a[col * k + j]);
        inv[row * k + j] ^= gf256::mul(f, inv[col * k + j]);
      }
    }
  }
  return inv;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

namespace gf256 {
std::uint8_t mul(std::uint8_t a, std::uint8_t b) { return tables().mul[a][b]; }
std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw Error(ErrorCode::DomainError, "zero has no inverse");
  return tables().exp[255 - tables().log[a]];
}
}  // namespace gf256

CodeParams CodeParams::for_committee(std::uint32_t n, std::uint32_t h) {
  if (h < 3) throw Error(ErrorCode::InvalidParams, "erasure mode needs h >= 3");
  const std::uint32_t l = ceil_ln(n);
  return CodeParams{static_cast<std::uint16_t>(h * l), static_cast<std::uint16_t>((h - 2) * l)};
}

void CodeParams::validate() const {
  if (K < 1 || K > L) throw Error(ErrorCode::InvalidParams, "need 1 <= K <= L");
  if (L > 255) throw Error(ErrorCode::InvalidParams, "at most 255 pieces over GF(256)");
}

std::vector<Piece> disperse(std::span<const std::uint8_t> payload, const CodeParams& params) {
  return disperse(payload, params, sha256(payload));
}

std::vector<Piece> disperse(std::span<const std::uint8_t> payload, const CodeParams& params, const Digest& item_id) {
  params.validate();
  if (payload.empty()) throw Error(ErrorCode::InvalidParams, "empty payload");
  const auto& t = tables();
  const std::size_t chunks = params.piece_size(payload.size());
  std::vector<Piece> pieces(params.L);
  for (std::uint16_t i = 0; i < params.L; ++i) {
    Piece& p = pieces[i];
    p.item_id = item_id;
    p.index = i;
    p.params = params;
    p.payload_len = payload.size();
    p.data.resize(chunks);
    const auto& mx = t.mul[point(i)];
    for (std::size_t c = 0; c < chunks; ++c) {
      // Horner from the highest coefficient.
      std::uint8_t acc = 0;
      for (std::size_t j = params.K; j-- > 0;) {
        const std::size_t at = c * params.K + j;
        acc = mx[acc] ^ (at < payload.size() ? payload[at] : 0);
      }
      p.data[c] = acc;
    }
  }
  return pieces;
}

std::vector<std::uint8_t> reconstruct(std::span<const Piece> pieces) {
  if (pieces.empty()) throw Error(ErrorCode::NotEnoughPieces, "no pieces");
  const Piece& ref = pieces.front();
  ref.params.validate();
  const std::size_t k = ref.params.K;
  const std::size_t chunks = ref.params.piece_size(ref.payload_len);

  std::vector<const Piece*> chosen;
  std::vector<bool> seen(ref.params.L, false);
  for (const Piece& p : pieces) {
    if (p.item_id != ref.item_id || !(p.params == ref.params) || p.payload_len != ref.payload_len) {
      throw Error(ErrorCode::InvalidParams, "pieces from different items");
    }
    if (p.index >= ref.params.L || p.data.size() != chunks) throw Error(ErrorCode::InvalidParams, "malformed piece");
    if (seen[p.index]) continue;
    seen[p.index] = true;
    chosen.push_back(&p);
    if (chosen.size() == k) break;
  }
  if (chosen.size() < k) {
    throw Error(ErrorCode::NotEnoughPieces,
                "have " + std::to_string(chosen.size()) + " distinct pieces, need " + std::to_string(k));
  }

  std::vector<std::uint8_t> xs(k);
  for (std::size_t i = 0; i < k; ++i) xs[i] = point(chosen[i]->index);
  const auto inv = invert_vandermonde(xs);
  const auto& t = tables();

  std::vector<std::uint8_t> out(chunks * k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto& row = t.mul[inv[j * k + i]];
      const std::uint8_t* y = chosen[i]->data.data();
      for (std::size_t c = 0; c < chunks; ++c) out[c * k + j] ^= row[y[c]];
    }
  }
  out.resize(ref.payload_len);
  if (sha256(out) != ref.item_id) throw Error(ErrorCode::HashMismatch, "reconstructed payload does not match item id");
  return out;
}

std::vector<std::uint8_t> serialize(const Piece& piece) {
  std::vector<std::uint8_t> out(piece.item_id.begin(), piece.item_id.end());
  out.reserve(piece.wire_size());
  put_le(out, piece.index, 2);
  put_le(out, piece.params.L, 2);
  put_le(out, piece.params.K, 2);
  put_le(out, piece.payload_len, 8);
  out.insert(out.end(), piece.data.begin(), piece.data.end());
  return out;
}

Piece deserialize(std::span<const std::uint8_t> wire) {
  if (wire.size() < kPieceHeaderBytes) throw Error(ErrorCode::InvalidParams, "truncated piece header");
  Piece p;
  std::copy_n(wire.begin(), 32, p.item_id.begin());
  p.index = static_cast<std::uint16_t>(get_le(wire, 32, 2));
  p.params.L = static_cast<std::uint16_t>(get_le(wire, 34, 2));
  p.params.K = static_cast<std::uint16_t>(get_le(wire, 36, 2));
  p.payload_len = get_le(wire, 38, 8);
  p.data.assign(wire.begin() + kPieceHeaderBytes, wire.end());
  return p;
}

}  // namespace churnstore
