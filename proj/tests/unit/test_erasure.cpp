#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <churnstore/erasure.hpp>
#include <churnstore/random.hpp>

#include <algorithm>
#include <numeric>

using namespace churnstore;

namespace {

std::uint8_t slow_mul(std::uint8_t a, std::uint8_t b) {
  std::uint16_t acc = 0;
  for (int i = 0; i < 8; ++i) {
    if (b & (1 << i)) acc ^= static_cast<std::uint16_t>(a) << i;
  }
  for (int bit = 15; bit >= 8; --bit) {
    if (acc & (1 << bit)) acc ^= 0x11D << (bit - 8);
  }
  return static_cast<std::uint8_t>(acc);
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

std::vector<Piece> pick(const std::vector<Piece>& all, const std::vector<int>& idx) {
  std::vector<Piece> out;
  for (int i : idx) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TEST_CASE("field arithmetic against shift-and-add multiplication") {
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      REQUIRE(gf256::mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) ==
              slow_mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)));
    }
    if (a) CHECK(slow_mul(static_cast<std::uint8_t>(a), gf256::inv(static_cast<std::uint8_t>(a))) == 1);
  }
}

TEST_CASE("committee code parameters") {
  const auto p = CodeParams::for_committee(1024, 4);
  CHECK(p.L == 28);
  CHECK(p.K == 14);
  CHECK_THROWS_AS(CodeParams::for_committee(1024, 2), Error);
  CHECK_THROWS_AS((CodeParams{10, 0}.validate()), Error);
  CHECK_THROWS_AS((CodeParams{10, 11}.validate()), Error);
  CHECK_THROWS_AS((CodeParams{256, 10}.validate()), Error);
}

TEST_CASE("K = 1: every piece is the payload") {
  const auto payload = random_bytes(37, 1);
  const auto pieces = disperse(payload, CodeParams{6, 1});
  for (const auto& p : pieces) {
    CHECK(p.data == payload);
    CHECK(reconstruct(std::vector<Piece>{p}) == payload);
  }
}

TEST_CASE("K = L: no redundancy, all pieces needed") {
  const auto payload = random_bytes(100, 2);
  const CodeParams params{5, 5};
  const auto pieces = disperse(payload, params);
  std::size_t total = 0;
  for (const auto& p : pieces) total += p.data.size();
  CHECK(total == params.K * params.piece_size(payload.size()));
  CHECK(reconstruct(pieces) == payload);
  CHECK_THROWS_AS(reconstruct(pick(pieces, {0, 1, 2, 3})), Error);
}

TEST_CASE("every 10-subset of 14 pieces reconstructs a 10 KiB payload") {
  const auto payload = random_bytes(10240, 3);
  const auto pieces = disperse(payload, CodeParams{14, 10});
  std::vector<bool> mask(14, false);
  std::fill(mask.begin(), mask.begin() + 10, true);
  int subsets = 0;
  do {
    std::vector<Piece> chosen;
    for (int i = 0; i < 14; ++i) {
      if (mask[static_cast<std::size_t>(i)]) chosen.push_back(pieces[static_cast<std::size_t>(i)]);
    }
    REQUIRE(reconstruct(chosen) == payload);
    ++subsets;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  CHECK(subsets == 1001);
}

TEST_CASE("reconstruction errors") {
  const auto payload = random_bytes(333, 4);
  const auto pieces = disperse(payload, CodeParams{8, 4});
  try {
    reconstruct(pick(pieces, {0, 1, 2}));
    FAIL("expected NotEnoughPieces");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotEnoughPieces);
  }
  try {
    reconstruct(pick(pieces, {0, 1, 1, 1, 2}));  // duplicates do not count
    FAIL("expected NotEnoughPieces");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotEnoughPieces);
  }
  auto bad = pick(pieces, {2, 4, 5, 7});
  bad[1].data[10] ^= 0x40;
  try {
    reconstruct(bad);
    FAIL("expected HashMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HashMismatch);
  }
  CHECK_THROWS_AS(disperse(std::vector<std::uint8_t>{}, CodeParams{8, 4}), Error);
}

TEST_CASE("round trip for awkward sizes") {
  for (std::size_t size : {1u, 2u, 13u, 14u, 15u, 1000u, 4097u}) {
    const auto payload = random_bytes(size, size);
    const CodeParams params{28, 14};
    const auto pieces = disperse(payload, params);
    for (const auto& p : pieces) CHECK(p.data.size() == (size + 13) / 14);
    CHECK(reconstruct(pick(pieces, {27, 3, 9, 14, 0, 1, 20, 21, 22, 5, 6, 7, 8, 11})) == payload);
    // Storage overhead: L/K times the payload plus padding and headers.
    std::size_t stored = 0;
    for (const auto& p : pieces) stored += p.wire_size();
    CHECK(static_cast<double>(stored) <= 2.0 * static_cast<double>(size) + 28.0 * (kPieceHeaderBytes + 1));
  }
}

TEST_CASE("sampled 14-subsets of 28 pieces") {
  const auto payload = random_bytes(4096, 5);
  const auto pieces = disperse(payload, CodeParams{28, 14});
  Rng rng(17);
  std::vector<int> idx(28);
  std::iota(idx.begin(), idx.end(), 0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    REQUIRE(reconstruct(pick(pieces, std::vector<int>(idx.begin(), idx.begin() + 14))) == payload);
  }
}

TEST_CASE("wire format") {
  const auto payload = random_bytes(77, 6);
  const auto pieces = disperse(payload, CodeParams{9, 3});
  const auto wire = serialize(pieces[4]);
  CHECK(wire.size() == kPieceHeaderBytes + pieces[4].data.size());
  CHECK(std::equal(pieces[4].item_id.begin(), pieces[4].item_id.end(), wire.begin()));
  CHECK(wire[32] == 4);
  CHECK(wire[33] == 0);
  CHECK(wire[34] == 9);
  CHECK(wire[36] == 3);
  CHECK(wire[38] == 77);
  const auto back = deserialize(wire);
  CHECK(back.index == 4);
  CHECK(back.params == pieces[4].params);
  CHECK(back.payload_len == 77);
  CHECK(back.data == pieces[4].data);
  CHECK_THROWS_AS(deserialize(std::vector<std::uint8_t>(10)), Error);
}
