#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <churnstore/landmarks.hpp>
#include <churnstore/random.hpp>

#include <cmath>
#include <set>

using namespace churnstore;

namespace {

// Independent evaluation in long double with the logarithms rewritten.
int depth_reference(long double n, long double k) {
  const long double ln_n = std::log(n);
  const long double num = std::log(n) / std::log(2.0L) - 2.0L * (std::log(ln_n) / std::log(2.0L) + std::log(2.0L));
  const long double inner = 2.0L * (1.0L - std::pow(ln_n, -(k - 1.0L) / 2.0L)) * (1.0L - std::pow(ln_n, 1.0L - k)) *
                            (1.0L - std::pow(n, -3.0L));
  const long double den = 2.0L * std::log(inner) / std::log(2.0L);
  return std::max(0, static_cast<int>(std::ceil(num / den)));
}

}  // namespace

TEST_CASE("tree depth") {
  for (double n : {1024.0, 4096.0, 65536.0, 1048576.0, 1073741824.0}) {
    for (double k : {2.0, 2.5, 3.0}) {
      CAPTURE(n);
      CAPTURE(k);
      CHECK(tree_depth(n, k) == depth_reference(n, k));
    }
  }
  CHECK(tree_depth(1048576.0, 2.0) == 13);
  CHECK(tree_depth(1024.0, 2.0) == 18);
  CHECK_THROWS_AS(tree_depth(256.0, 2.0), Error);  // denominator not positive
  CHECK_THROWS_AS(tree_depth(8.0, 2.0), Error);
  CHECK_THROWS_AS(tree_depth(1024.0, 1.0), Error);
}

TEST_CASE("landmark cap") {
  CHECK(landmark_cap(1024, 2, 0) == 14);
  CHECK(landmark_cap(1024, 2, 3) == 14 * 15);
  CHECK(landmark_cap(1024, 2, 18) == 14ull * ((1ull << 19) - 1));
}

TEST_CASE("choose_children") {
  const std::vector<NodeId> origins{3, 3, 8, 1, 9};
  CHECK(choose_children(origins, 3, 8) == std::vector<NodeId>{1, 9});
  CHECK(choose_children(origins, 0, 0) == std::vector<NodeId>{3, 8});
  CHECK(choose_children(std::vector<NodeId>{5}, 5, 0).empty());
}

TEST_CASE("records expire after their lifetime") {
  LandmarkStore store;
  store.reserve(16);
  LandmarkRecord rec;
  rec.task = 4;
  rec.build = 1;
  rec.created_round = 10;
  rec.expires_round = 52;
  store.add(3, rec);
  CHECK(store.find(3, 4, 10) != nullptr);
  CHECK(store.find(3, 4, 51) != nullptr);
  CHECK(store.find(3, 4, 52) == nullptr);
  CHECK(store.find(3, 4, 9) == nullptr);
  CHECK(store.holds_build(3, 1));
  CHECK(store.holders(4, 20) == std::vector<NodeId>{3});
  store.expire(52);
  CHECK(store.size() == 0);
}

TEST_CASE("a build grows level by level within the cap") {
  const auto s = test::static_schedule(256, 8, 120, 5);
  const auto cfg = WalkConfig::make(256, 72, 2, 3.0);
  test::ManualContext ctx(s, cfg);
  Rng rng = make_rng(3, Stream::Workload);
  auto feed = [&] {
    ctx.clear_samples();
    const auto& nodes = s.snapshot(ctx.round()).nodes;
    for (NodeId v : nodes) {
      std::vector<NodeId> o(8);
      for (auto& x : o) x = nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
      ctx.set_samples(v, o);
    }
  };
  LandmarkStore store;
  store.reserve(s.id_limit());
  const int depth = 4;
  const std::uint64_t cap = landmark_cap(256, 2, depth);
  LandmarkBuilder builder(9, Digest{}, LandmarkKind::Storage, depth, cap);
  ctx.set_round(50);
  feed();
  std::vector<NodeId> members{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  auto ids = std::make_shared<const std::vector<NodeId>>(members);
  builder.start(members, ids, 0, ctx, store);
  std::vector<BuildReport> reports;
  while (reports.empty() && ctx.round() < 80) {
    auto inbox = ctx.advance();
    feed();
    for (const auto& m : inbox) builder.on_invite(m, ctx, store);
    for (auto& r : builder.tick(ctx)) reports.push_back(r);
  }
  REQUIRE(reports.size() == 1);
  const auto& r = reports[0];
  CHECK(r.members == 12);
  CHECK(r.depth_reached <= depth);
  CHECK(r.depth_reached >= 1);
  CHECK(r.set_size >= r.members);
  CHECK(r.set_size <= cap);
  CHECK(r.invitations_lost == 0);
  const auto holders = store.holders(9, ctx.round());
  CHECK(holders.size() == r.set_size);
  CHECK(std::set<NodeId>(holders.begin(), holders.end()).size() == holders.size());
  for (NodeId v : holders) {
    const auto* rec = store.find(v, 9, ctx.round());
    REQUIRE(rec != nullptr);
    CHECK(rec->committee_ids == ids);
    CHECK(rec->expires_round == rec->created_round + 2 * static_cast<Round>(cfg.tau));
    CHECK(rec->depth <= static_cast<std::uint32_t>(depth));
  }
}
