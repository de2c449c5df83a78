#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <churnstore/oracle.hpp>

#include <cmath>

using namespace churnstore;

namespace {

// Independent reference: plain dense loops over the adjacency lists.
std::vector<double> reference_walk(const DynamicNetworkSchedule& s, NodeId src, Round t0, Round t, double& killed) {
  const std::size_t n = s.n();
  std::vector<double> x(n, 0.0);
  x[s.slot_of(src)] = 1.0;
  killed = 0.0;
  for (Round r = t0 + 1; r <= t; ++r) {
    for (Slot v : s.event(r).slots) {
      killed += x[v];
      x[v] = 0.0;
    }
    const auto& g = s.snapshot(r);
    std::vector<double> next(n, 0.0);
    for (Slot u = 0; u < n; ++u) {
      for (Slot v : g.neighbors(u)) next[v] += x[u] / g.degree;
    }
    x.swap(next);
  }
  return x;
}

}  // namespace

TEST_CASE("one step on K4") {
  std::vector<GraphSnapshot> snaps(2, build_regular_expander(4, 3, 0.5, 1));
  snaps[1].round = 1;
  const auto s = schedule_from_snapshots(std::move(snaps));
  const auto p = exact_walk_distribution(s, 0, 0, 1);
  CHECK(p[0] == 0.0);
  for (NodeId v = 1; v < 4; ++v) CHECK(p[v] == doctest::Approx(1.0 / 3.0));
  CHECK(p.kill_mass == 0.0);
}

TEST_CASE("zero churn converges to uniform") {
  const auto s = test::static_schedule(64, 8, 80, 1);
  const Round t = 10 * static_cast<Round>(ceil_ln(64));
  const auto p = exact_walk_distribution(s, s.snapshot(0).nodes[3], 0, t);
  CHECK((p.probability.array() - 1.0 / 64).abs().maxCoeff() < 1e-6);
  CHECK(p.kill_mass == 0.0);
}

TEST_CASE("kill mass accounts for a removal after the first step") {
  ScheduleParams params;
  params.n = 64;
  params.d = 8;
  params.horizon = 6;
  params.rate_scale = 0.0;
  params.strategy = ChurnStrategy::None;
  params.seed = 3;
  const auto probe = commit_churn_schedule(params);
  const NodeId src = probe.snapshot(0).nodes[0];
  const NodeId victim = probe.snapshot(0).nodes[probe.snapshot(0).neighbors(0)[0]];
  params.scripted = {{2, victim}};
  const auto s = commit_churn_schedule(params);
  const auto after_one = exact_walk_distribution(s, src, 0, 1);
  const auto p = exact_walk_distribution(s, src, 0, 2);
  CHECK(p.kill_mass == doctest::Approx(after_one[victim]).epsilon(1e-12));
  CHECK(p.kill_mass > 0.0);
}

TEST_CASE("oracle matches the dense reference and conserves mass under churn") {
  ScheduleParams params;
  params.n = 64;
  params.d = 8;
  params.horizon = 30;
  params.rate_scale = 1.0;
  params.seed = 12;
  const auto s = commit_churn_schedule(params);
  for (NodeId src : {s.snapshot(2).nodes[0], s.snapshot(2).nodes[40]}) {
    double killed = 0;
    const auto ref = reference_walk(s, src, 2, 20, killed);
    const auto p = exact_walk_distribution(s, src, 2, 20);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(p.probability[static_cast<Eigen::Index>(i)] - ref[i]) < 1e-14);
    CHECK(std::abs(p.kill_mass - killed) < 1e-14);
    CHECK(std::abs(p.total() - 1.0) < 1e-12);
    CHECK(p.probability.minCoeff() >= 0.0);
  }
}

TEST_CASE("preserving network has no kill mass") {
  ScheduleParams params;
  params.n = 64;
  params.d = 8;
  params.horizon = 20;
  params.rate_scale = 1.0;
  params.seed = 4;
  const auto s = build_preserving_network(commit_churn_schedule(params));
  for (NodeId src : {s.snapshot(0).nodes[0], s.snapshot(0).nodes[9]}) {
    CHECK(exact_walk_distribution(s, src, 0, 19).kill_mass == 0.0);
  }
}

TEST_CASE("reversed schedule gives the conditional origin distribution") {
  ScheduleParams params;
  params.n = 64;
  params.d = 8;
  params.horizon = 25;
  params.rate_scale = 1.0;
  params.seed = 8;
  const auto s = commit_churn_schedule(params);
  const Round t0 = 3, t = 20;
  const auto& origins = s.snapshot(t0).nodes;
  const NodeId d = s.snapshot(t).nodes[17];
  std::vector<double> forward(origins.size());
  double total = 0;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    forward[i] = exact_walk_distribution(s, origins[i], t0, t)[d];
    total += forward[i];
  }
  const auto rev = origin_distribution_reversed(s, d, t0, t);
  for (std::size_t i = 0; i < origins.size(); ++i) CHECK(std::abs(rev[origins[i]] - forward[i] / total) < 1e-10);
}

TEST_CASE("oracle guards") {
  const auto s = test::static_schedule(64, 8, 10, 1);
  CHECK_THROWS_AS(exact_walk_distribution(s, 999999, 0, 5), Error);
  CHECK_THROWS_AS(exact_walk_distribution(s, s.snapshot(0).nodes[0], 0, 50), Error);
}
