#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <churnstore/netgen.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace churnstore;

namespace {

// Dense oracle: all eigenvalues of A/d, drop the single eigenvalue 1 of the
// uniform vector, return the largest remaining magnitude.
double dense_lambda(const GraphSnapshot& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Slot s = 0; s < g.size(); ++s) {
    for (Slot t : g.neighbors(s)) a(s, t) += 1.0 / g.degree;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  auto top = std::min_element(ev.begin(), ev.end(), [](double x, double y) { return std::abs(x - 1) < std::abs(y - 1); });
  ev.erase(top);
  double best = 0;
  for (double v : ev) best = std::max(best, std::abs(v));
  return best;
}

GraphSnapshot cycle(std::uint32_t n) {
  GraphSnapshot g;
  g.degree = 2;
  g.nodes.resize(n);
  auto adj = std::make_shared<std::vector<Slot>>();
  for (Slot s = 0; s < n; ++s) {
    g.nodes[s] = s;
    adj->push_back((s + n - 1) % n);
    adj->push_back((s + 1) % n);
  }
  g.adjacency = adj;
  return g;
}

ScheduleParams churn_params(std::uint32_t n, Round horizon, double rate, ChurnStrategy strategy, std::uint64_t seed) {
  ScheduleParams p;
  p.n = n;
  p.d = 8;
  p.lambda_max = 0.8;
  p.horizon = horizon;
  p.rate_scale = rate;
  p.strategy = strategy;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("K4 is the only 3-regular graph on four nodes") {
  const auto g = build_regular_expander(4, 3, 0.5, 1);
  const auto rep = inspect_structure(g);
  CHECK(rep.regular);
  CHECK(rep.simple);
  CHECK(rep.connected);
  CHECK_FALSE(rep.bipartite);
  CHECK(estimate_lambda(g, 1e-10) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("the 4-cycle is bipartite and never certifies") {
  CHECK_THROWS_AS(build_regular_expander(4, 2, 0.99, 1), Error);
  try {
    build_regular_expander(4, 2, 0.99, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GenerationExhausted);
  }
}

TEST_CASE("invalid expander parameters") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([] { build_regular_expander(5, 3, 0.5, 1); }) == ErrorCode::InvalidParams);  // n·d odd
  CHECK(code([] { build_regular_expander(4, 1, 0.5, 1); }) == ErrorCode::InvalidParams);
  CHECK(code([] { build_regular_expander(8, 3, 1.0, 1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("5-cycle spectrum") {
  const double expected = std::cos(M_PI / 5.0);
  CHECK(estimate_lambda(cycle(5), 1e-10) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("random expander matches the dense eigensolver") {
  const auto g = build_regular_expander(64, 8, 0.7, 1);
  const double dense = dense_lambda(g);
  CHECK(dense <= 0.7);
  CHECK(std::abs(estimate_lambda(g, 1e-9) - dense) < 1e-6);
  CHECK(std::abs(g.lambda_estimate - dense) < 1e-6);
  CHECK(g.lambda_bound < 1.0);
}

TEST_CASE("churn count per round") {
  CHECK(churn_per_round(1024, 2.0, 4.0) == static_cast<std::uint32_t>(std::floor(4096.0 / std::pow(std::log(1024.0), 2))));
  CHECK(churn_per_round(1024, 2.0, 4.0) == 85);
  CHECK(churn_per_round(1024, 2.0, 0.0) == 0);
  const auto s = commit_churn_schedule(churn_params(1024, 3, 4.0, ChurnStrategy::UniformRandom, 3));
  for (Round r = 1; r < s.horizon(); ++r) {
    CHECK(s.event(r).removed.size() == 85);
    CHECK(s.event(r).added.size() == 85);
  }
}

TEST_CASE("rate too high") {
  auto p = churn_params(64, 5, 100.0, ChurnStrategy::UniformRandom, 1);
  CHECK_THROWS_AS(commit_churn_schedule(p), Error);
}

TEST_CASE("zero churn keeps membership") {
  const auto s = commit_churn_schedule(churn_params(64, 20, 0.0, ChurnStrategy::UniformRandom, 2));
  for (Round r = 0; r < s.horizon(); ++r) {
    CHECK(s.event(r).empty());
    CHECK(s.snapshot(r).nodes == s.snapshot(0).nodes);
  }
}

TEST_CASE("round 0 has no churn and replay is deterministic") {
  const auto p = churn_params(128, 30, 2.0, ChurnStrategy::UniformRandom, 5);
  const auto a = commit_churn_schedule(p);
  const auto b = commit_churn_schedule(p);
  CHECK(advance(a, 0).churn.empty());
  CHECK(schedule_digest(a) == schedule_digest(b));
  for (Round r = 0; r < a.horizon(); ++r) {
    CHECK(a.snapshot(r).nodes == b.snapshot(r).nodes);
    CHECK(*a.snapshot(r).adjacency == *b.snapshot(r).adjacency);
  }
  auto q = p;
  q.seed = 6;
  CHECK(schedule_digest(commit_churn_schedule(q)) != schedule_digest(a));
}

TEST_CASE("consecutive rounds differ exactly by the churn event") {
  const auto s = commit_churn_schedule(churn_params(128, 40, 2.0, ChurnStrategy::UniformRandom, 9));
  for (Round r = 0; r + 1 < s.horizon(); ++r) {
    const auto& before = advance(s, r).graph.nodes;
    const auto view = advance(s, r + 1);
    std::set<NodeId> a(before.begin(), before.end()), b(view.graph.nodes.begin(), view.graph.nodes.end());
    std::set<NodeId> gone, fresh;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(gone, gone.end()));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::inserter(fresh, fresh.end()));
    CHECK(gone == std::set<NodeId>(view.churn.removed.begin(), view.churn.removed.end()));
    CHECK(fresh == std::set<NodeId>(view.churn.added.begin(), view.churn.added.end()));
    CHECK(gone.size() == s.churn_rate());
  }
}

TEST_CASE("every snapshot is a certified expander and ids are never reused") {
  for (auto strategy : {ChurnStrategy::UniformRandom, ChurnStrategy::OldestFirst, ChurnStrategy::Block}) {
    const auto s = commit_churn_schedule(churn_params(128, 30, 2.0, strategy, 11));
    std::set<NodeId> seen_gone;
    for (Round r = 0; r < s.horizon(); ++r) {
      const auto& g = s.snapshot(r);
      const auto rep = inspect_structure(g);
      CHECK(rep.regular);
      CHECK(rep.symmetric);
      CHECK(rep.simple);
      CHECK(rep.connected);
      CHECK_FALSE(rep.bipartite);
      CHECK(g.lambda_estimate <= g.lambda_bound);
      CHECK(g.lambda_bound <= 0.8);
      for (NodeId id : g.nodes) CHECK(seen_gone.count(id) == 0);
      for (NodeId id : s.event(r).removed) seen_gone.insert(id);
    }
  }
}

TEST_CASE("oldest-first removes the earliest joiner, smallest id first") {
  auto p = churn_params(64, 12, 0.3, ChurnStrategy::OldestFirst, 4);
  const auto s = commit_churn_schedule(p);
  REQUIRE(s.churn_rate() == 1);
  for (Round r = 1; r < s.horizon(); ++r) {
    const auto& prev = s.snapshot(r - 1).nodes;
    NodeId expected = kNoNode;
    for (NodeId id : prev) {
      if (expected == kNoNode || s.join_round(id) < s.join_round(expected) ||
          (s.join_round(id) == s.join_round(expected) && id < expected)) {
        expected = id;
      }
    }
    REQUIRE(s.event(r).removed.size() == 1);
    CHECK(s.event(r).removed[0] == expected);
  }
}

TEST_CASE("out of horizon") {
  const auto s = commit_churn_schedule(churn_params(32, 5, 0.0, ChurnStrategy::None, 1));
  CHECK_THROWS_AS(advance(s, 5), Error);
  CHECK_THROWS_AS(advance(s, -1), Error);
}

TEST_CASE("snapshot dump format") {
  const auto g = build_regular_expander(4, 3, 0.5, 1);
  std::ostringstream out;
  write_snapshot(out, g);
  std::istringstream in(out.str());
  Round r;
  std::uint32_t n, d;
  double bound;
  in >> r >> n >> d >> bound;
  CHECK(n == 4);
  CHECK(d == 3);
  int edges = 0;
  NodeId u, v;
  while (in >> u >> v) {
    CHECK(u < v);
    ++edges;
  }
  CHECK(edges == 6);
}
