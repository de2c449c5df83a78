#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <churnstore/committee.hpp>
#include <churnstore/simulator.hpp>

#include <algorithm>
#include <optional>

using namespace churnstore;

namespace {

SimulationConfig small_config(Round horizon) {
  SimulationConfig cfg;
  cfg.n = 256;
  cfg.rate_scale = 0.0;
  cfg.horizon = horizon;
  cfg.tree_depth = 4;
  return cfg;
}

std::vector<std::uint8_t> payload(std::size_t size) {
  std::vector<std::uint8_t> out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = static_cast<std::uint8_t>(i * 31 + 7);
  return out;
}

// Stores one item from `storer` at `store_round` and asks for it from
// `requester` at `retrieve_round`.
struct OneItem {
  OneItem(NodeId u, Round r, StorageMode m = StorageMode::Replicate, std::uint32_t hh = 2)
      : storer(u), store_round(r), mode(m), h(hh) {}

  NodeId storer;
  Round store_round;
  StorageMode mode;
  std::uint32_t h;
  std::optional<NodeId> requester;
  Round retrieve_round = 0;
  std::uint32_t task = 0;
  bool stored = false;

  void install(Simulator& sim) {
    sim.set_workload([this](Simulator& s, ProtocolContext& ctx) {
      if (ctx.round() == store_round) {
        task = s.datastore().store(storer, DataItem::make(payload(1000), storer, store_round), mode, h, ctx);
        stored = true;
      }
      if (requester && ctx.round() == retrieve_round) s.datastore().retrieve(*requester, task, ctx);
    });
  }
};

}  // namespace

TEST_CASE("zero churn: replicated item is held by h ln n nodes and found") {
  auto cfg = small_config(200);
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  const auto& wc = sim.walk_config();
  const Round tau = wc.tau;
  OneItem item{5, 2 * tau};
  item.requester = 200;
  item.retrieve_round = 4 * tau + 3;
  item.install(sim);

  sim.run_until(2 * tau + 1);
  REQUIRE(item.stored);
  CHECK(sim.datastore().holders(item.task) == cfg.h * wc.log_n);
  for (int epoch = 1; epoch <= 3; ++epoch) {
    sim.run_until(2 * tau + 2 * tau * epoch + 3);
    const Committee* c = sim.datastore().committee_of(item.task);
    REQUIRE(c != nullptr);
    CHECK(c->epoch == static_cast<std::uint32_t>(epoch));
    CHECK(sim.datastore().holders(item.task) == cfg.h * wc.log_n);
  }
  sim.run_until(cfg.horizon - 1);
  const auto& searches = sim.datastore().searches();
  REQUIRE(searches.size() == 1);
  CHECK(searches[0].status == SearchStatus::Success);
  CHECK(searches[0].success);
  CHECK(searches[0].rounds_elapsed <= 4 * tau);
  CHECK(searches[0].messages_used > 0);
  CHECK(sim.datastore().reconstruction_failures() == 0);
  CHECK(sim.datastore().committee_deaths() == 0);

  const auto outcomes = sim.datastore().storage_outcomes();
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].end_round == kNever);
  CHECK_FALSE(outcomes[0].lost);
  CHECK(outcomes[0].epochs >= 3);
  for (const auto& b : sim.datastore().builds()) {
    if (b.kind == LandmarkKind::Storage) CHECK(b.set_size > 0);
  }
}

TEST_CASE("a replica holder finds the item locally") {
  auto cfg = small_config(120);
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  const Round tau = sim.walk_config().tau;
  OneItem item{9, 2 * tau};
  item.install(sim);
  sim.run_until(3 * tau);
  const Committee* c = sim.datastore().committee_of(item.task);
  REQUIRE(c != nullptr);
  const NodeId holder = c->members->front();
  item.requester = holder;
  item.retrieve_round = 3 * tau + 1;
  sim.run_until(3 * tau + 2);
  const auto& searches = sim.datastore().searches();
  REQUIRE(searches.size() == 1);
  CHECK(searches[0].success);
  CHECK(searches[0].rounds_elapsed <= 1);
  CHECK(searches[0].holder == holder);
}

TEST_CASE("storage survives the storer leaving right after the store") {
  auto cfg = small_config(120);
  const Round tau = cfg.walk_config().tau;
  auto params = cfg.schedule_params();
  params.scripted = {{2 * tau + 1, 5}};
  const auto schedule = commit_churn_schedule(params);
  Simulator sim(schedule, cfg);
  OneItem item{5, 2 * tau};
  item.requester = 77;
  item.retrieve_round = 4 * tau + 3;
  item.install(sim);
  sim.run_until(cfg.horizon - 1);
  CHECK_FALSE(schedule.present(5, 2 * tau + 1));
  const auto outcomes = sim.datastore().storage_outcomes();
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].end_round == kNever);
  REQUIRE(sim.datastore().searches().size() == 1);
  CHECK(sim.datastore().searches()[0].success);
}

TEST_CASE("zero churn: erasure-coded item keeps L pieces and is reconstructed") {
  auto cfg = small_config(200);
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  const auto& wc = sim.walk_config();
  const Round tau = wc.tau;
  OneItem item{11, 2 * tau, StorageMode::Erasure, 4};
  item.requester = 150;
  item.retrieve_round = 6 * tau + 2;
  item.install(sim);
  const auto code = CodeParams::for_committee(cfg.n, 4);
  for (int epoch = 0; epoch <= 3; ++epoch) {
    sim.run_until(2 * tau + 2 * tau * epoch + 3);
    CHECK(sim.datastore().holders(item.task) == code.L);
  }
  sim.run_until(cfg.horizon - 1);
  CHECK(sim.datastore().reconstruction_failures() == 0);
  const auto outcomes = sim.datastore().storage_outcomes();
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].reconstruction_failures == 0);
  CHECK(outcomes[0].end_round == kNever);
  REQUIRE(sim.datastore().searches().size() == 1);
  CHECK(sim.datastore().searches()[0].success);
}

TEST_CASE("stores before round 2 tau are rejected") {
  auto cfg = small_config(60);
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  bool threw = false;
  sim.set_workload([&](Simulator& s, ProtocolContext& ctx) {
    if (ctx.round() != 5) return;
    try {
      s.datastore().store(3, DataItem::make(payload(10), 3, 5), StorageMode::Replicate, 2, ctx);
    } catch (const Error& e) {
      threw = e.code() == ErrorCode::InvalidParams;
    }
  });
  sim.run_until(6);
  CHECK(threw);
}

TEST_CASE("a search for an item whose committee is gone reports not found") {
  auto cfg = small_config(200);
  const Round tau = cfg.walk_config().tau;
  // First run: learn who the committee members are.
  std::vector<NodeId> members;
  {
    const auto schedule = commit_churn_schedule(cfg.schedule_params());
    Simulator sim(schedule, cfg);
    OneItem item{5, 2 * tau};
    item.install(sim);
    sim.run_until(2 * tau + 2);
    members = *sim.datastore().committee_of(item.task)->members;
  }
  // Second run on the same schedule plus the removal of every member and
  // the storer shortly after the takeover.
  auto params = cfg.schedule_params();
  params.scripted.push_back({2 * tau + 3, 5});
  for (NodeId m : members) params.scripted.push_back({2 * tau + 3, m});
  const auto schedule = commit_churn_schedule(params);
  Simulator sim(schedule, cfg);
  OneItem item{5, 2 * tau};
  item.requester = 100;
  REQUIRE(std::find(members.begin(), members.end(), 100) == members.end());
  item.retrieve_round = 5 * tau;
  item.install(sim);
  sim.run_until(cfg.horizon - 1);
  const auto& searches = sim.datastore().searches();
  REQUIRE(searches.size() == 1);
  CHECK(searches[0].status == SearchStatus::NotFound);
  CHECK(searches[0].rounds_elapsed == 4 * tau);
  CHECK(sim.datastore().committee_deaths() == 1);
}
