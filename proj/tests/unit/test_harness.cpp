#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <churnstore/config.hpp>
#include <churnstore/random.hpp>
#include <churnstore/scenarios.hpp>
#include <churnstore/stats.hpp>

#include <filesystem>
#include <fstream>

using namespace churnstore;

TEST_CASE("the bus delivers next round and drops messages to departed nodes") {
  ScheduleParams p;
  p.n = 64;
  p.horizon = 10;
  p.strategy = ChurnStrategy::None;
  p.scripted = {{3, 12}};
  const auto s = commit_churn_schedule(p);
  MessageBus bus(s);
  Message a;
  a.kind = MsgKind::Count;
  a.from = 1;
  a.to = 12;
  Message b = a;
  b.to = 13;
  bus.send(2, a);
  bus.send(2, b);
  CHECK(bus.volume(s.slot_of(1)) == 2);
  const auto delivered = bus.deliver(3);
  REQUIRE(delivered.size() == 1);
  CHECK(delivered[0].to == 13);
  CHECK(bus.dropped_total() == 1);
  CHECK(bus.deliver(4).empty());

  Message batch;
  batch.kind = MsgKind::Inquiry;
  batch.from = 1;
  batch.ids = std::make_shared<const std::vector<NodeId>>(std::vector<NodeId>{13, 14, 12});
  bus.send(4, batch);
  const auto expanded = bus.deliver(5);
  REQUIRE(expanded.size() == 1);
  CHECK(*expanded[0].ids == std::vector<NodeId>{13, 14});
  CHECK(bus.dropped_total() == 2);
}

TEST_CASE("message units") {
  Message m;
  CHECK(message_units(m) == 1);
  m.ids = std::make_shared<const std::vector<NodeId>>(std::vector<NodeId>(10));
  CHECK(message_units(m) == 11);
  m.payload = std::make_shared<const std::vector<std::uint8_t>>(std::vector<std::uint8_t>(17));
  CHECK(message_units(m) == 14);
}

TEST_CASE("histogram quantiles") {
  const std::map<std::uint64_t, std::uint64_t> hist{{1, 50}, {5, 49}, {100, 1}};
  CHECK(histogram_quantile(hist, 0.5) == 1);
  CHECK(histogram_quantile(hist, 0.51) == 5);
  CHECK(histogram_quantile(hist, 0.99) == 5);
  CHECK(histogram_quantile(hist, 1.0) == 100);
  CHECK(histogram_quantile({}, 0.5) == 0);
}

TEST_CASE("summary statistics") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  const std::vector<double> p{0.5, 0.5, 0.0}, q{0.0, 0.5, 0.5};
  CHECK(total_variation(p, q) == doctest::Approx(0.5));
}

TEST_CASE("geometric lifetimes pass the constant-hazard test") {
  Rng rng(3);
  std::geometric_distribution<std::uint32_t> geo(0.2);
  std::vector<Lifetime> sample;
  for (int i = 0; i < 2000; ++i) {
    const std::uint32_t life = geo(rng);
    if (life >= 15) {
      sample.push_back({15, false});
    } else {
      sample.push_back({life, true});
    }
  }
  const auto fit = geometric_fit(sample);
  CHECK(fit.testable);
  CHECK(fit.p == doctest::Approx(0.2).epsilon(0.1));
  CHECK(fit.p_value > 0.001);

  std::vector<Lifetime> fixed(500, Lifetime{4, true});
  const auto bad = geometric_fit(fixed);
  CHECK(bad.testable);
  CHECK(bad.p_value < 1e-6);

  const auto curve = survival_curve(sample);
  CHECK(curve.front() == doctest::Approx(1.0));
  CHECK(curve[1] == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("configuration round trip") {
  SimulationConfig cfg;
  cfg.n = 4096;
  cfg.k = 3.0;
  cfg.rate_scale = 0.5;
  cfg.mode = StorageMode::Erasure;
  cfg.cap_mode = CapMode::Literal;
  cfg.sweep_rates = {0.0, 0.25};
  cfg.out = "results/x";
  const auto path = std::filesystem::temp_directory_path() / "churnstore_cfg_test.txt";
  {
    std::ofstream f(path);
    f << "# comment\n" << dump_config(cfg);
  }
  const auto back = load_config(path);
  CHECK(dump_config(back) == dump_config(cfg));
  CHECK(back.n == 4096);
  CHECK(back.mode == StorageMode::Erasure);
  std::filesystem::remove(path);

  SimulationConfig c;
  try {
    apply_setting(c, "no_such_key", "1");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  CHECK_THROWS_AS(apply_setting(c, "n", "many"), Error);
  apply_setting(c, "rounds", "77");
  CHECK(c.horizon == 77);
  CHECK(parse_list("0,1.5,4") == std::vector<double>{0.0, 1.5, 4.0});
}

TEST_CASE("an idle network sends no protocol messages") {
  SimulationConfig cfg;
  cfg.n = 256;
  cfg.tree_depth = 4;
  cfg.rate_scale = 1.0;
  cfg.horizon = 40;
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  sim.run_until(cfg.horizon - 1);
  CHECK(sim.bus().sent_total() == 0);
  CHECK(sim.max_volume() <= sim.walk_config().forward_cap * kTokenUnits);
}

TEST_CASE("a tiny budget is enforced") {
  SimulationConfig cfg;
  cfg.n = 256;
  cfg.tree_depth = 4;
  cfg.rate_scale = 0.0;
  cfg.horizon = 40;
  cfg.budget_scale = 1.0;
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  try {
    sim.run_until(cfg.horizon - 1);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
}

TEST_CASE("replay: identical seeds give identical metrics, the schedule ignores the protocol seed") {
  SimulationConfig cfg;
  cfg.n = 256;
  cfg.tree_depth = 4;
  cfg.rate_scale = 0.5;
  cfg.horizon = 160;
  cfg.items = 2;
  const auto a = run_trial(cfg, true);
  const auto b = run_trial(cfg, true);
  CHECK_FALSE(a.metrics_csv.empty());
  CHECK(a.metrics_csv == b.metrics_csv);

  SimulationConfig other = cfg;
  other.protocol_seed = cfg.protocol_seed + 100;
  CHECK(schedule_digest(commit_churn_schedule(cfg.schedule_params())) ==
        schedule_digest(commit_churn_schedule(other.schedule_params())));
  const auto c = run_trial(other, true);
  CHECK(c.metrics_csv != a.metrics_csv);
}

TEST_CASE("reports are written") {
  SimulationConfig cfg;
  cfg.n = 256;
  cfg.tree_depth = 4;
  cfg.rate_scale = 0.0;
  cfg.horizon = 130;
  cfg.items = 1;
  const auto dir = std::filesystem::temp_directory_path() / "churnstore_report_test";
  std::filesystem::remove_all(dir);
  const auto trials = scenario_store_retrieve(cfg, true);
  write_reports(dir, cfg, trials);
  for (const char* name : {"searches.csv", "storage.csv", "health.csv", "builds.csv", "availability.csv",
                           "volume.csv", "manifest.txt", "metrics_trial0.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  std::filesystem::remove_all(dir);
}
