#ifndef CHURNSTORE_SIMULATOR_HPP
#define CHURNSTORE_SIMULATOR_HPP

#include <churnstore/datastore.hpp>
#include <churnstore/messages.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/walks.hpp>

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace churnstore {

enum class CapMode { Literal, LoadScaled, Unlimited };
std::string_view to_string(CapMode m);
CapMode parse_cap_mode(std::string_view text);

enum class Scenario { Soup, StoreRetrieve, CommitteeLifetime, Sweep };
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct SimulationConfig {
  std::uint32_t n = 1024;
  std::uint32_t d = 8;
  double lambda_max = 0.7;
  double k = 2.0;
  double rate_scale = 4.0;
  ChurnStrategy strategy = ChurnStrategy::UniformRandom;
  double rewire_fraction = 0.01;
  Round horizon = 500;
  std::uint32_t alpha = 72;
  std::uint32_t h = 2;
  double m = 3.0;
  double epsilon = 0.5;
  bool allow_h_override = false;
  CapMode cap_mode = CapMode::LoadScaled;
  StorageMode mode = StorageMode::Replicate;
  Scenario scenario = Scenario::StoreRetrieve;
  std::uint32_t trials = 1;
  std::uint64_t protocol_seed = 1;
  std::uint64_t adversary_seed = 2;
  std::string out = "out";

  double budget_scale = 1e4;  // cap = budget_scale · ln²n units per node per round
  bool enforce_budget = true;
  double availability_threshold = 1.0;
  int tree_depth = -1;  // landmark tree depth μ; -1 derives it from n and k
  std::uint32_t search_lifetime = 0;
  std::uint32_t items = 10;            // items in `mode`, each stored then retrieved
  std::uint32_t erasure_items = 0;    // extra erasure-coded items in the same run
  bool retrieve = true;
  std::vector<double> sweep_rates = {0.0, 1.0, 2.0, 4.0};
  std::vector<double> sweep_ks = {2.0};
  std::uint32_t erasure_h = 4;
  std::uint32_t payload_bytes = 1024;

  ScheduleParams schedule_params() const;
  WalkConfig walk_config() const;
  DatastoreParams datastore_params() const;
  double budget_cap() const;
};

struct RoundMetrics {
  Round round = 0;
  std::uint32_t churned = 0;
  std::uint64_t tokens_spawned = 0;
  std::uint64_t tokens_forwarded = 0;
  std::uint64_t tokens_destroyed = 0;
  std::uint64_t tokens_harvested = 0;
  std::uint64_t tokens_in_flight = 0;
  std::uint32_t queued_nodes = 0;
  std::uint32_t max_forwarded = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t max_node_units = 0;
  std::uint64_t live_committees = 0;
  std::uint64_t landmark_records = 0;
  std::uint64_t searches_finished = 0;
  std::uint64_t committee_deaths = 0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const RoundMetrics& m);

/// One simulated network: schedule, walk engine, message bus and datastore,
/// advanced round by round in the model's phase order.
class Simulator {
 public:
  /// Called in the computation phase after message dispatch, so stores and
  /// retrievals issued here see this round's samples.
  using Workload = std::function<void(Simulator&, ProtocolContext&)>;

  Simulator(const DynamicNetworkSchedule& schedule, const SimulationConfig& cfg);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  void set_workload(Workload w) { workload_ = std::move(w); }
  /// Runs round round()+1.
  RoundMetrics step();
  /// Runs through round `last`, handing each row to `sink`.
  void run_until(Round last, const std::function<void(const RoundMetrics&)>& sink = {});

  Round round() const { return round_; }
  const DynamicNetworkSchedule& schedule() const { return schedule_; }
  const SimulationConfig& config() const { return cfg_; }
  const WalkConfig& walk_config() const { return engine_.config(); }
  WalkEngine& engine() { return engine_; }
  Datastore& datastore() { return store_; }
  const Datastore& datastore() const { return store_; }
  const MessageBus& bus() const { return bus_; }
  std::span<const NodeId> samples(NodeId id) const;

  /// Per node-round volume in budget units: value -> occurrences.
  const std::map<std::uint64_t, std::uint64_t>& volume_histogram() const { return volume_hist_; }
  std::uint64_t max_volume() const { return max_volume_; }

 private:
  class Context;

  const DynamicNetworkSchedule& schedule_;
  SimulationConfig cfg_;
  WalkEngine engine_;
  MessageBus bus_;
  Datastore store_;
  std::unique_ptr<Context> ctx_;
  Workload workload_;
  Round round_ = -1;
  std::vector<std::vector<NodeId>> samples_;
  std::map<std::uint64_t, std::uint64_t> volume_hist_;
  std::uint64_t max_volume_ = 0;
  std::uint64_t searches_seen_ = 0;
};

/// Smallest value v with at least q of the mass at or below v.
std::uint64_t histogram_quantile(const std::map<std::uint64_t, std::uint64_t>& hist, double q);
void merge_histogram(std::map<std::uint64_t, std::uint64_t>& into, const std::map<std::uint64_t, std::uint64_t>& from);

}  // namespace churnstore

#endif  // CHURNSTORE_SIMULATOR_HPP
