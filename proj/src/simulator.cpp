#include <churnstore/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace churnstore {

std::string_view to_string(CapMode m) {
  switch (m) {
    case CapMode::Literal: return "literal";
    case CapMode::LoadScaled: return "load";
    case CapMode::Unlimited: return "unlimited";
  }
  return "?";
}

CapMode parse_cap_mode(std::string_view text) {
  if (text == "literal") return CapMode::Literal;
  if (text == "load") return CapMode::LoadScaled;
  if (text == "unlimited") return CapMode::Unlimited;
  throw Error(ErrorCode::ConfigError, "unknown cap mode '" + std::string(text) + "'");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Soup: return "soup";
    case Scenario::StoreRetrieve: return "store-retrieve";
    case Scenario::CommitteeLifetime: return "committee-lifetime";
    case Scenario::Sweep: return "sweep";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "soup") return Scenario::Soup;
  if (text == "store-retrieve") return Scenario::StoreRetrieve;
  if (text == "committee-lifetime") return Scenario::CommitteeLifetime;
  if (text == "sweep") return Scenario::Sweep;
  throw Error(ErrorCode::ConfigError, "unknown scenario '" + std::string(text) + "'");
}

ScheduleParams SimulationConfig::schedule_params() const {
  ScheduleParams p;
  p.n = n;
  p.d = d;
  p.lambda_max = lambda_max;
  p.horizon = horizon;
  p.k = k;
  p.rate_scale = rate_scale;
  p.strategy = rate_scale == 0.0 ? ChurnStrategy::None : strategy;
  p.rewire_fraction = rewire_fraction;
  p.seed = adversary_seed;
  return p;
}

WalkConfig SimulationConfig::walk_config() const {
  WalkConfig cfg = WalkConfig::make(n, alpha, h, m, allow_h_override);
  if (cap_mode == CapMode::LoadScaled) cfg.forward_cap = cfg.load_scaled_cap();
  if (cap_mode == CapMode::Unlimited) cfg.forward_cap = WalkConfig::kUnlimited;
  return cfg;
}

DatastoreParams SimulationConfig::datastore_params() const {
  DatastoreParams p;
  p.epsilon = epsilon;
  if (tree_depth >= 0) {
    p.tree_depth = tree_depth;
  } else {
    try {
      p.tree_depth = churnstore::tree_depth(n, k);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, std::string(e.what()) + " (set tree_depth explicitly)");
    }
  }
  p.availability_threshold = availability_threshold;
  p.search_lifetime = search_lifetime;
  p.search_h = h;
  return p;
}

double SimulationConfig::budget_cap() const {
  const double ln = std::log(static_cast<double>(n));
  return budget_scale * ln * ln;
}

void write_metrics_header(std::ostream& out) {
  out << "round,churned,tokens_spawned,tokens_forwarded,tokens_destroyed,tokens_harvested,tokens_in_flight,"
         "queued_nodes,max_forwarded,messages_sent,messages_dropped,max_node_units,live_committees,"
         "landmark_records,searches_finished,committee_deaths\n";
}

void write_metrics_row(std::ostream& out, const RoundMetrics& m) {
  out << m.round << ',' << m.churned << ',' << m.tokens_spawned << ',' << m.tokens_forwarded << ','
      << m.tokens_destroyed << ',' << m.tokens_harvested << ',' << m.tokens_in_flight << ',' << m.queued_nodes << ','
      << m.max_forwarded << ',' << m.messages_sent << ',' << m.messages_dropped << ',' << m.max_node_units << ','
      << m.live_committees << ',' << m.landmark_records << ',' << m.searches_finished << ',' << m.committee_deaths
      << '\n';
}

class Simulator::Context final : public ProtocolContext {
 public:
  explicit Context(Simulator& sim) : sim_(sim) {}
  Round round() const override { return sim_.round_; }
  const DynamicNetworkSchedule& schedule() const override { return sim_.schedule_; }
  const WalkConfig& walk_config() const override { return sim_.engine_.config(); }
  std::span<const NodeId> samples(NodeId id) const override { return sim_.samples(id); }

 protected:
  void post(Message m) override { sim_.bus_.send(sim_.round_, std::move(m)); }

 private:
  Simulator& sim_;
};

Simulator::Simulator(const DynamicNetworkSchedule& schedule, const SimulationConfig& cfg)
    : schedule_(schedule),
      cfg_(cfg),
      engine_(schedule, cfg.walk_config(), cfg.protocol_seed),
      bus_(schedule),
      store_(schedule, cfg.datastore_params()),
      ctx_(std::make_unique<Context>(*this)) {
  samples_.resize(schedule.n());
}

Simulator::~Simulator() = default;

std::span<const NodeId> Simulator::samples(NodeId id) const {
  if (!schedule_.present(id, round_)) return {};
  return samples_[schedule_.slot_of(id)];
}

RoundMetrics Simulator::step() {
  const Round r = round_ + 1;
  if (r >= schedule_.horizon()) throw Error(ErrorCode::OutOfHorizon, "round beyond the schedule horizon");
  round_ = r;
  RoundMetrics out;
  out.round = r;
  out.churned = static_cast<std::uint32_t>(schedule_.event(r).removed.size());
  const std::uint64_t sent_before = bus_.sent_total();
  const std::uint64_t dropped_before = bus_.dropped_total();
  const std::uint64_t harvested_before = engine_.harvested_total();
  bus_.reset_volume();

  // Churn and neighbour awareness are carried by the schedule; messages sent
  // last round reach the recipients still present.
  auto inbox = bus_.deliver(r);

  const StepStats walk = engine_.step_round(r);
  out.tokens_destroyed = walk.destroyed;
  out.tokens_forwarded = walk.forwarded;
  out.queued_nodes = walk.queued_nodes;
  out.max_forwarded = walk.max_forwarded_by_node;

  const GraphSnapshot& g = schedule_.snapshot(r);
  for (Slot s = 0; s < g.size(); ++s) {
    auto& list = samples_[s];
    list.clear();
    for (const auto& t : engine_.completed_at(s)) list.push_back(t.origin);
    engine_.clear_completed(s);
  }
  out.tokens_harvested = engine_.harvested_total() - harvested_before;

  for (const auto& m : inbox) store_.on_message(m, *ctx_);
  if (workload_) workload_(*this, *ctx_);
  store_.tick(*ctx_);
  out.tokens_spawned = engine_.spawn(r);

  const auto cap = cfg_.budget_cap();
  for (Slot s = 0; s < g.size(); ++s) {
    const std::uint64_t units = engine_.forwarded_by(s) * kTokenUnits + bus_.volume(s);
    ++volume_hist_[units];
    out.max_node_units = std::max(out.max_node_units, units);
    if (cfg_.enforce_budget && static_cast<double>(units) > cap) {
      throw Error(ErrorCode::BudgetExceeded, "node " + std::to_string(g.nodes[s]) + " used " + std::to_string(units) +
                                                 " units in round " + std::to_string(r));
    }
  }
  max_volume_ = std::max(max_volume_, out.max_node_units);

  out.tokens_in_flight = engine_.in_flight();
  if (engine_.spawned_total() != out.tokens_in_flight + engine_.completed_pending() + engine_.harvested_total() +
                                     engine_.destroyed_total()) {
    throw Error(ErrorCode::InvalidParams, "token conservation violated in round " + std::to_string(r));
  }
  out.messages_sent = bus_.sent_total() - sent_before;
  out.messages_dropped = bus_.dropped_total() - dropped_before;
  out.live_committees = store_.live_committees();
  out.landmark_records = store_.landmarks().size();
  out.searches_finished = store_.searches().size() - searches_seen_;
  searches_seen_ = store_.searches().size();
  out.committee_deaths = store_.committee_deaths();
  return out;
}

void Simulator::run_until(Round last, const std::function<void(const RoundMetrics&)>& sink) {
  while (round_ < last) {
    auto m = step();
    if (sink) sink(m);
  }
}

std::uint64_t histogram_quantile(const std::map<std::uint64_t, std::uint64_t>& hist, double q) {
  std::uint64_t total = 0;
  for (const auto& [v, c] : hist) total += c;
  if (total == 0) return 0;
  const auto need = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(total)));
  std::uint64_t seen = 0;
  for (const auto& [v, c] : hist) {
    seen += c;
    if (seen >= need) return v;
  }
  return hist.rbegin()->first;
}

void merge_histogram(std::map<std::uint64_t, std::uint64_t>& into, const std::map<std::uint64_t, std::uint64_t>& from) {
  for (const auto& [v, c] : from) into[v] += c;
}

}  // namespace churnstore
