#ifndef CHURNSTORE_WALKS_HPP
#define CHURNSTORE_WALKS_HPP

#include <churnstore/common.hpp>
#include <churnstore/netgen.hpp>

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace churnstore {

/// Walk parameters. Every count is expressed in units of ⌈ln n⌉.
struct WalkConfig {
  std::uint32_t n = 0;
  std::uint32_t alpha = 72;
  std::uint32_t h = 2;
  double m = 3.0;

  std::uint32_t log_n = 0;            // ⌈ln n⌉
  std::uint32_t tau = 0;              // m·⌈ln n⌉ rounds
  std::uint32_t walk_length = 0;      // T = ⌈m·ln n⌉ steps
  std::uint32_t spawn_per_round = 0;  // α·⌈ln n⌉ per node
  std::uint32_t forward_cap = 0;      // tokens forwarded per node per round

  static constexpr std::uint32_t kUnlimited = std::numeric_limits<std::uint32_t>::max();

  /// Derives τ, T, spawn count and the 2h⌈ln n⌉ forwarding cap. Rejects
  /// h > α/36 unless `allow_h_override`.
  static WalkConfig make(std::uint32_t n, std::uint32_t alpha, std::uint32_t h, double m,
                         bool allow_h_override = false);

  std::uint32_t committee_size() const { return h * log_n; }
  /// Cap proportional to the steady-state per-node load α⌈ln n⌉·T.
  std::uint32_t load_scaled_cap() const { return 2 * spawn_per_round * walk_length; }
};

struct WalkId {
  NodeId origin = kNoNode;
  std::uint32_t origin_round = 0;
  std::uint32_t seq = 0;

  auto operator<=>(const WalkId&) const = default;
};

struct WalkToken {
  WalkId walk_id;
  NodeId origin = kNoNode;
  Round origin_round = 0;
  std::uint32_t steps_taken = 0;
  NodeId current_node = kNoNode;
};

struct SampleRecord {
  NodeId receiver = kNoNode;
  NodeId origin = kNoNode;
  Round origin_round = 0;
  Round arrival_round = 0;
  std::uint32_t seq = 0;

  WalkId walk_id() const { return {origin, static_cast<std::uint32_t>(origin_round), seq}; }
};

/// Fresh tokens for `node` in round `r`; walk ids are (node, r, 0..count-1).
std::vector<WalkToken> spawn_walks(NodeId node, Round r, const WalkConfig& cfg);

/// Compact in-engine token: 12 bytes, constant size.
struct PackedToken {
  NodeId origin;
  std::uint32_t origin_round;
  std::uint32_t seq_steps;  // seq << 8 | steps

  std::uint32_t steps() const { return seq_steps & 0xFFu; }
  std::uint32_t seq() const { return seq_steps >> 8; }
};

struct StepStats {
  std::uint64_t destroyed = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t completed = 0;
  std::uint64_t queued_tokens = 0;  // tokens still waiting after forwarding
  std::uint32_t queued_nodes = 0;   // nodes whose queue is non-empty after forwarding
  std::uint32_t max_forwarded_by_node = 0;
};

/// Token engine over a committed schedule. Rounds must be stepped in order.
/// Per round: step_round(r) (churn, capped forwarding, completion), then
/// harvesting, then spawn(r). Tokens spawned in r take their first step in
/// r+1, so a sample harvested in round a has a - origin_round >= T.
class WalkEngine {
 public:
  WalkEngine(const DynamicNetworkSchedule& schedule, WalkConfig cfg, std::uint64_t protocol_seed);

  const WalkConfig& config() const { return cfg_; }
  Round round() const { return round_; }

  StepStats step_round(Round r);
  /// Every present node spawns α⌈ln n⌉ tokens. Returns the number spawned.
  std::uint64_t spawn(Round r);
  /// Adds `count` tokens at `node` with sequence numbers from `seq_base`
  /// (probe walks for oracle comparisons).
  void inject(NodeId node, Round r, std::uint32_t count, std::uint32_t seq_base = 0);

  /// Returns and clears the completed tokens at `node`.
  std::vector<SampleRecord> harvest_samples(NodeId node, Round r);
  std::span<const PackedToken> completed_at(Slot s) const { return completed_[s]; }
  void clear_completed(Slot s);

  /// Exact accounting: spawned == in_flight + completed + harvested + destroyed.
  std::uint64_t spawned_total() const { return spawned_total_; }
  std::uint64_t destroyed_total() const { return destroyed_total_; }
  std::uint64_t harvested_total() const { return harvested_total_; }
  std::uint64_t in_flight() const;
  std::uint64_t completed_pending() const;
  std::uint64_t tokens_at(Slot s) const { return held_[s].size() - held_head_[s] + inbox_[s].size(); }
  /// Tokens forwarded by slot `s` in the last stepped round.
  std::uint32_t forwarded_by(Slot s) const { return forwarded_[s]; }

  std::vector<WalkToken> tokens() const;

 private:
  const DynamicNetworkSchedule& schedule_;
  WalkConfig cfg_;
  std::uint64_t seed_;
  Round round_ = -1;
  std::vector<std::vector<PackedToken>> held_;  // FIFO backlog; live part starts at held_head_
  std::vector<std::size_t> held_head_;
  std::vector<std::vector<PackedToken>> inbox_;  // arrivals then spawned
  std::vector<std::vector<PackedToken>> next_inbox_;
  std::vector<std::uint32_t> forwarded_;
  std::vector<std::vector<PackedToken>> completed_;
  std::uint64_t spawned_total_ = 0;
  std::uint64_t destroyed_total_ = 0;
  std::uint64_t harvested_total_ = 0;
};

/// The walk-preserving network: identical topology, but the walk state of a
/// churned-out node is relocated to the fresh node taking its slot (the
/// removed→added bijection of every event), so no walk is ever destroyed.
DynamicNetworkSchedule build_preserving_network(const DynamicNetworkSchedule& schedule);

}  // namespace churnstore

#endif  // CHURNSTORE_WALKS_HPP
