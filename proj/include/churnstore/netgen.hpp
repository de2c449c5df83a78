#ifndef CHURNSTORE_NETGEN_HPP
#define CHURNSTORE_NETGEN_HPP

#include <churnstore/common.hpp>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace churnstore {

/// One round of the adversary's topology: a d-regular simple graph whose
/// vertices are slots. `nodes[s]` is the node occupying slot `s` this round.
struct GraphSnapshot {
  Round round = 0;
  std::uint32_t degree = 0;
  std::vector<NodeId> nodes;
  std::shared_ptr<const std::vector<Slot>> adjacency;  // n * degree neighbour slots
  double lambda_estimate = 0.0;                         // |λ₂| of A/d
  double lambda_bound = 1.0;                            // certified bound, lambda_estimate <= bound < 1

  std::uint32_t size() const { return static_cast<std::uint32_t>(nodes.size()); }
  std::span<const Slot> neighbors(Slot s) const {
    return {adjacency->data() + static_cast<std::size_t>(s) * degree, degree};
  }
};

/// Replacements applied at the start of `round`. `added[i]` takes over
/// `slots[i]`, the slot vacated by `removed[i]`.
struct ChurnEvent {
  Round round = 0;
  std::vector<NodeId> removed;
  std::vector<NodeId> added;
  std::vector<Slot> slots;

  bool empty() const { return removed.empty(); }
};

enum class ChurnStrategy {
  None,
  UniformRandom,
  OldestFirst,
  /// Removes the contiguous block of the most recently issued ids.
  Block,
};

std::string_view to_string(ChurnStrategy s);
ChurnStrategy parse_strategy(std::string_view text);

struct ExpanderOptions {
  int retry_budget = 64;
  double lambda_tol = 1e-7;
};

/// Scripted extra removal, used to stage specific failure scenarios. It is
/// part of the committed schedule, so the adversary stays oblivious.
struct ScriptedRemoval {
  Round round;
  NodeId node;
};

struct ScheduleParams {
  std::uint32_t n = 256;
  std::uint32_t d = 8;
  double lambda_max = 0.7;
  Round horizon = 100;
  double k = 2.0;
  double rate_scale = 0.0;
  ChurnStrategy strategy = ChurnStrategy::UniformRandom;
  /// Fraction of edges re-sampled (double-edge swaps) each round.
  double rewire_fraction = 0.01;
  std::uint64_t seed = 1;
  ExpanderOptions expander;
  std::vector<ScriptedRemoval> scripted;
};

/// floor(rate_scale * n / ln^k n).
std::uint32_t churn_per_round(std::uint32_t n, double k, double rate_scale);

/// The adversary's pre-committed sequence of graphs and churn events. Fully
/// determined by its parameters; immutable once committed.
class DynamicNetworkSchedule {
 public:
  DynamicNetworkSchedule() = default;

  const ScheduleParams& params() const { return params_; }
  std::uint32_t n() const { return params_.n; }
  std::uint32_t d() const { return params_.d; }
  Round horizon() const { return static_cast<Round>(snapshots_.size()); }
  std::uint32_t churn_rate() const { return churn_rate_; }

  const GraphSnapshot& snapshot(Round r) const;
  const ChurnEvent& event(Round r) const;

  /// Upper bound (exclusive) on ids ever issued by this schedule.
  NodeId id_limit() const { return static_cast<NodeId>(join_round_.size()); }
  bool known(NodeId id) const { return id < join_round_.size(); }
  Round join_round(NodeId id) const { return join_round_.at(id); }
  /// First round in which `id` is absent (kNever if it survives the horizon).
  Round leave_round(NodeId id) const { return leave_round_.at(id); }
  Slot slot_of(NodeId id) const { return slot_of_.at(id); }
  bool present(NodeId id, Round r) const {
    return id < join_round_.size() && join_round_[id] <= r && r < leave_round_[id];
  }
  /// Present in every round of [from, to].
  bool present_throughout(NodeId id, Round from, Round to) const {
    return id < join_round_.size() && join_round_[id] <= from && to < leave_round_[id];
  }

  /// True for the walk-preserving network: churned-out walk state moves to
  /// the fresh node in the same slot instead of being destroyed.
  bool preserves_walks() const { return preserving_; }

 private:
  friend DynamicNetworkSchedule commit_churn_schedule(const ScheduleParams&);
  friend DynamicNetworkSchedule build_preserving_network(const DynamicNetworkSchedule&);
  friend DynamicNetworkSchedule schedule_from_snapshots(std::vector<GraphSnapshot>);

  void index_membership();

  ScheduleParams params_;
  std::uint32_t churn_rate_ = 0;
  std::vector<GraphSnapshot> snapshots_;
  std::vector<ChurnEvent> events_;
  std::vector<Round> join_round_;
  std::vector<Round> leave_round_;
  std::vector<Slot> slot_of_;
  bool preserving_ = false;
};

struct RoundView {
  const GraphSnapshot& graph;
  const ChurnEvent& churn;
};

/// Samples a d-regular simple graph (pairing model with rejection) and
/// resamples until it is connected, non-bipartite and |λ₂| <= lambda_max.
GraphSnapshot build_regular_expander(std::uint32_t n, std::uint32_t d, double lambda_max,
                                     std::uint64_t seed, const ExpanderOptions& options = {});

/// |λ₂| of A/d, the largest eigenvalue magnitude orthogonal to the uniform
/// vector. Throws NotConverged when the iteration budget runs out.
double estimate_lambda(const GraphSnapshot& g, double tol = 1e-9, int max_iterations = 0);

struct StructureReport {
  bool regular = false;
  bool symmetric = false;
  bool simple = false;
  bool connected = false;
  bool bipartite = false;
};
StructureReport inspect_structure(const GraphSnapshot& g);

DynamicNetworkSchedule commit_churn_schedule(const ScheduleParams& params);

/// Builds a schedule from explicit snapshots (ids are taken from each
/// snapshot's slot table; events are derived by diffing consecutive rounds).
DynamicNetworkSchedule schedule_from_snapshots(std::vector<GraphSnapshot> snapshots);

RoundView advance(const DynamicNetworkSchedule& schedule, Round r);

/// `round n d lambda_bound` header then one `u v` line per edge (u < v).
void write_snapshot(std::ostream& out, const GraphSnapshot& g);
void write_schedule(std::ostream& out, const DynamicNetworkSchedule& schedule);
/// Hex SHA-256 of the full schedule dump.
std::string schedule_digest(const DynamicNetworkSchedule& schedule);

}  // namespace churnstore

#endif  // CHURNSTORE_NETGEN_HPP
