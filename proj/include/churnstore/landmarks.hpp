#ifndef CHURNSTORE_LANDMARKS_HPP
#define CHURNSTORE_LANDMARKS_HPP

#include <churnstore/common.hpp>
#include <churnstore/hash.hpp>
#include <churnstore/messages.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace churnstore {

/// μ = ⌈(log₂n − 2(log₂ln n + ln 2)) / (2·log₂(2(1−1/ln^{(k−1)/2}n)(1−1/ln^{k−1}n)(1−1/n³)))⌉,
/// clamped at 0. Throws DomainError for n < 16 or a non-positive denominator.
int tree_depth(double n, double k);

/// Hard cap on one build: ⌈h ln n⌉ trees of depth μ.
std::uint64_t landmark_cap(std::uint32_t n, std::uint32_t h, int depth);

enum class LandmarkKind : std::uint8_t { Storage, Search };

struct LandmarkRecord {
  Digest item_id{};
  std::uint32_t task = 0;
  std::uint64_t build = 0;
  std::uint32_t epoch = 0;  // committee epoch that ran the build
  IdList committee_ids;
  Round created_round = 0;
  Round expires_round = 0;  // created_round + 2τ; gone from this round on
  LandmarkKind kind = LandmarkKind::Storage;
  std::uint32_t depth = 0;
};

/// Landmark records held by each node.
class LandmarkStore {
 public:
  void reserve(NodeId id_limit) { by_node_.resize(id_limit); }
  bool holds_build(NodeId node, std::uint64_t build) const;
  void add(NodeId node, LandmarkRecord record);
  /// Records of `node` still valid in round r.
  std::vector<const LandmarkRecord*> live(NodeId node, Round r) const;
  const LandmarkRecord* find(NodeId node, std::uint32_t task, Round r) const;
  /// Drops records with expires_round <= r.
  void expire(Round r);
  /// Nodes holding a valid record for `task` in round r.
  std::vector<NodeId> holders(std::uint32_t task, Round r) const;
  std::uint64_t size() const;

 private:
  std::vector<std::vector<LandmarkRecord>> by_node_;
  std::vector<NodeId> occupied_;
};

struct BuildReport {
  Digest item_id{};
  std::uint32_t task = 0;
  LandmarkKind kind = LandmarkKind::Storage;
  std::uint64_t build = 0;
  Round round = 0;
  std::uint32_t members = 0;
  std::uint64_t set_size = 0;
  int depth_reached = 0;
  int target_depth = 0;
  std::uint64_t invitations_sent = 0;
  std::uint64_t invitations_lost = 0;
  std::uint64_t declined = 0;
};

struct TreeBuildState {
  std::uint64_t build = 0;
  Round started = 0;
  Round last_sent = -1;
  std::uint32_t epoch = 0;
  std::uint64_t accepted = 0;
  IdList committee_ids;
  BuildReport report;
};

/// Level-synchronous fanout-2 trees rooted at the live committee members:
/// one level per round, every child gets the committee ids with its
/// invitation, a node already in this build declines.
class LandmarkBuilder {
 public:
  LandmarkBuilder(std::uint32_t task, Digest item_id, LandmarkKind kind, int target_depth, std::uint64_t size_cap);

  void start(std::span<const NodeId> live_members, IdList committee_ids, std::uint32_t epoch, ProtocolContext& ctx,
             LandmarkStore& store);
  void on_invite(const Message& m, ProtocolContext& ctx, LandmarkStore& store);
  /// Closes builds with no invitation in flight; returns their reports.
  std::vector<BuildReport> tick(ProtocolContext& ctx);

  int target_depth() const { return target_depth_; }
  std::size_t active_builds() const { return active_.size(); }

 private:
  void adopt(NodeId node, NodeId parent, std::uint32_t depth, TreeBuildState& state, ProtocolContext& ctx,
             LandmarkStore& store);

  std::uint32_t task_;
  Digest item_id_;
  LandmarkKind kind_;
  int target_depth_;
  std::uint64_t size_cap_;
  std::uint64_t next_build_ = 0;
  std::map<std::uint64_t, TreeBuildState> active_;
};

/// The two freshest distinct origins other than `self` and `parent`.
std::vector<NodeId> choose_children(std::span<const NodeId> origins, NodeId self, NodeId parent);

}  // namespace churnstore

#endif  // CHURNSTORE_LANDMARKS_HPP
