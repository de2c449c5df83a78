#ifndef CHURNSTORE_COMMITTEE_HPP
#define CHURNSTORE_COMMITTEE_HPP

#include <churnstore/common.hpp>
#include <churnstore/messages.hpp>
#include <churnstore/walks.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace churnstore {

struct Committee {
  std::uint32_t task_tag = 0;
  std::uint32_t epoch = 0;
  Round created_round = 0;
  Round epoch_start = 0;
  IdList members;  // the invitation list every member holds
  std::vector<bool> joined;
  NodeId leader_of_epoch = kNoNode;
  std::uint32_t target_size = 0;

  std::vector<NodeId> live_members(const DynamicNetworkSchedule& schedule, Round r) const;
  bool is_member(NodeId id) const;
};

struct CommitteeHealth {
  std::uint32_t task_tag = 0;
  std::uint32_t epoch = 0;
  Round created_round = 0;
  Round round = 0;
  std::uint32_t live_members = 0;
  std::uint32_t core_proxy_members = 0;
  bool good = false;
};

/// The first `count` distinct origins in arrival order.
std::vector<NodeId> choose_invitees(std::span<const NodeId> origins, std::uint32_t count);

/// Committee of h⌈ln n⌉ invitees drawn from u's freshest samples. Nobody has
/// joined yet; invitations are delivered next round.
Committee create_committee(NodeId u, Round r, std::span<const SampleRecord> samples, std::uint32_t task_tag,
                           const WalkConfig& cfg, std::uint32_t h);

struct CountEntry {
  NodeId member = kNoNode;
  std::uint64_t count = 0;
};
/// Largest count, ties to the smallest id.
NodeId select_leader(std::span<const CountEntry> table);
/// The top min(⌈ln n⌉, |table|) members by (count desc, id asc).
std::vector<NodeId> ranked_members(std::span<const CountEntry> table, std::uint32_t limit);
/// Candidate of the smallest-id initiator still present, if any.
std::optional<NodeId> agree_on_initiator(std::span<const NodeId> initiators, const DynamicNetworkSchedule& schedule,
                                         Round r);

/// Core proxy: live members present throughout [r - 2τ, r].
CommitteeHealth measure_health(const Committee& c, Round r, const DynamicNetworkSchedule& schedule, std::uint32_t tau,
                               double epsilon);

enum class CommitteeState { Forming, Active, Dead, Dissolved };

struct CommitteeEvent {
  enum class Kind { Joined, TookOver, Health, Dead, Fallback, ReconstructionImpossible, Dissolved } kind;
  Round round = 0;
  std::uint32_t epoch = 0;
  CommitteeHealth health{};
};

/// Task-specific hooks for the state carried across epochs.
struct CommitteeHooks {
  /// Fills one attachment per invitee (replica or piece). Returning false
  /// means the task state cannot be handed over.
  std::function<bool(NodeId initiator, std::span<const NodeId> invitees, std::span<const Message> counts,
                     std::vector<Message>& invitations)>
      handover;
  /// Piece piggybacked on the count exchange (erasure mode).
  std::function<std::shared_ptr<const Piece>(NodeId member)> piece_of;
  std::function<void(NodeId member, const Message& invite)> joined;
  std::function<void(NodeId member)> released;
};

/// Runs creation and perpetual maintenance of one committee: record counts
/// at r = created + 2γτ, exchange at r+1, the leader (or, if it is gone, the
/// top-ranked survivors in parallel) invites at r+2, takeover at r+3.
class CommitteeProcess {
 public:
  CommitteeProcess(std::uint32_t task_tag, std::uint32_t h, double epsilon, CommitteeHooks hooks);

  /// Sends the creation invitations from `u` to `invitees` in the current round.
  void create(NodeId u, std::span<const NodeId> invitees, ProtocolContext& ctx);
  void on_message(const Message& m, ProtocolContext& ctx);
  /// Advances the maintenance schedule; call once per round after delivery.
  void tick(ProtocolContext& ctx);
  /// Stops the committee (search committees); `notifier` tells the live members.
  void dissolve(NodeId notifier, ProtocolContext& ctx);

  const Committee& committee() const { return committee_; }
  CommitteeState state() const { return state_; }
  bool alive() const { return state_ == CommitteeState::Forming || state_ == CommitteeState::Active; }
  /// Members of the previous epoch, which keep their task state through takeover.
  std::span<const NodeId> retiring() const { return retiring_; }
  std::vector<CommitteeEvent> take_events();
  Round next_maintenance() const { return maintenance_round_; }

 private:
  struct Candidate {
    NodeId initiator;
    IdList list;
    std::vector<bool> joined;
  };

  void invite(NodeId from, const std::vector<NodeId>& invitees, std::uint32_t epoch, ProtocolContext& ctx,
              std::span<const Message> counts, bool initial);
  void take_over(ProtocolContext& ctx);
  void die(ProtocolContext& ctx);
  void release_retiring();

  std::uint32_t task_;
  std::uint32_t h_;
  double epsilon_;
  CommitteeHooks hooks_;
  Committee committee_;
  CommitteeState state_ = CommitteeState::Forming;
  Round takeover_round_ = kNever;
  Round maintenance_round_ = kNever;
  std::vector<Candidate> candidates_;
  std::vector<std::vector<std::optional<Message>>> pending_;  // delivered invitations per candidate
  std::vector<NodeId> retiring_;
  std::map<NodeId, std::pair<std::uint64_t, std::vector<NodeId>>> recorded_;  // member -> (count, first origins)
  std::vector<Message> counts_;
  bool fallback_ = false;
  std::vector<CommitteeEvent> events_;
};

}  // namespace churnstore

#endif  // CHURNSTORE_COMMITTEE_HPP
