#ifndef CHURNSTORE_MESSAGES_HPP
#define CHURNSTORE_MESSAGES_HPP

#include <churnstore/common.hpp>
#include <churnstore/erasure.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/walks.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace churnstore {

enum class MsgKind : std::uint8_t {
  Invite,          // committee invitation with the member list (+ replica or piece)
  Count,           // maintenance count exchange (+ piece in erasure mode)
  Dissolve,        // candidate or search committee dissolved
  LandmarkInvite,  // tree child invitation with the committee ids
  Inquiry,         // search landmark asks sample origins about an item (batched)
  InquiryReply,    // storage landmark answers with the storage committee ids
  Fetch,           // request replica or piece from a storage committee member
  FetchReply,      // replica or piece
  Report,          // search landmark to requester: payload or committee ids
};

using IdList = std::shared_ptr<const std::vector<NodeId>>;
using Bytes = std::shared_ptr<const std::vector<std::uint8_t>>;

struct Message {
  MsgKind kind = MsgKind::Invite;
  NodeId from = kNoNode;
  NodeId to = kNoNode;  // kNoNode: batched to every id in `ids`
  std::uint32_t task = 0;
  std::uint32_t epoch = 0;
  std::uint64_t value = 0;  // count, build id, depth, initiator, ...
  IdList ids;
  Bytes payload;
  std::shared_ptr<const Piece> piece;
};

/// Budget units: 1 per id or counter (the header counts as one), ⌈bytes/8⌉
/// for payloads and pieces, 4 per walk token.
std::uint64_t message_units(const Message& m);
inline constexpr std::uint64_t kTokenUnits = 4;

/// The protocol's view of the network in the current round.
class ProtocolContext {
 public:
  virtual ~ProtocolContext() = default;
  virtual Round round() const = 0;
  virtual const DynamicNetworkSchedule& schedule() const = 0;
  virtual const WalkConfig& walk_config() const = 0;
  bool present(NodeId id) const { return schedule().present(id, round()); }
  /// Origins of the walks `id` harvested this round, in arrival order.
  virtual std::span<const NodeId> samples(NodeId id) const = 0;

  /// Queues `m` for delivery next round, counting it against its task.
  void send(Message m) {
    per_task_[m.task] += (m.to == kNoNode && m.ids) ? m.ids->size() : 1;
    post(std::move(m));
  }
  std::uint64_t messages_for(std::uint32_t task) const {
    auto it = per_task_.find(task);
    return it == per_task_.end() ? 0 : it->second;
  }

 protected:
  virtual void post(Message m) = 0;

 private:
  std::unordered_map<std::uint32_t, std::uint64_t> per_task_;
};

/// Id-addressed one-hop delivery: messages sent in round r are delivered in
/// round r+1 to recipients still present; the rest are dropped silently.
class MessageBus {
 public:
  explicit MessageBus(const DynamicNetworkSchedule& schedule);

  /// Charges the sender and queues for next round. Returns the units charged.
  std::uint64_t send(Round r, Message m);
  /// Returns the messages deliverable in round r (sent in r-1). Batched
  /// messages keep only their present recipients.
  std::vector<Message> deliver(Round r);

  void charge(Slot s, std::uint64_t units) { volume_[s] += units; }
  void reset_volume() { std::fill(volume_.begin(), volume_.end(), 0); }
  std::uint64_t volume(Slot s) const { return volume_[s]; }
  std::span<const std::uint64_t> volumes() const { return volume_; }

  std::uint64_t sent_total() const { return sent_; }
  std::uint64_t dropped_total() const { return dropped_; }
  std::uint64_t delivered_total() const { return delivered_; }
  std::size_t pending() const { return outbox_.size(); }

 private:
  const DynamicNetworkSchedule& schedule_;
  std::vector<Message> outbox_;
  Round outbox_round_ = -1;
  std::vector<std::uint64_t> volume_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace churnstore

#endif  // CHURNSTORE_MESSAGES_HPP
