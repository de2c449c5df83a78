#include <churnstore/messages.hpp>

#include <algorithm>

namespace churnstore {

namespace {
std::uint64_t words(std::size_t bytes) { return (bytes + 7) / 8; }
}  // namespace

std::uint64_t message_units(const Message& m) {
  std::uint64_t units = 1;
  if (m.ids) units += m.ids->size();
  if (m.payload) units += words(m.payload->size());
  if (m.piece) units += words(m.piece->wire_size());
  if (m.kind == MsgKind::Inquiry && m.to == kNoNode && m.ids) {
    // one inquiry per target: header plus the item id
    units = m.ids->size() * (1 + words(32));
  }
  return units;
}

MessageBus::MessageBus(const DynamicNetworkSchedule& schedule) : schedule_(schedule), volume_(schedule.n(), 0) {}

std::uint64_t MessageBus::send(Round r, Message m) {
  if (!schedule_.present(m.from, r)) throw Error(ErrorCode::UnknownNode, "sender not present");
  if (outbox_round_ != r) {
    if (!outbox_.empty() && outbox_round_ < r) {
      throw Error(ErrorCode::InvalidParams, "undelivered messages from an earlier round");
    }
    outbox_round_ = r;
  }
  const std::uint64_t units = message_units(m);
  volume_[schedule_.slot_of(m.from)] += units;
  sent_ += (m.to == kNoNode && m.ids) ? m.ids->size() : 1;
  outbox_.push_back(std::move(m));
  return units;
}

std::vector<Message> MessageBus::deliver(Round r) {
  std::vector<Message> out;
  if (outbox_.empty()) return out;
  if (outbox_round_ != r - 1) throw Error(ErrorCode::InvalidParams, "delivery out of order");
  out.reserve(outbox_.size());
  for (auto& m : outbox_) {
    if (m.to != kNoNode) {
      if (schedule_.present(m.to, r)) {
        ++delivered_;
        out.push_back(std::move(m));
      } else {
        ++dropped_;
      }
      continue;
    }
    auto kept = std::make_shared<std::vector<NodeId>>();
    for (NodeId id : *m.ids) {
      if (schedule_.present(id, r)) {
        kept->push_back(id);
      } else {
        ++dropped_;
      }
    }
    delivered_ += kept->size();
    if (kept->empty()) continue;
    m.ids = std::move(kept);
    out.push_back(std::move(m));
  }
  outbox_.clear();
  return out;
}

}  // namespace churnstore
