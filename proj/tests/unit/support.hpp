#ifndef CHURNSTORE_TEST_SUPPORT_HPP
#define CHURNSTORE_TEST_SUPPORT_HPP

#include <churnstore/messages.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/walks.hpp>

#include <functional>
#include <map>
#include <vector>

namespace churnstore::test {

/// Hand-driven protocol context: samples are set by the test, sent messages
/// are delivered next round to recipients still present.
class ManualContext final : public ProtocolContext {
 public:
  ManualContext(const DynamicNetworkSchedule& schedule, WalkConfig cfg) : schedule_(schedule), cfg_(cfg) {}

  Round round() const override { return round_; }
  const DynamicNetworkSchedule& schedule() const override { return schedule_; }
  const WalkConfig& walk_config() const override { return cfg_; }
  std::span<const NodeId> samples(NodeId id) const override {
    auto it = samples_.find(id);
    if (it == samples_.end() || !present(id)) return {};
    return it->second;
  }

  void set_round(Round r) { round_ = r; }
  void set_samples(NodeId id, std::vector<NodeId> origins) { samples_[id] = std::move(origins); }
  void clear_samples() { samples_.clear(); }

  /// Moves to the next round and returns the deliverable messages.
  std::vector<Message> advance() {
    ++round_;
    std::vector<Message> out;
    for (auto& m : outbox_) {
      if (m.to == kNoNode) {
        out.push_back(m);
      } else if (present(m.to)) {
        out.push_back(m);
      }
    }
    outbox_.clear();
    return out;
  }
  const std::vector<Message>& outbox() const { return outbox_; }
  std::uint64_t posted() const { return posted_; }

 protected:
  void post(Message m) override {
    ++posted_;
    outbox_.push_back(std::move(m));
  }

 private:
  const DynamicNetworkSchedule& schedule_;
  WalkConfig cfg_;
  Round round_ = 0;
  std::map<NodeId, std::vector<NodeId>> samples_;
  std::vector<Message> outbox_;
  std::uint64_t posted_ = 0;
};

inline DynamicNetworkSchedule static_schedule(std::uint32_t n, std::uint32_t d, Round horizon, std::uint64_t seed = 7) {
  ScheduleParams p;
  p.n = n;
  p.d = d;
  p.horizon = horizon;
  p.rate_scale = 0.0;
  p.strategy = ChurnStrategy::None;
  p.rewire_fraction = 0.0;
  p.seed = seed;
  return commit_churn_schedule(p);
}

}  // namespace churnstore::test

#endif
