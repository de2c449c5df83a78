#include <churnstore/committee.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace churnstore {

std::vector<NodeId> Committee::live_members(const DynamicNetworkSchedule& schedule, Round r) const {
  std::vector<NodeId> out;
  if (!members) return out;
  for (std::size_t i = 0; i < members->size(); ++i) {
    if (joined[i] && schedule.present((*members)[i], r)) out.push_back((*members)[i]);
  }
  return out;
}

bool Committee::is_member(NodeId id) const {
  if (!members) return false;
  for (std::size_t i = 0; i < members->size(); ++i) {
    if ((*members)[i] == id && joined[i]) return true;
  }
  return false;
}

std::vector<NodeId> choose_invitees(std::span<const NodeId> origins, std::uint32_t count) {
  std::vector<NodeId> out;
  out.reserve(count);
  std::unordered_set<NodeId> seen;
  for (NodeId o : origins) {
    if (out.size() == count) break;
    if (seen.insert(o).second) out.push_back(o);
  }
  return out;
}

Committee create_committee(NodeId u, Round r, std::span<const SampleRecord> samples, std::uint32_t task_tag,
                           const WalkConfig& cfg, std::uint32_t h) {
  if (r < 2 * static_cast<Round>(cfg.tau)) {
    throw Error(ErrorCode::InvalidParams, "committees are created from round 2τ on");
  }
  const std::uint32_t size = h * cfg.log_n;
  std::vector<NodeId> origins;
  origins.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.receiver == u) origins.push_back(s.origin);
  }
  auto invitees = choose_invitees(origins, size);
  if (invitees.size() < size) {
    throw Error(ErrorCode::InsufficientSamples, std::to_string(invitees.size()) + " distinct origins, need " +
                                                    std::to_string(size));
  }
  Committee c;
  c.task_tag = task_tag;
  c.created_round = r;
  c.epoch_start = r + 1;
  c.members = std::make_shared<const std::vector<NodeId>>(std::move(invitees));
  c.joined.assign(size, false);
  c.leader_of_epoch = u;
  c.target_size = size;
  return c;
}

NodeId select_leader(std::span<const CountEntry> table) {
  NodeId best = kNoNode;
  std::uint64_t best_count = 0;
  for (const auto& e : table) {
    if (best == kNoNode || e.count > best_count || (e.count == best_count && e.member < best)) {
      best = e.member;
      best_count = e.count;
    }
  }
  return best;
}

std::vector<NodeId> ranked_members(std::span<const CountEntry> table, std::uint32_t limit) {
  std::vector<CountEntry> sorted(table.begin(), table.end());
  std::sort(sorted.begin(), sorted.end(), [](const CountEntry& a, const CountEntry& b) {
    return a.count != b.count ? a.count > b.count : a.member < b.member;
  });
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < sorted.size() && i < limit; ++i) out.push_back(sorted[i].member);
  return out;
}

std::optional<NodeId> agree_on_initiator(std::span<const NodeId> initiators, const DynamicNetworkSchedule& schedule,
                                         Round r) {
  std::optional<NodeId> best;
  for (NodeId i : initiators) {
    if (schedule.present(i, r) && (!best || i < *best)) best = i;
  }
  return best;
}

CommitteeHealth measure_health(const Committee& c, Round r, const DynamicNetworkSchedule& schedule, std::uint32_t tau,
                               double epsilon) {
  CommitteeHealth h;
  h.task_tag = c.task_tag;
  h.epoch = c.epoch;
  h.created_round = c.created_round;
  h.round = r;
  const Round from = std::max<Round>(0, r - 2 * static_cast<Round>(tau));
  if (c.members) {
    for (std::size_t i = 0; i < c.members->size(); ++i) {
      const NodeId m = (*c.members)[i];
      if (!c.joined[i] || !schedule.present(m, r)) continue;
      ++h.live_members;
      if (schedule.present_throughout(m, from, r)) ++h.core_proxy_members;
    }
  }
  h.good = h.core_proxy_members >= (1.0 - epsilon) * c.target_size;
  return h;
}

CommitteeProcess::CommitteeProcess(std::uint32_t task_tag, std::uint32_t h, double epsilon, CommitteeHooks hooks)
    : task_(task_tag), h_(h), epsilon_(epsilon), hooks_(std::move(hooks)) {
  committee_.task_tag = task_tag;
}

void CommitteeProcess::create(NodeId u, std::span<const NodeId> invitees, ProtocolContext& ctx) {
  const Round r = ctx.round();
  const auto& cfg = ctx.walk_config();
  committee_.created_round = r;
  committee_.epoch = 0;
  committee_.target_size = h_ * cfg.log_n;
  committee_.leader_of_epoch = u;
  state_ = CommitteeState::Forming;
  takeover_round_ = r + 1;
  maintenance_round_ = r + 2 * static_cast<Round>(cfg.tau);
  invite(u, std::vector<NodeId>(invitees.begin(), invitees.end()), 0, ctx, {}, true);
}

void CommitteeProcess::invite(NodeId from, const std::vector<NodeId>& invitees, std::uint32_t epoch,
                              ProtocolContext& ctx, std::span<const Message> counts, bool initial) {
  auto list = std::make_shared<const std::vector<NodeId>>(invitees);
  std::vector<Message> invitations(invitees.size());
  for (std::size_t i = 0; i < invitees.size(); ++i) {
    Message& m = invitations[i];
    m.kind = MsgKind::Invite;
    m.from = from;
    m.to = invitees[i];
    m.task = task_;
    m.epoch = epoch;
    m.value = from;
    m.ids = list;
  }
  if (hooks_.handover && !hooks_.handover(from, invitees, counts, invitations)) {
    if (!initial) events_.push_back({CommitteeEvent::Kind::ReconstructionImpossible, ctx.round(), epoch, {}});
    return;
  }
  for (auto& m : invitations) ctx.send(std::move(m));
  candidates_.push_back({from, list, std::vector<bool>(invitees.size(), false)});
  pending_.emplace_back(invitees.size());
}

void CommitteeProcess::on_message(const Message& m, ProtocolContext& ctx) {
  if (!alive()) return;
  const Round r = ctx.round();
  switch (m.kind) {
    case MsgKind::Invite: {
      if (r != takeover_round_) return;
      for (std::size_t c = 0; c < candidates_.size(); ++c) {
        if (candidates_[c].initiator != m.value || candidates_[c].list != m.ids) continue;
        const auto& list = *candidates_[c].list;
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (list[i] == m.to) {
            candidates_[c].joined[i] = true;
            pending_[c][i] = m;
          }
        }
      }
      break;
    }
    case MsgKind::Count: {
      if (m.epoch != committee_.epoch || r != maintenance_round_ + 2) return;
      const bool seen = std::any_of(counts_.begin(), counts_.end(), [&](const Message& c) { return c.from == m.from; });
      if (!seen) counts_.push_back(m);
      break;
    }
    default:
      break;
  }
}

void CommitteeProcess::tick(ProtocolContext& ctx) {
  if (!alive()) return;
  const Round r = ctx.round();
  const auto& schedule = ctx.schedule();
  const auto& cfg = ctx.walk_config();

  if (r == takeover_round_) {
    take_over(ctx);
    return;
  }
  if (state_ != CommitteeState::Active) return;

  if (r == maintenance_round_) {
    CommitteeEvent health{CommitteeEvent::Kind::Health, r, committee_.epoch,
                          measure_health(committee_, r, schedule, cfg.tau, epsilon_)};
    events_.push_back(health);
    recorded_.clear();
    counts_.clear();
    for (NodeId m : committee_.live_members(schedule, r)) {
      auto s = ctx.samples(m);
      recorded_[m] = {s.size(), choose_invitees(s, committee_.target_size)};
    }
    if (recorded_.empty()) die(ctx);
    return;
  }
  if (r == maintenance_round_ + 1) {
    for (const auto& [member, rec] : recorded_) {
      if (!ctx.present(member)) continue;
      Message m;
      m.kind = MsgKind::Count;
      m.from = member;
      m.task = task_;
      m.epoch = committee_.epoch;
      m.value = rec.first;
      if (hooks_.piece_of) m.piece = hooks_.piece_of(member);
      counts_.push_back(m);  // a member knows its own count
      for (std::size_t i = 0; i < committee_.members->size(); ++i) {
        const NodeId other = (*committee_.members)[i];
        if (other == member || !committee_.joined[i]) continue;
        Message copy = m;
        copy.to = other;
        ctx.send(std::move(copy));
      }
    }
    return;
  }
  if (r == maintenance_round_ + 2) {
    std::vector<CountEntry> table;
    for (const auto& m : counts_) table.push_back({m.from, m.value});
    bool any_decider = false;
    for (const auto& [member, rec] : recorded_) any_decider = any_decider || ctx.present(member);
    if (!any_decider || table.empty()) {
      die(ctx);
      return;
    }
    retiring_ = committee_.live_members(schedule, r);
    const std::uint32_t next_epoch = committee_.epoch + 1;
    const NodeId leader = select_leader(table);
    if (ctx.present(leader)) {
      fallback_ = false;
      invite(leader, recorded_[leader].second, next_epoch, ctx, counts_, false);
    } else {
      fallback_ = true;
      events_.push_back({CommitteeEvent::Kind::Fallback, r, committee_.epoch, {}});
      for (NodeId i : ranked_members(table, cfg.log_n)) {
        if (i != leader && ctx.present(i)) invite(i, recorded_[i].second, next_epoch, ctx, counts_, false);
      }
    }
    if (candidates_.empty()) {
      die(ctx);
      return;
    }
    takeover_round_ = r + 1;
    maintenance_round_ += 2 * static_cast<Round>(cfg.tau);
  }
}

void CommitteeProcess::take_over(ProtocolContext& ctx) {
  const Round r = ctx.round();
  std::size_t winner = 0;
  if (candidates_.size() > 1) {
    std::vector<NodeId> initiators;
    for (const auto& c : candidates_) initiators.push_back(c.initiator);
    const auto agreed = agree_on_initiator(initiators, ctx.schedule(), r);
    if (!agreed) {
      candidates_.clear();
      pending_.clear();
      die(ctx);
      return;
    }
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      if (candidates_[c].initiator == *agreed) winner = c;
    }
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      if (c == winner) continue;
      const auto& list = *candidates_[c].list;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (!candidates_[c].joined[i]) continue;
        Message d;
        d.kind = MsgKind::Dissolve;
        d.from = *agreed;
        d.to = list[i];
        d.task = task_;
        d.epoch = committee_.epoch + 1;
        d.value = candidates_[c].initiator;
        ctx.send(std::move(d));
      }
    }
  }
  Candidate chosen = std::move(candidates_[winner]);
  auto invites = std::move(pending_[winner]);
  candidates_.clear();
  pending_.clear();

  const bool initial = state_ == CommitteeState::Forming;
  committee_.members = chosen.list;
  committee_.joined = chosen.joined;
  committee_.epoch = initial ? 0 : committee_.epoch + 1;
  committee_.epoch_start = r;
  committee_.leader_of_epoch = chosen.initiator;
  takeover_round_ = kNever;
  counts_.clear();
  recorded_.clear();

  bool any = false;
  for (std::size_t i = 0; i < chosen.list->size(); ++i) {
    if (!chosen.joined[i]) continue;
    any = true;
    if (hooks_.joined) hooks_.joined((*chosen.list)[i], *invites[i]);
  }
  release_retiring();
  if (!any) {
    die(ctx);
    return;
  }
  state_ = CommitteeState::Active;
  events_.push_back({initial ? CommitteeEvent::Kind::Joined : CommitteeEvent::Kind::TookOver, r, committee_.epoch, {}});
}

void CommitteeProcess::release_retiring() {
  if (hooks_.released) {
    for (NodeId m : retiring_) hooks_.released(m);
  }
  retiring_.clear();
}

void CommitteeProcess::die(ProtocolContext& ctx) {
  state_ = CommitteeState::Dead;
  release_retiring();
  if (hooks_.released && committee_.members) {
    for (std::size_t i = 0; i < committee_.members->size(); ++i) {
      if (committee_.joined[i]) hooks_.released((*committee_.members)[i]);
    }
  }
  events_.push_back({CommitteeEvent::Kind::Dead, ctx.round(), committee_.epoch, {}});
}

void CommitteeProcess::dissolve(NodeId notifier, ProtocolContext& ctx) {
  if (!alive()) return;
  if (ctx.present(notifier)) {
    for (NodeId m : committee_.live_members(ctx.schedule(), ctx.round())) {
      Message d;
      d.kind = MsgKind::Dissolve;
      d.from = notifier;
      d.to = m;
      d.task = task_;
      d.epoch = committee_.epoch;
      ctx.send(std::move(d));
    }
  }
  state_ = CommitteeState::Dissolved;
  release_retiring();
  events_.push_back({CommitteeEvent::Kind::Dissolved, ctx.round(), committee_.epoch, {}});
}

std::vector<CommitteeEvent> CommitteeProcess::take_events() {
  std::vector<CommitteeEvent> out;
  out.swap(events_);
  return out;
}

}  // namespace churnstore
