#include <churnstore/random.hpp>
#include <churnstore/walks.hpp>

#include <algorithm>
#include <cmath>

namespace churnstore {

WalkConfig WalkConfig::make(std::uint32_t n, std::uint32_t alpha, std::uint32_t h, double m, bool allow_h_override) {
  if (n < 2) throw Error(ErrorCode::InvalidParams, "n must be at least 2");
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidParams, "m must be positive");
  if (!allow_h_override && 36ull * h > alpha) {
    throw Error(ErrorCode::InvalidParams,
                "h=" + std::to_string(h) + " exceeds alpha/36 (alpha=" + std::to_string(alpha) + ")");
  }
  WalkConfig cfg;
  cfg.n = n;
  cfg.alpha = alpha;
  cfg.h = h;
  cfg.m = m;
  cfg.log_n = ceil_ln(n);
  cfg.tau = static_cast<std::uint32_t>(std::ceil(m * cfg.log_n));
  cfg.walk_length = static_cast<std::uint32_t>(std::ceil(m * std::log(static_cast<double>(n))));
  if (cfg.walk_length == 0 || cfg.walk_length > 255) {
    throw Error(ErrorCode::InvalidParams, "walk length must lie in [1, 255]");
  }
  cfg.spawn_per_round = alpha * cfg.log_n;
  cfg.forward_cap = 2 * h * cfg.log_n;
  return cfg;
}

std::vector<WalkToken> spawn_walks(NodeId node, Round r, const WalkConfig& cfg) {
  std::vector<WalkToken> out;
  out.reserve(cfg.spawn_per_round);
  for (std::uint32_t i = 0; i < cfg.spawn_per_round; ++i) {
    WalkToken t;
    t.walk_id = {node, static_cast<std::uint32_t>(r), i};
    t.origin = node;
    t.origin_round = r;
    t.current_node = node;
    out.push_back(t);
  }
  return out;
}

WalkEngine::WalkEngine(const DynamicNetworkSchedule& schedule, WalkConfig cfg, std::uint64_t protocol_seed)
    : schedule_(schedule), cfg_(cfg), seed_(protocol_seed) {
  const std::size_t n = schedule.n();
  held_.resize(n);
  held_head_.assign(n, 0);
  inbox_.resize(n);
  next_inbox_.resize(n);
  completed_.resize(n);
  forwarded_.assign(n, 0);
}

StepStats WalkEngine::step_round(Round r) {
  if (r != round_ + 1) throw Error(ErrorCode::InvalidParams, "walk rounds must be stepped in order");
  round_ = r;
  StepStats stats;
  const auto view = advance(schedule_, r);
  const GraphSnapshot& g = view.graph;

  if (!schedule_.preserves_walks()) {
    for (Slot s : view.churn.slots) {
      stats.destroyed += (held_[s].size() - held_head_[s]) + inbox_[s].size() + completed_[s].size();
      held_[s].clear();
      held_head_[s] = 0;
      inbox_[s].clear();
      completed_[s].clear();
    }
  }
  destroyed_total_ += stats.destroyed;

  const std::uint32_t cap = cfg_.forward_cap;
  const std::uint32_t d = g.degree;
  const std::uint32_t length = cfg_.walk_length;
  const Slot* adjacency = g.adjacency->data();

  for (Slot s = 0; s < g.size(); ++s) {
    auto& held = held_[s];
    auto& head = held_head_[s];
    auto& inbox = inbox_[s];
    const std::size_t waiting = held.size() - head;
    const std::size_t total = waiting + inbox.size();
    forwarded_[s] = 0;
    if (total == 0) continue;
    const std::size_t quota = std::min<std::size_t>(cap, total);
    Rng rng = make_rng(seed_, Stream::Walk, g.nodes[s], static_cast<std::uint64_t>(r));
    const Slot* nb = adjacency + static_cast<std::size_t>(s) * d;

    std::uint64_t bits = 0;
    bool have_half = false;
    auto move = [&](PackedToken t) {
      std::uint32_t draw;
      if (have_half) {
        draw = static_cast<std::uint32_t>(bits >> 32);
      } else {
        bits = rng();
        draw = static_cast<std::uint32_t>(bits);
      }
      have_half = !have_half;
      const Slot dest = nb[bounded(draw, d)];
      t.seq_steps += 1;
      if (t.steps() >= length) {
        completed_[dest].push_back(t);
      } else {
        next_inbox_[dest].push_back(t);
      }
    };

    const std::size_t from_held = std::min(quota, waiting);
    for (std::size_t i = 0; i < from_held; ++i) move(held[head + i]);
    head += from_held;
    const std::size_t from_inbox = quota - from_held;
    for (std::size_t i = 0; i < from_inbox; ++i) move(inbox[i]);
    stats.forwarded += quota;
    forwarded_[s] = static_cast<std::uint32_t>(quota);
    stats.max_forwarded_by_node = std::max<std::uint32_t>(stats.max_forwarded_by_node, static_cast<std::uint32_t>(quota));

    held.insert(held.end(), inbox.begin() + static_cast<std::ptrdiff_t>(from_inbox), inbox.end());
    if (head == held.size()) {
      held.clear();
      head = 0;
    } else if (head > held.size() / 2) {
      held.erase(held.begin(), held.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
    if (quota < total) {
      stats.queued_tokens += total - quota;
      ++stats.queued_nodes;
    }
    inbox.clear();
  }
  std::swap(inbox_, next_inbox_);
  for (const auto& c : completed_) stats.completed += c.size();
  return stats;
}

std::uint64_t WalkEngine::spawn(Round r) {
  const GraphSnapshot& g = schedule_.snapshot(r);
  const std::uint32_t count = cfg_.spawn_per_round;
  if (count == 0) return 0;
  for (Slot s = 0; s < g.size(); ++s) {
    auto& inbox = inbox_[s];
    const NodeId origin = g.nodes[s];
    for (std::uint32_t i = 0; i < count; ++i) {
      inbox.push_back(PackedToken{origin, static_cast<std::uint32_t>(r), i << 8});
    }
  }
  const std::uint64_t total = static_cast<std::uint64_t>(count) * g.size();
  spawned_total_ += total;
  return total;
}

void WalkEngine::inject(NodeId node, Round r, std::uint32_t count, std::uint32_t seq_base) {
  if (!schedule_.present(node, r)) throw Error(ErrorCode::UnknownNode, "node not present at injection round");
  if (static_cast<std::uint64_t>(seq_base) + count > (1u << 24)) throw Error(ErrorCode::TooLarge, "sequence space exhausted");
  auto& inbox = inbox_[schedule_.slot_of(node)];
  for (std::uint32_t i = 0; i < count; ++i) {
    inbox.push_back(PackedToken{node, static_cast<std::uint32_t>(r), (seq_base + i) << 8});
  }
  spawned_total_ += count;
}

std::vector<SampleRecord> WalkEngine::harvest_samples(NodeId node, Round r) {
  std::vector<SampleRecord> out;
  if (!schedule_.present(node, r)) return out;
  const Slot s = schedule_.slot_of(node);
  out.reserve(completed_[s].size());
  for (const auto& t : completed_[s]) {
    out.push_back(SampleRecord{node, t.origin, static_cast<Round>(t.origin_round), r, t.seq()});
  }
  clear_completed(s);
  return out;
}

void WalkEngine::clear_completed(Slot s) {
  harvested_total_ += completed_[s].size();
  completed_[s].clear();
}

std::uint64_t WalkEngine::in_flight() const {
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < held_.size(); ++s) total += tokens_at(static_cast<Slot>(s));
  return total;
}

std::uint64_t WalkEngine::completed_pending() const {
  std::uint64_t total = 0;
  for (const auto& c : completed_) total += c.size();
  return total;
}

std::vector<WalkToken> WalkEngine::tokens() const {
  std::vector<WalkToken> out;
  const Round r = std::max<Round>(round_, 0);
  const GraphSnapshot& g = schedule_.snapshot(r);
  auto emit = [&](Slot s, const PackedToken& t) {
    WalkToken w;
    w.walk_id = {t.origin, t.origin_round, t.seq()};
    w.origin = t.origin;
    w.origin_round = t.origin_round;
    w.steps_taken = t.steps();
    w.current_node = g.nodes[s];
    out.push_back(w);
  };
  for (Slot s = 0; s < g.size(); ++s) {
    for (std::size_t i = held_head_[s]; i < held_[s].size(); ++i) emit(s, held_[s][i]);
    for (const auto& t : inbox_[s]) emit(s, t);
    for (const auto& t : completed_[s]) emit(s, t);
  }
  return out;
}

DynamicNetworkSchedule build_preserving_network(const DynamicNetworkSchedule& schedule) {
  DynamicNetworkSchedule out = schedule;
  out.preserving_ = true;
  return out;
}

}  // namespace churnstore
