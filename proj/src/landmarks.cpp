#include <churnstore/landmarks.hpp>

#include <algorithm>
#include <cmath>

namespace churnstore {

int tree_depth(double n, double k) {
  if (!(n >= 16.0)) throw Error(ErrorCode::DomainError, "tree depth needs n >= 16");
  if (!(k > 1.0)) throw Error(ErrorCode::DomainError, "tree depth needs k > 1");
  const double ln_n = std::log(n);
  const double numerator = std::log2(n) - 2.0 * (std::log2(ln_n) + std::log(2.0));
  const double product = 2.0 * (1.0 - 1.0 / std::pow(ln_n, (k - 1.0) / 2.0)) * (1.0 - 1.0 / std::pow(ln_n, k - 1.0)) *
                         (1.0 - 1.0 / (n * n * n));
  const double denominator = 2.0 * std::log2(product);
  if (!(denominator > 0.0)) throw Error(ErrorCode::DomainError, "tree depth denominator is not positive");
  return std::max(0, static_cast<int>(std::ceil(numerator / denominator)));
}

std::uint64_t landmark_cap(std::uint32_t n, std::uint32_t h, int depth) {
  const auto trees = static_cast<std::uint64_t>(std::ceil(h * std::log(static_cast<double>(n))));
  if (depth >= 62) return UINT64_MAX;
  return trees * ((std::uint64_t{1} << (depth + 1)) - 1);
}

bool LandmarkStore::holds_build(NodeId node, std::uint64_t build) const {
  if (node >= by_node_.size()) return false;
  return std::any_of(by_node_[node].begin(), by_node_[node].end(),
                     [build](const LandmarkRecord& r) { return r.build == build; });
}

void LandmarkStore::add(NodeId node, LandmarkRecord record) {
  if (node >= by_node_.size()) by_node_.resize(node + 1);
  if (by_node_[node].empty()) occupied_.push_back(node);
  by_node_[node].push_back(std::move(record));
}

std::vector<const LandmarkRecord*> LandmarkStore::live(NodeId node, Round r) const {
  std::vector<const LandmarkRecord*> out;
  if (node >= by_node_.size()) return out;
  for (const auto& rec : by_node_[node]) {
    if (rec.created_round <= r && r < rec.expires_round) out.push_back(&rec);
  }
  return out;
}

const LandmarkRecord* LandmarkStore::find(NodeId node, std::uint32_t task, Round r) const {
  if (node >= by_node_.size()) return nullptr;
  const LandmarkRecord* best = nullptr;
  for (const auto& rec : by_node_[node]) {
    if (rec.task != task || rec.created_round > r || r >= rec.expires_round) continue;
    if (!best || rec.build > best->build) best = &rec;
  }
  return best;
}

void LandmarkStore::expire(Round r) {
  std::vector<NodeId> still;
  for (NodeId node : occupied_) {
    auto& recs = by_node_[node];
    std::erase_if(recs, [r](const LandmarkRecord& rec) { return rec.expires_round <= r; });
    if (!recs.empty()) still.push_back(node);
  }
  occupied_.swap(still);
}

std::vector<NodeId> LandmarkStore::holders(std::uint32_t task, Round r) const {
  std::vector<NodeId> out;
  for (NodeId node : occupied_) {
    if (find(node, task, r)) out.push_back(node);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t LandmarkStore::size() const {
  std::uint64_t total = 0;
  for (NodeId node : occupied_) total += by_node_[node].size();
  return total;
}

std::vector<NodeId> choose_children(std::span<const NodeId> origins, NodeId self, NodeId parent) {
  std::vector<NodeId> out;
  for (NodeId o : origins) {
    if (out.size() == 2) break;
    if (o == self || o == parent || std::find(out.begin(), out.end(), o) != out.end()) continue;
    out.push_back(o);
  }
  return out;
}

LandmarkBuilder::LandmarkBuilder(std::uint32_t task, Digest item_id, LandmarkKind kind, int target_depth,
                                 std::uint64_t size_cap)
    : task_(task), item_id_(item_id), kind_(kind), target_depth_(target_depth), size_cap_(size_cap) {}

void LandmarkBuilder::start(std::span<const NodeId> live_members, IdList committee_ids, std::uint32_t epoch,
                            ProtocolContext& ctx, LandmarkStore& store) {
  const std::uint64_t id = (static_cast<std::uint64_t>(task_) << 32) | next_build_++;
  TreeBuildState& state = active_[id];
  state.build = id;
  state.started = ctx.round();
  state.epoch = epoch;
  state.committee_ids = std::move(committee_ids);
  state.report.item_id = item_id_;
  state.report.task = task_;
  state.report.kind = kind_;
  state.report.build = id;
  state.report.round = ctx.round();
  state.report.members = static_cast<std::uint32_t>(live_members.size());
  state.report.target_depth = target_depth_;
  for (NodeId m : live_members) {
    if (store.holds_build(m, id)) continue;
    adopt(m, kNoNode, 0, state, ctx, store);
  }
}

void LandmarkBuilder::adopt(NodeId node, NodeId parent, std::uint32_t depth, TreeBuildState& state,
                            ProtocolContext& ctx, LandmarkStore& store) {
  LandmarkRecord rec;
  rec.item_id = item_id_;
  rec.task = task_;
  rec.build = state.build;
  rec.epoch = state.epoch;
  rec.committee_ids = state.committee_ids;
  rec.created_round = ctx.round();
  rec.expires_round = ctx.round() + 2 * static_cast<Round>(ctx.walk_config().tau);
  rec.kind = kind_;
  rec.depth = depth;
  store.add(node, std::move(rec));
  ++state.report.set_size;
  if (state.report.set_size > size_cap_) {
    throw Error(ErrorCode::InvalidParams, "landmark build exceeded its size cap");
  }
  state.report.depth_reached = std::max<int>(state.report.depth_reached, static_cast<int>(depth));
  if (static_cast<int>(depth) >= target_depth_) return;
  for (NodeId child : choose_children(ctx.samples(node), node, parent)) {
    Message m;
    m.kind = MsgKind::LandmarkInvite;
    m.from = node;
    m.to = child;
    m.task = task_;
    m.epoch = depth + 1;
    m.value = state.build;
    m.ids = state.committee_ids;
    ctx.send(std::move(m));
    ++state.report.invitations_sent;
    state.last_sent = ctx.round();
  }
}

void LandmarkBuilder::on_invite(const Message& m, ProtocolContext& ctx, LandmarkStore& store) {
  auto it = active_.find(m.value);
  if (it == active_.end()) return;
  if (store.holds_build(m.to, m.value)) {
    ++it->second.report.declined;
    return;
  }
  ++it->second.accepted;
  adopt(m.to, m.from, m.epoch, it->second, ctx, store);
}

std::vector<BuildReport> LandmarkBuilder::tick(ProtocolContext& ctx) {
  std::vector<BuildReport> done;
  for (auto it = active_.begin(); it != active_.end();) {
    if (it->second.last_sent < ctx.round()) {
      BuildReport rep = it->second.report;
      rep.invitations_lost = rep.invitations_sent - it->second.accepted - rep.declined;
      done.push_back(rep);
      it = active_.erase(it);
    } else {
      ++it;
    }
  }
  return done;
}

}  // namespace churnstore
