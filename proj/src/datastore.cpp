#include <churnstore/datastore.hpp>

#include <algorithm>
#include <cmath>

namespace churnstore {

std::string_view to_string(StorageMode m) { return m == StorageMode::Replicate ? "replicate" : "erasure"; }

StorageMode parse_mode(std::string_view text) {
  if (text == "replicate") return StorageMode::Replicate;
  if (text == "erasure") return StorageMode::Erasure;
  throw Error(ErrorCode::ConfigError, "unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::Pending: return "pending";
    case SearchStatus::Success: return "success";
    case SearchStatus::NotFound: return "not-found";
    case SearchStatus::RequesterGone: return "requester-gone";
    case SearchStatus::InsufficientSamples: return "insufficient-samples";
  }
  return "?";
}

DataItem DataItem::make(std::vector<std::uint8_t> payload, NodeId origin, Round r) {
  DataItem item;
  item.item_id = sha256(payload);
  item.payload = std::make_shared<const std::vector<std::uint8_t>>(std::move(payload));
  item.origin = origin;
  item.stored_round = r;
  return item;
}

struct Holding {
  std::uint32_t epoch = 0;
  Bytes replica;
  std::shared_ptr<const Piece> piece;
};

struct Datastore::StorageTask {
  std::uint32_t id = 0;
  DataItem item;
  StorageMode mode = StorageMode::Replicate;
  std::uint32_t h = 0;
  CodeParams code;
  std::unique_ptr<CommitteeProcess> committee;
  std::unique_ptr<LandmarkBuilder> builder;
  Round anchor = 0;
  std::unordered_map<NodeId, Holding> holdings;
  StorageOutcome outcome;
};

struct Datastore::SearchTask {
  struct Relay {
    Round fetch_sent = -1;
    bool reported = false;
  };
  std::uint32_t id = 0;
  std::uint32_t storage = 0;
  SearchResult result;
  std::unique_ptr<CommitteeProcess> committee;
  std::unique_ptr<LandmarkBuilder> builder;
  Round anchor = 0;
  Round dissolve_round = 0;
  bool done = false;
  std::unordered_map<NodeId, Relay> relays;
  std::vector<Piece> pieces;
  std::set<NodeId> asked;
};

Datastore::Datastore(const DynamicNetworkSchedule& schedule, DatastoreParams params)
    : schedule_(schedule), params_(params) {
  store_.reserve(schedule.id_limit());
}

Datastore::~Datastore() = default;

std::uint32_t Datastore::next_task() { return tasks_++; }

namespace {
// Builds run every τ rounds, phase-aligned with the committee takeovers.
constexpr Round kBuildOffset = 3;

Message reply_to(const Message& m, MsgKind kind) {
  Message r;
  r.kind = kind;
  r.from = m.to;
  r.to = m.from;
  r.task = m.task;
  r.value = m.value;
  return r;
}
}  // namespace

std::uint32_t Datastore::store(NodeId u, DataItem item, StorageMode mode, std::uint32_t h, ProtocolContext& ctx) {
  const auto& cfg = ctx.walk_config();
  const Round r = ctx.round();
  if (!ctx.present(u)) throw Error(ErrorCode::UnknownNode, "storer not present");
  if (r < 2 * static_cast<Round>(cfg.tau)) throw Error(ErrorCode::InvalidParams, "storage starts at round 2τ");
  const std::uint32_t size = h * cfg.log_n;
  auto invitees = choose_invitees(ctx.samples(u), size);
  if (invitees.size() < size) {
    throw Error(ErrorCode::InsufficientSamples,
                std::to_string(invitees.size()) + " distinct origins, need " + std::to_string(size));
  }

  auto task = std::make_unique<StorageTask>();
  StorageTask& t = *task;
  t.id = next_task();
  t.item = std::move(item);
  t.item.origin = u;
  t.item.stored_round = r;
  t.mode = mode;
  t.h = h;
  if (mode == StorageMode::Erasure) t.code = CodeParams::for_committee(cfg.n, h);
  t.anchor = r + kBuildOffset;
  t.outcome = {t.id, t.item.item_id, mode, h, r, kNever, false, 0, 0, 0};
  t.builder = std::make_unique<LandmarkBuilder>(t.id, t.item.item_id, LandmarkKind::Storage, params_.tree_depth,
                                                landmark_cap(cfg.n, h, params_.tree_depth));

  CommitteeHooks hooks;
  hooks.handover = [&t](NodeId initiator, std::span<const NodeId>, std::span<const Message> counts,
                        std::vector<Message>& invitations) {
    const bool initial = counts.empty();
    if (t.mode == StorageMode::Replicate) {
      Bytes replica = t.item.payload;
      if (!initial) {
        auto it = t.holdings.find(initiator);
        if (it == t.holdings.end() || !it->second.replica) return false;
        replica = it->second.replica;
      }
      for (auto& m : invitations) m.payload = replica;
      return true;
    }
    std::vector<std::uint8_t> payload;
    if (initial) {
      payload = *t.item.payload;
    } else {
      std::vector<Piece> have;
      auto own = t.holdings.find(initiator);
      if (own != t.holdings.end() && own->second.piece) have.push_back(*own->second.piece);
      for (const auto& c : counts) {
        if (c.piece) have.push_back(*c.piece);
      }
      try {
        payload = reconstruct(have);
      } catch (const Error&) {
        ++t.outcome.reconstruction_failures;
        return false;
      }
    }
    auto pieces = disperse(payload, t.code, t.item.item_id);
    for (std::size_t i = 0; i < invitations.size(); ++i) {
      invitations[i].piece = std::make_shared<const Piece>(std::move(pieces[i]));
    }
    return true;
  };
  hooks.piece_of = [&t](NodeId member) -> std::shared_ptr<const Piece> {
    auto it = t.holdings.find(member);
    return it == t.holdings.end() ? nullptr : it->second.piece;
  };
  hooks.joined = [&t](NodeId member, const Message& invite) {
    t.holdings[member] = Holding{invite.epoch, invite.payload, invite.piece};
  };
  hooks.released = [&t](NodeId member) {
    auto it = t.holdings.find(member);
    if (it == t.holdings.end()) return;
    if (!t.committee->alive() || it->second.epoch < t.committee->committee().epoch) t.holdings.erase(it);
  };
  if (mode == StorageMode::Replicate) hooks.piece_of = nullptr;

  t.committee = std::make_unique<CommitteeProcess>(t.id, h, params_.epsilon, std::move(hooks));
  t.committee->create(u, invitees, ctx);
  const std::uint32_t id = t.id;
  storage_ids_.push_back(id);
  storage_.emplace(id, std::move(task));
  return id;
}

std::uint32_t Datastore::retrieve(NodeId u, std::uint32_t storage_task, ProtocolContext& ctx) {
  const auto& cfg = ctx.walk_config();
  const Round r = ctx.round();
  auto st = storage_.find(storage_task);
  if (st == storage_.end()) throw Error(ErrorCode::NotFound, "unknown storage task");
  if (!ctx.present(u)) throw Error(ErrorCode::UnknownNode, "requester not present");
  StorageTask& target = *st->second;

  auto task = std::make_unique<SearchTask>();
  SearchTask& s = *task;
  s.id = next_task();
  s.storage = storage_task;
  s.result.task = s.id;
  s.result.storage_task = storage_task;
  s.result.item_id = target.item.item_id;
  s.result.requester = u;
  s.result.requested_round = r;
  s.anchor = r + kBuildOffset;
  s.dissolve_round = r + (params_.search_lifetime ? params_.search_lifetime : 4 * cfg.tau);
  const std::uint32_t id = s.id;
  search_.emplace(id, std::move(task));

  // A storage committee member finds the item locally.
  auto own = target.holdings.find(u);
  if (own != target.holdings.end() && target.committee->committee().is_member(u)) {
    if (own->second.replica) {
      s.result.holder = u;
      finish_search(s, SearchStatus::Success, ctx);
      return id;
    }
    s.pieces.push_back(*own->second.piece);
    for (NodeId m : *target.committee->committee().members) {
      if (m == u) continue;
      Message f;
      f.kind = MsgKind::Fetch;
      f.from = u;
      f.to = m;
      f.task = s.id;
      f.value = storage_task;
      ctx.send(std::move(f));
      s.asked.insert(m);
    }
    return id;
  }

  const std::uint32_t size = params_.search_h * cfg.log_n;
  auto invitees = choose_invitees(ctx.samples(u), size);
  if (invitees.size() < size) {
    finish_search(s, SearchStatus::InsufficientSamples, ctx);
    return id;
  }
  s.builder = std::make_unique<LandmarkBuilder>(s.id, target.item.item_id, LandmarkKind::Search, params_.tree_depth,
                                                landmark_cap(cfg.n, params_.search_h, params_.tree_depth));
  s.committee = std::make_unique<CommitteeProcess>(s.id, params_.search_h, params_.epsilon, CommitteeHooks{});
  s.committee->create(u, invitees, ctx);
  return id;
}

void Datastore::finish_search(SearchTask& s, SearchStatus status, ProtocolContext& ctx) {
  if (s.done) return;
  s.done = true;
  s.result.status = status;
  s.result.success = status == SearchStatus::Success;
  s.result.rounds_elapsed = ctx.round() - s.result.requested_round;
  s.result.messages_used = ctx.messages_for(s.id);
  if (s.committee) s.committee->dissolve(s.result.requester, ctx);
  searches_.push_back(s.result);
}

bool Datastore::useful(const LandmarkRecord& rec, Round r) const {
  auto it = storage_.find(rec.task);
  if (it == storage_.end() || !it->second->committee->alive()) return false;
  const Committee& c = it->second->committee->committee();
  return rec.epoch == c.epoch || (rec.epoch + 1 == c.epoch && r <= c.epoch_start);
}

void Datastore::on_inquiry(const Message& m, ProtocolContext& ctx) {
  const Round r = ctx.round();
  const auto storage_task = static_cast<std::uint32_t>(m.value);
  for (NodeId target : *m.ids) {
    const LandmarkRecord* rec = store_.find(target, storage_task, r);
    if (!rec || rec->kind != LandmarkKind::Storage || !useful(*rec, r)) continue;
    Message reply;
    reply.kind = MsgKind::InquiryReply;
    reply.from = target;
    reply.to = m.from;
    reply.task = m.task;
    reply.epoch = rec->epoch;
    reply.value = storage_task;
    reply.ids = rec->committee_ids;
    ctx.send(std::move(reply));
  }
}

void Datastore::on_message(const Message& m, ProtocolContext& ctx) {
  const Round r = ctx.round();
  switch (m.kind) {
    case MsgKind::Invite:
    case MsgKind::Count:
    case MsgKind::Dissolve: {
      if (auto it = storage_.find(m.task); it != storage_.end()) {
        it->second->committee->on_message(m, ctx);
      } else if (auto jt = search_.find(m.task); jt != search_.end() && jt->second->committee) {
        jt->second->committee->on_message(m, ctx);
      }
      return;
    }
    case MsgKind::LandmarkInvite: {
      if (auto it = storage_.find(m.task); it != storage_.end()) {
        it->second->builder->on_invite(m, ctx, store_);
      } else if (auto jt = search_.find(m.task); jt != search_.end() && jt->second->builder) {
        jt->second->builder->on_invite(m, ctx, store_);
      }
      return;
    }
    case MsgKind::Inquiry:
      on_inquiry(m, ctx);
      return;
    case MsgKind::Fetch: {
      auto it = storage_.find(static_cast<std::uint32_t>(m.value));
      if (it == storage_.end()) return;
      auto h = it->second->holdings.find(m.to);
      if (h == it->second->holdings.end()) return;
      Message reply = reply_to(m, MsgKind::FetchReply);
      reply.payload = h->second.replica;
      reply.piece = h->second.piece;
      ctx.send(std::move(reply));
      return;
    }
    default:
      break;
  }

  auto jt = search_.find(m.task);
  if (jt == search_.end()) return;
  SearchTask& s = *jt->second;
  const NodeId u = s.result.requester;
  const StorageTask& target = *storage_.at(s.storage);

  if (m.kind == MsgKind::InquiryReply) {
    auto& relay = s.relays[m.to];
    if (relay.reported) return;
    if (target.mode == StorageMode::Erasure) {
      Message rep;
      rep.kind = MsgKind::Report;
      rep.from = m.to;
      rep.to = u;
      rep.task = s.id;
      rep.value = m.value;
      rep.ids = m.ids;
      ctx.send(std::move(rep));
      relay.reported = true;
      return;
    }
    if (relay.fetch_sent >= 0 && r <= relay.fetch_sent + 2) return;
    relay.fetch_sent = r;
    for (NodeId member : *m.ids) {
      Message f;
      f.kind = MsgKind::Fetch;
      f.from = m.to;
      f.to = member;
      f.task = s.id;
      f.value = s.storage;
      ctx.send(std::move(f));
    }
    return;
  }

  if (m.kind == MsgKind::FetchReply) {
    if (m.to == u && target.mode == StorageMode::Erasure) {
      if (s.done || !m.piece) return;
      s.pieces.push_back(*m.piece);
      try {
        auto payload = reconstruct(s.pieces);
        if (sha256(payload) == s.result.item_id) {
          s.result.holder = m.from;
          finish_search(s, SearchStatus::Success, ctx);
        }
      } catch (const Error&) {
      }
      return;
    }
    auto& relay = s.relays[m.to];
    if (relay.reported || !m.payload) return;
    relay.reported = true;
    Message rep;
    rep.kind = MsgKind::Report;
    rep.from = m.to;
    rep.to = u;
    rep.task = s.id;
    rep.value = m.from;
    rep.payload = m.payload;
    ctx.send(std::move(rep));
    return;
  }

  if (m.kind == MsgKind::Report && m.to == u && !s.done) {
    if (m.payload) {
      if (sha256(*m.payload) != s.result.item_id) return;
      s.result.holder = static_cast<NodeId>(m.value);
      finish_search(s, SearchStatus::Success, ctx);
      return;
    }
    if (m.ids) {
      for (NodeId member : *m.ids) {
        if (!s.asked.insert(member).second) continue;
        Message f;
        f.kind = MsgKind::Fetch;
        f.from = u;
        f.to = member;
        f.task = s.id;
        f.value = s.storage;
        ctx.send(std::move(f));
      }
    }
  }
}

void Datastore::tick(ProtocolContext& ctx) {
  const Round r = ctx.round();
  const auto tau = static_cast<Round>(ctx.walk_config().tau);
  store_.expire(r);

  auto collect = [&](CommitteeProcess& c, std::uint32_t task, StorageMode mode, StorageOutcome* outcome) {
    for (const auto& e : c.take_events()) {
      switch (e.kind) {
        case CommitteeEvent::Kind::Health:
          if (outcome) health_.push_back({task, mode, e.health});
          break;
        case CommitteeEvent::Kind::TookOver:
          if (outcome) outcome->epochs = e.epoch;
          break;
        case CommitteeEvent::Kind::Fallback:
          if (outcome) ++outcome->fallbacks;
          break;
        case CommitteeEvent::Kind::ReconstructionImpossible:
          if (outcome) outcome->lost = true;
          break;
        case CommitteeEvent::Kind::Dead:
          if (outcome) {
            ++deaths_;
            outcome->end_round = e.round;
            outcome->lost = true;
          }
          break;
        default:
          break;
      }
    }
  };

  for (auto& [id, tp] : storage_) {
    StorageTask& t = *tp;
    t.committee->tick(ctx);
    if (t.committee->state() == CommitteeState::Active && r >= t.anchor && (r - t.anchor) % tau == 0) {
      const Committee& c = t.committee->committee();
      t.builder->start(c.live_members(schedule_, r), c.members, c.epoch, ctx, store_);
    }
    for (auto& rep : t.builder->tick(ctx)) builds_.push_back(rep);
    collect(*t.committee, t.id, t.mode, &t.outcome);
  }

  for (auto& [id, sp] : search_) {
    SearchTask& s = *sp;
    if (!s.done && r >= s.dissolve_round) {
      finish_search(s, ctx.present(s.result.requester) ? SearchStatus::NotFound : SearchStatus::RequesterGone, ctx);
    }
    if (!s.committee) continue;
    s.committee->tick(ctx);
    if (s.committee->state() == CommitteeState::Active && r >= s.anchor && (r - s.anchor) % tau == 0) {
      const Committee& c = s.committee->committee();
      s.builder->start(c.live_members(schedule_, r), c.members, c.epoch, ctx, store_);
    }
    for (auto& rep : s.builder->tick(ctx)) builds_.push_back(rep);
    collect(*s.committee, s.id, StorageMode::Replicate, nullptr);
    if (s.done) continue;

    // Search landmarks ask the origins of this round's samples.
    for (NodeId w : store_.holders(s.id, r)) {
      if (!ctx.present(w)) continue;
      auto origins = ctx.samples(w);
      if (origins.empty()) continue;
      Message q;
      q.kind = MsgKind::Inquiry;
      q.from = w;
      q.task = s.id;
      q.value = s.storage;
      q.ids = std::make_shared<const std::vector<NodeId>>(origins.begin(), origins.end());
      ctx.send(std::move(q));
    }
  }
}

bool Datastore::is_available(std::uint32_t storage_task, Round r, const WalkConfig& cfg,
                             std::uint64_t* landmarks) const {
  std::uint64_t count = 0;
  const Round until = std::min<Round>(r + cfg.tau, schedule_.horizon() - 1);
  for (NodeId node : store_.holders(storage_task, r)) {
    if (!schedule_.present_throughout(node, r, until)) continue;
    const LandmarkRecord* rec = store_.find(node, storage_task, r);
    if (rec && useful(*rec, r)) ++count;
  }
  if (landmarks) *landmarks = count;
  return static_cast<double>(count) >= params_.availability_threshold * std::sqrt(static_cast<double>(cfg.n));
}

std::vector<StorageOutcome> Datastore::storage_outcomes() const {
  std::vector<StorageOutcome> out;
  for (std::uint32_t id : storage_ids_) out.push_back(storage_.at(id)->outcome);
  return out;
}

std::size_t Datastore::live_committees() const {
  std::size_t live = 0;
  for (const auto& [id, t] : storage_) live += t->committee->alive();
  for (const auto& [id, s] : search_) live += s->committee && s->committee->alive();
  return live;
}

std::size_t Datastore::holders(std::uint32_t storage_task) const {
  auto it = storage_.find(storage_task);
  return it == storage_.end() ? 0 : it->second->holdings.size();
}

const Committee* Datastore::committee_of(std::uint32_t task) const {
  if (auto it = storage_.find(task); it != storage_.end()) return &it->second->committee->committee();
  if (auto it = search_.find(task); it != search_.end() && it->second->committee) {
    return &it->second->committee->committee();
  }
  return nullptr;
}

std::uint64_t Datastore::reconstruction_failures() const {
  std::uint64_t total = 0;
  for (const auto& [id, t] : storage_) total += t->outcome.reconstruction_failures;
  return total;
}

}  // namespace churnstore
