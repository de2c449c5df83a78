#include <churnstore/hash.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/random.hpp>
#include <churnstore/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace churnstore {

namespace {

using Edge = std::pair<Slot, Slot>;

bool has_edge(const std::vector<std::vector<Slot>>& adj, Slot u, Slot v) {
  return std::find(adj[u].begin(), adj[u].end(), v) != adj[u].end();
}

// Steger-Wormald pairing: stubs are paired uniformly among the pairs that
// keep the graph simple; a stuck pairing restarts from scratch.
bool pair_stubs(std::uint32_t n, std::uint32_t d, Rng& rng, std::vector<std::vector<Slot>>& adj) {
  for (int restart = 0; restart < 1000; ++restart) {
    adj.assign(n, {});
    std::vector<Slot> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * d);
    for (Slot v = 0; v < n; ++v) stubs.insert(stubs.end(), d, v);

    bool stuck = false;
    while (!stubs.empty() && !stuck) {
      bool paired = false;
      for (int attempt = 0; attempt < 64 && !paired; ++attempt) {
        std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
        std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        Slot u = stubs[i], v = stubs[j];
        if (u == v || has_edge(adj, u, v)) continue;
        adj[u].push_back(v);
        adj[v].push_back(u);
        if (i < j) std::swap(i, j);
        stubs[i] = stubs.back();
        stubs.pop_back();
        stubs[j] = stubs.back();
        stubs.pop_back();
        paired = true;
      }
      if (paired) continue;
      // Exhaustive check for any admissible pair before declaring a restart.
      std::vector<std::pair<std::size_t, std::size_t>> admissible;
      for (std::size_t i = 0; i < stubs.size(); ++i) {
        for (std::size_t j = i + 1; j < stubs.size(); ++j) {
          if (stubs[i] != stubs[j] && !has_edge(adj, stubs[i], stubs[j])) admissible.emplace_back(i, j);
        }
      }
      if (admissible.empty()) {
        stuck = true;
        break;
      }
      std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
      auto [i, j] = admissible[pick(rng)];
      Slot u = stubs[i], v = stubs[j];
      adj[u].push_back(v);
      adj[v].push_back(u);
      stubs[j] = stubs.back();
      stubs.pop_back();
      stubs[i] = stubs.back();
      stubs.pop_back();
    }
    if (!stuck) return true;
  }
  return false;
}

std::shared_ptr<const std::vector<Slot>> flatten(std::vector<std::vector<Slot>>& adj, std::uint32_t d) {
  auto flat = std::make_shared<std::vector<Slot>>();
  flat->reserve(adj.size() * d);
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    flat->insert(flat->end(), row.begin(), row.end());
  }
  return flat;
}

std::vector<std::vector<Slot>> unflatten(const GraphSnapshot& g) {
  std::vector<std::vector<Slot>> adj(g.size());
  for (Slot s = 0; s < g.size(); ++s) {
    auto nb = g.neighbors(s);
    adj[s].assign(nb.begin(), nb.end());
  }
  return adj;
}

// Certifies structure and spectral bound; fills lambda fields on success.
bool certify(GraphSnapshot& g, double lambda_max, double tol) {
  const auto report = inspect_structure(g);
  if (!report.regular || !report.symmetric || !report.simple || !report.connected || report.bipartite) return false;
  const auto op = transition_operator<double>(g);
  const auto spectrum = deflated_extremes<double>(op, tol, 0);
  if (!spectrum.converged) return false;
  g.lambda_estimate = spectrum.magnitude();
  g.lambda_bound = lambda_max;
  return g.lambda_estimate <= lambda_max;
}

// Double-edge swaps: (a,b),(c,e) -> (a,e),(c,b) when that keeps the graph simple.
void rewire(std::vector<std::vector<Slot>>& adj, std::uint32_t swaps, Rng& rng) {
  std::vector<Edge> edges;
  for (Slot u = 0; u < adj.size(); ++u) {
    for (Slot v : adj[u]) {
      if (u < v) edges.emplace_back(u, v);
    }
  }
  if (edges.size() < 2) return;
  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  auto replace = [&adj](Slot u, Slot from, Slot to) { *std::find(adj[u].begin(), adj[u].end(), from) = to; };
  std::uint32_t done = 0;
  for (std::uint64_t attempt = 0; done < swaps && attempt < 20ull * swaps + 100; ++attempt) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    auto [a, b] = edges[i];
    auto [c, e] = edges[j];
    if (rng() & 1) std::swap(c, e);
    if (a == c || a == e || b == c || b == e) continue;
    if (has_edge(adj, a, e) || has_edge(adj, c, b)) continue;
    replace(a, b, e);
    replace(e, c, a);
    replace(c, e, b);
    replace(b, a, c);
    edges[i] = {std::min(a, e), std::max(a, e)};
    edges[j] = {std::min(c, b), std::max(c, b)};
    ++done;
  }
}

}  // namespace

std::string_view to_string(ChurnStrategy s) {
  switch (s) {
    case ChurnStrategy::None: return "none";
    case ChurnStrategy::UniformRandom: return "uniform-random";
    case ChurnStrategy::OldestFirst: return "oldest-first";
    case ChurnStrategy::Block: return "block";
  }
  return "unknown";
}

ChurnStrategy parse_strategy(std::string_view text) {
  if (text == "none") return ChurnStrategy::None;
  if (text == "uniform-random" || text == "uniform") return ChurnStrategy::UniformRandom;
  if (text == "oldest-first" || text == "oldest") return ChurnStrategy::OldestFirst;
  if (text == "block") return ChurnStrategy::Block;
  throw Error(ErrorCode::ConfigError, "unknown churn strategy '" + std::string(text) + "'");
}

std::uint32_t churn_per_round(std::uint32_t n, double k, double rate_scale) {
  if (rate_scale <= 0.0) return 0;
  const double ln = std::log(static_cast<double>(n));
  return static_cast<std::uint32_t>(std::floor(rate_scale * n / std::pow(ln, k)));
}

StructureReport inspect_structure(const GraphSnapshot& g) {
  StructureReport report;
  const std::uint32_t n = g.size();
  report.regular = g.adjacency && g.adjacency->size() == static_cast<std::size_t>(n) * g.degree;
  if (!report.regular) return report;

  report.symmetric = true;
  report.simple = true;
  for (Slot s = 0; s < n; ++s) {
    auto nb = g.neighbors(s);
    std::vector<Slot> sorted(nb.begin(), nb.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) report.simple = false;
    for (Slot t : nb) {
      if (t == s || t >= n) report.simple = false;
      if (t < n) {
        auto back = g.neighbors(t);
        if (std::count(back.begin(), back.end(), s) != std::count(nb.begin(), nb.end(), t)) report.symmetric = false;
      }
    }
  }

  // BFS two-colouring: connectivity and bipartiteness in one pass.
  std::vector<int> colour(n, -1);
  std::queue<Slot> frontier;
  colour[0] = 0;
  frontier.push(0);
  std::uint32_t seen = 1;
  bool odd_cycle = false;
  while (!frontier.empty()) {
    Slot s = frontier.front();
    frontier.pop();
    for (Slot t : g.neighbors(s)) {
      if (t >= n) continue;
      if (colour[t] < 0) {
        colour[t] = 1 - colour[s];
        ++seen;
        frontier.push(t);
      } else if (colour[t] == colour[s]) {
        odd_cycle = true;
      }
    }
  }
  report.connected = seen == n;
  report.bipartite = report.connected && !odd_cycle;
  return report;
}

double estimate_lambda(const GraphSnapshot& g, double tol, int max_iterations) {
  const auto op = transition_operator<double>(g);
  const auto spectrum = deflated_extremes<double>(op, tol, max_iterations);
  if (!spectrum.converged) {
    throw Error(ErrorCode::NotConverged,
                "lambda estimate did not converge in " + std::to_string(spectrum.iterations) + " iterations");
  }
  return spectrum.magnitude();
}

GraphSnapshot build_regular_expander(std::uint32_t n, std::uint32_t d, double lambda_max, std::uint64_t seed,
                                     const ExpanderOptions& options) {
  if (d < 2 || n <= d || (static_cast<std::uint64_t>(n) * d) % 2 != 0) {
    throw Error(ErrorCode::InvalidParams, "need n > d >= 2 and n*d even (n=" + std::to_string(n) +
                                              ", d=" + std::to_string(d) + ")");
  }
  if (!(lambda_max > 0.0 && lambda_max < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "lambda_max must lie in (0, 1)");
  }
  for (int attempt = 0; attempt < options.retry_budget; ++attempt) {
    Rng rng = make_rng(seed, Stream::Topology, 0, static_cast<std::uint64_t>(attempt));
    std::vector<std::vector<Slot>> adj;
    if (!pair_stubs(n, d, rng, adj)) continue;
    GraphSnapshot g;
    g.round = 0;
    g.degree = d;
    g.nodes.resize(n);
    std::iota(g.nodes.begin(), g.nodes.end(), NodeId{0});
    g.adjacency = flatten(adj, d);
    if (certify(g, lambda_max, options.lambda_tol)) return g;
  }
  throw Error(ErrorCode::GenerationExhausted, "no certified " + std::to_string(d) + "-regular graph on " +
                                                  std::to_string(n) + " nodes with lambda <= " +
                                                  std::to_string(lambda_max));
}

const GraphSnapshot& DynamicNetworkSchedule::snapshot(Round r) const {
  if (r < 0 || r >= horizon()) throw Error(ErrorCode::OutOfHorizon, "round " + std::to_string(r));
  return snapshots_[static_cast<std::size_t>(r)];
}

const ChurnEvent& DynamicNetworkSchedule::event(Round r) const {
  if (r < 0 || r >= horizon()) throw Error(ErrorCode::OutOfHorizon, "round " + std::to_string(r));
  return events_[static_cast<std::size_t>(r)];
}

void DynamicNetworkSchedule::index_membership() {
  NodeId limit = 0;
  for (const auto& g : snapshots_) {
    for (NodeId id : g.nodes) limit = std::max(limit, id + 1);
  }
  join_round_.assign(limit, kNever);
  leave_round_.assign(limit, kNever);
  slot_of_.assign(limit, 0);
  for (const auto& g : snapshots_) {
    for (Slot s = 0; s < g.size(); ++s) {
      const NodeId id = g.nodes[s];
      if (join_round_[id] == kNever) {
        join_round_[id] = g.round;
        slot_of_[id] = s;
      }
    }
  }
  for (const auto& e : events_) {
    for (NodeId id : e.removed) leave_round_[id] = e.round;
  }
}

DynamicNetworkSchedule commit_churn_schedule(const ScheduleParams& params) {
  if (params.horizon <= 0) throw Error(ErrorCode::InvalidParams, "horizon must be positive");
  if (!(params.k > 1.0)) throw Error(ErrorCode::InvalidParams, "k must exceed 1");
  if (params.rate_scale < 0.0) throw Error(ErrorCode::InvalidParams, "rate_scale must be non-negative");
  const std::uint32_t n = params.n;
  const std::uint32_t rate =
      params.strategy == ChurnStrategy::None ? 0 : churn_per_round(n, params.k, params.rate_scale);
  if (rate >= n) {
    throw Error(ErrorCode::RateTooHigh, "per-round churn " + std::to_string(rate) + " >= n=" + std::to_string(n));
  }

  DynamicNetworkSchedule schedule;
  schedule.params_ = params;
  schedule.churn_rate_ = rate;
  schedule.snapshots_.reserve(static_cast<std::size_t>(params.horizon));
  schedule.events_.reserve(static_cast<std::size_t>(params.horizon));

  GraphSnapshot current = build_regular_expander(n, params.d, params.lambda_max, params.seed, params.expander);
  schedule.snapshots_.push_back(current);
  schedule.events_.push_back(ChurnEvent{0, {}, {}, {}});

  // Present ids in ascending order; ids are issued in increasing order, so
  // this is also ascending (join round, id).
  std::set<NodeId> present(current.nodes.begin(), current.nodes.end());
  std::vector<Slot> slot_of(n);
  for (Slot s = 0; s < n; ++s) slot_of[s] = s;
  NodeId next_id = n;
  const auto swaps = static_cast<std::uint32_t>(
      std::llround(params.rewire_fraction * static_cast<double>(n) * params.d / 2.0));

  for (Round r = 1; r < params.horizon; ++r) {
    Rng adversary = make_rng(params.seed, Stream::Adversary, static_cast<std::uint64_t>(r));
    std::vector<NodeId> victims;
    victims.reserve(rate);
    switch (rate == 0 ? ChurnStrategy::None : params.strategy) {
      case ChurnStrategy::None:
        break;
      case ChurnStrategy::UniformRandom: {
        std::vector<Slot> slots(n);
        std::iota(slots.begin(), slots.end(), Slot{0});
        for (std::uint32_t i = 0; i < rate; ++i) {
          std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
          std::swap(slots[i], slots[pick(adversary)]);
          victims.push_back(current.nodes[slots[i]]);
        }
        break;
      }
      case ChurnStrategy::OldestFirst: {
        auto it = present.begin();
        for (std::uint32_t i = 0; i < rate; ++i, ++it) victims.push_back(*it);
        break;
      }
      case ChurnStrategy::Block: {
        auto it = present.rbegin();
        for (std::uint32_t i = 0; i < rate; ++i, ++it) victims.push_back(*it);
        break;
      }
    }
    for (const auto& scripted : params.scripted) {
      if (scripted.round == r && present.count(scripted.node) &&
          std::find(victims.begin(), victims.end(), scripted.node) == victims.end()) {
        victims.push_back(scripted.node);
      }
    }

    ChurnEvent event;
    event.round = r;
    std::vector<std::pair<Slot, NodeId>> by_slot;
    for (NodeId v : victims) {
      // Slot lookup: the slot table of the current snapshot.
      auto pos = std::find(current.nodes.begin(), current.nodes.end(), v);
      by_slot.emplace_back(static_cast<Slot>(pos - current.nodes.begin()), v);
    }
    std::sort(by_slot.begin(), by_slot.end());

    GraphSnapshot next = current;
    next.round = r;
    for (auto [slot, v] : by_slot) {
      const NodeId fresh = next_id++;
      event.removed.push_back(v);
      event.added.push_back(fresh);
      event.slots.push_back(slot);
      next.nodes[slot] = fresh;
      present.erase(v);
      present.insert(fresh);
    }

    if (swaps > 0) {
      bool certified = false;
      for (int attempt = 0; attempt < params.expander.retry_budget && !certified; ++attempt) {
        Rng topo = make_rng(params.seed, Stream::Topology, static_cast<std::uint64_t>(r),
                            static_cast<std::uint64_t>(attempt) + 1);
        auto adj = unflatten(current);
        rewire(adj, swaps, topo);
        next.adjacency = flatten(adj, params.d);
        certified = certify(next, params.lambda_max, params.expander.lambda_tol);
      }
      if (!certified) {
        throw Error(ErrorCode::GenerationExhausted, "could not re-certify topology at round " + std::to_string(r));
      }
    }
    schedule.snapshots_.push_back(next);
    schedule.events_.push_back(std::move(event));
    current = std::move(next);
  }
  schedule.index_membership();
  return schedule;
}

DynamicNetworkSchedule schedule_from_snapshots(std::vector<GraphSnapshot> snapshots) {
  if (snapshots.empty()) throw Error(ErrorCode::InvalidParams, "empty snapshot sequence");
  DynamicNetworkSchedule schedule;
  schedule.params_.n = snapshots.front().size();
  schedule.params_.d = snapshots.front().degree;
  schedule.params_.horizon = static_cast<Round>(snapshots.size());
  schedule.params_.strategy = ChurnStrategy::None;
  for (std::size_t r = 0; r < snapshots.size(); ++r) {
    auto& g = snapshots[r];
    g.round = static_cast<Round>(r);
    if (g.size() != schedule.params_.n || g.degree != schedule.params_.d) {
      throw Error(ErrorCode::InvalidParams, "snapshots must share n and d");
    }
    ChurnEvent event;
    event.round = g.round;
    if (r > 0) {
      const auto& prev = snapshots[r - 1];
      for (Slot s = 0; s < g.size(); ++s) {
        if (prev.nodes[s] != g.nodes[s]) {
          event.removed.push_back(prev.nodes[s]);
          event.added.push_back(g.nodes[s]);
          event.slots.push_back(s);
        }
      }
    }
    schedule.churn_rate_ = std::max<std::uint32_t>(schedule.churn_rate_, static_cast<std::uint32_t>(event.removed.size()));
    schedule.events_.push_back(std::move(event));
  }
  schedule.snapshots_ = std::move(snapshots);
  schedule.index_membership();
  return schedule;
}

RoundView advance(const DynamicNetworkSchedule& schedule, Round r) {
  return RoundView{schedule.snapshot(r), schedule.event(r)};
}

void write_snapshot(std::ostream& out, const GraphSnapshot& g) {
  out << g.round << ' ' << g.size() << ' ' << g.degree << ' ' << g.lambda_bound << '\n';
  for (Slot s = 0; s < g.size(); ++s) {
    for (Slot t : g.neighbors(s)) {
      if (g.nodes[s] < g.nodes[t]) out << g.nodes[s] << ' ' << g.nodes[t] << '\n';
    }
  }
}

void write_schedule(std::ostream& out, const DynamicNetworkSchedule& schedule) {
  for (Round r = 0; r < schedule.horizon(); ++r) write_snapshot(out, schedule.snapshot(r));
}

std::string schedule_digest(const DynamicNetworkSchedule& schedule) {
  std::ostringstream dump;
  write_schedule(dump, schedule);
  return to_hex(sha256(dump.str()));
}

}  // namespace churnstore
