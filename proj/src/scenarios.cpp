#include <churnstore/config.hpp>
#include <churnstore/oracle.hpp>
#include <churnstore/random.hpp>
#include <churnstore/scenarios.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef CHURNSTORE_VERSION
#define CHURNSTORE_VERSION "unknown"
#endif

namespace churnstore {

namespace {

struct PlannedItem {
  Round store_round = 0;
  Round retrieve_round = kNever;
  StorageMode mode = StorageMode::Replicate;
  std::uint32_t h = 0;
  std::uint32_t task = 0;
  bool stored = false;
};

NodeId random_present(const DynamicNetworkSchedule& schedule, Round r, Rng& rng) {
  const auto& nodes = schedule.snapshot(r).nodes;
  return nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
}

std::vector<std::uint8_t> make_payload(std::uint32_t index, std::uint32_t bytes, Rng& rng) {
  std::vector<std::uint8_t> out(std::max<std::uint32_t>(bytes, 4));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(index >> (8 * i));
  return out;
}

}  // namespace

TrialReport run_trial(const SimulationConfig& cfg, bool keep_metrics) {
  const DynamicNetworkSchedule schedule = commit_churn_schedule(cfg.schedule_params());
  Simulator sim(schedule, cfg);
  const WalkConfig& wc = sim.walk_config();
  const auto tau = static_cast<Round>(wc.tau);

  TrialReport report;
  report.protocol_seed = cfg.protocol_seed;
  report.adversary_seed = cfg.adversary_seed;
  report.churn_per_round = schedule.churn_rate();
  report.tree_depth = cfg.datastore_params().tree_depth;
  report.landmark_cap = landmark_cap(cfg.n, cfg.h, report.tree_depth);
  report.forward_cap = wc.forward_cap;

  Rng rng = make_rng(cfg.protocol_seed, Stream::Workload);
  Rng payload_rng = make_rng(cfg.protocol_seed, Stream::Payload);
  std::vector<PlannedItem> items;
  const std::uint32_t total = cfg.items + cfg.erasure_items;
  const Round first = 2 * tau;
  const Round tail = cfg.retrieve ? 8 * tau + 1 : 2 * tau;
  const Round span = std::max<Round>(1, cfg.horizon - 1 - tail - first);
  for (std::uint32_t i = 0; i < total; ++i) {
    PlannedItem it;
    it.store_round = first + (total > 1 ? span * i / total : 0);
    const bool erasure = i >= cfg.items || cfg.mode == StorageMode::Erasure;
    it.mode = erasure ? StorageMode::Erasure : StorageMode::Replicate;
    it.h = erasure ? cfg.erasure_h : cfg.h;
    if (cfg.retrieve) {
      it.retrieve_round = it.store_round + 2 * tau + std::uniform_int_distribution<Round>(0, 2 * tau - 1)(rng);
    }
    items.push_back(it);
  }

  std::uint32_t retrievals = 0;
  sim.set_workload([&](Simulator& s, ProtocolContext& ctx) {
    const Round r = ctx.round();
    for (std::uint32_t i = 0; i < items.size(); ++i) {
      PlannedItem& it = items[i];
      if (r == it.store_round) {
        for (int attempt = 0; attempt < 32 && !it.stored; ++attempt) {
          const NodeId u = random_present(schedule, r, rng);
          if (choose_invitees(ctx.samples(u), it.h * wc.log_n).size() < it.h * wc.log_n) continue;
          auto item = DataItem::make(make_payload(i, cfg.payload_bytes, payload_rng), u, r);
          it.task = s.datastore().store(u, std::move(item), it.mode, it.h, ctx);
          it.stored = true;
        }
        if (!it.stored) ++report.stores_failed;
      }
      if (it.stored && r == it.retrieve_round) {
        s.datastore().retrieve(random_present(schedule, r, rng), it.task, ctx);
        ++retrievals;
      }
      if (it.stored && r >= it.store_round + 2 * tau && (r - it.store_round) % tau == 0) {
        std::uint64_t landmarks = 0;
        const bool available = s.datastore().is_available(it.task, r, wc, &landmarks);
        report.availability.push_back({it.task, it.mode, r, landmarks, available});
      }
    }
  });

  std::ostringstream csv;
  if (keep_metrics) write_metrics_header(csv);
  sim.run_until(cfg.horizon - 1, [&](const RoundMetrics& m) {
    report.node_rounds += cfg.n;
    report.queued_node_rounds += m.queued_nodes;
    report.max_forwarded = std::max(report.max_forwarded, m.max_forwarded);
    if (keep_metrics) write_metrics_row(csv, m);
  });

  const Datastore& ds = sim.datastore();
  report.searches = ds.searches();
  report.searches_unfinished = retrievals - static_cast<std::uint32_t>(report.searches.size());
  report.storage = ds.storage_outcomes();
  report.health = ds.health();
  report.builds = ds.builds();
  report.volume = sim.volume_histogram();
  report.metrics_csv = csv.str();
  return report;
}

std::vector<TrialReport> scenario_store_retrieve(const SimulationConfig& cfg, bool keep_metrics) {
  std::vector<TrialReport> out;
  for (std::uint32_t i = 0; i < std::max<std::uint32_t>(cfg.trials, 1); ++i) {
    SimulationConfig c = cfg;
    c.protocol_seed = cfg.protocol_seed + i;
    c.adversary_seed = cfg.adversary_seed + i;
    out.push_back(run_trial(c, keep_metrics));
  }
  return out;
}

std::vector<TrialReport> scenario_committee_lifetime(const SimulationConfig& cfg, bool keep_metrics) {
  SimulationConfig c = cfg;
  c.retrieve = false;
  return scenario_store_retrieve(c, keep_metrics);
}

std::vector<Lifetime> lifetimes(const std::vector<TrialReport>& trials, StorageMode mode) {
  std::vector<Lifetime> out;
  for (const auto& t : trials) {
    for (const auto& s : t.storage) {
      if (s.mode == mode) out.push_back({s.epochs, s.end_round != kNever});
    }
  }
  return out;
}

CampaignSummary summarize(const std::vector<TrialReport>& trials, StorageMode mode, std::uint32_t n) {
  CampaignSummary out;
  std::vector<double> latency;
  std::uint64_t good = 0, available = 0, availability_samples = 0, in_range = 0;
  std::map<std::uint64_t, std::uint64_t> volume;
  std::uint64_t node_rounds = 0, queued = 0;
  const double root_n = std::sqrt(static_cast<double>(n));
  for (const auto& t : trials) {
    std::map<std::uint32_t, StorageMode> mode_of;
    for (const auto& s : t.storage) {
      mode_of[s.task] = s.mode;
      if (s.mode != mode) continue;
      ++out.committees;
      out.deaths += s.end_round != kNever;
      out.reconstruction_failures += s.reconstruction_failures;
    }
    for (const auto& s : t.searches) {
      if (mode_of.at(s.storage_task) != mode) continue;
      ++out.searches;
      if (s.success) {
        ++out.successes;
        latency.push_back(static_cast<double>(s.rounds_elapsed));
      }
    }
    out.unfinished += t.searches_unfinished;
    for (const auto& h : t.health) {
      if (h.mode != mode) continue;
      ++out.health_samples;
      good += h.health.good;
    }
    for (const auto& b : t.builds) {
      if (b.kind != LandmarkKind::Storage || mode_of.at(b.task) != mode) continue;
      ++out.builds;
      if (static_cast<double>(b.set_size) >= root_n && b.set_size <= t.landmark_cap) ++in_range;
      if (b.set_size > t.landmark_cap) ++out.cap_violations;
    }
    for (const auto& a : t.availability) {
      if (a.mode != mode) continue;
      ++availability_samples;
      available += a.available;
    }
    merge_histogram(volume, t.volume);
    node_rounds += t.node_rounds;
    queued += t.queued_node_rounds;
  }
  auto ratio = [](std::uint64_t a, std::uint64_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  out.success_rate = ratio(out.successes, out.searches);
  out.median_latency = latency.empty() ? std::nan("") : median(latency);
  out.health_good_fraction = ratio(good, out.health_samples);
  out.builds_in_range = ratio(in_range, out.builds);
  out.availability_fraction = ratio(available, availability_samples);
  out.lifetime = geometric_fit(lifetimes(trials, mode));
  out.p99_units = histogram_quantile(volume, 0.99);
  out.max_units = volume.empty() ? 0 : volume.rbegin()->first;
  out.queued_fraction = ratio(queued, node_rounds);
  return out;
}

std::vector<SweepRow> scenario_sweep(const SimulationConfig& cfg) {
  std::vector<SweepRow> out;
  for (double k : cfg.sweep_ks) {
    for (double rate : cfg.sweep_rates) {
      SimulationConfig c = cfg;
      c.k = k;
      c.rate_scale = rate;
      SweepRow row;
      row.rate_scale = rate;
      row.k = k;
      row.churn_per_round = churn_per_round(c.n, k, rate);
      row.summary = summarize(scenario_store_retrieve(c), c.mode, c.n);
      out.push_back(row);
    }
  }
  return out;
}

BandResult soup_band(const DynamicNetworkSchedule& schedule, Round t, std::uint32_t window, std::uint32_t max_sources,
                     std::uint64_t seed) {
  BandResult out;
  out.t = t;
  out.window = window;
  const Round t0 = t - static_cast<Round>(window);
  std::vector<NodeId> survivors;
  for (NodeId id : schedule.snapshot(t).nodes) {
    if (schedule.present_throughout(id, t0, t)) survivors.push_back(id);
  }
  std::sort(survivors.begin(), survivors.end());
  out.survivors = static_cast<std::uint32_t>(survivors.size());
  if (survivors.empty()) return out;
  std::vector<NodeId> sources = survivors;
  if (sources.size() > max_sources) {
    Rng rng = make_rng(seed, Stream::Workload, static_cast<std::uint64_t>(t), window);
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(max_sources);
  }
  const auto pi = exact_walk_matrix<double>(schedule, sources, t0, t);
  const double n = schedule.n();
  const double lo = 1.0 / (17.0 * n), hi = 3.0 / (2.0 * n);
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    for (NodeId d : survivors) {
      const double p = pi(schedule.slot_of(d), j);
      ++out.pairs;
      out.inside += p >= lo && p <= hi;
    }
  }
  return out;
}

SoupReport scenario_soup(const DynamicNetworkSchedule& schedule, const SimulationConfig& cfg, const SoupOptions& opt) {
  if (schedule.n() > kOracleMaxNodes) {
    throw Error(ErrorCode::TooLarge, "soup scenario limited to n <= " + std::to_string(kOracleMaxNodes));
  }
  SimulationConfig c = cfg;
  if (!opt.background) {
    c.alpha = 0;
    c.allow_h_override = true;
  }
  WalkConfig wc = c.walk_config();
  if (!opt.background) wc.forward_cap = WalkConfig::kUnlimited;
  const auto T = static_cast<Round>(wc.walk_length);
  const auto tau = static_cast<Round>(wc.tau);
  const Round t0 = opt.t0 >= 0 ? opt.t0 : (opt.background ? T : 0);
  const Round t = t0 + T;
  const Round slack = opt.background ? T : 0;
  if (t + slack >= schedule.horizon()) throw Error(ErrorCode::OutOfHorizon, "schedule too short for the soup window");

  SoupReport report;
  WalkEngine engine(schedule, wc, cfg.protocol_seed);
  Rng rng = make_rng(cfg.protocol_seed, Stream::Workload, 0x50u);
  std::vector<NodeId> sources;
  for (Round r = 0; r <= t0; ++r) {
    const auto stats = engine.step_round(r);
    report.queued_node_rounds += stats.queued_nodes;
    report.node_rounds += schedule.n();
    for (Slot s = 0; s < schedule.n(); ++s) engine.clear_completed(s);
    engine.spawn(r);
  }
  {
    std::vector<NodeId> nodes = schedule.snapshot(t0).nodes;
    std::shuffle(nodes.begin(), nodes.end(), rng);
    nodes.resize(std::min<std::size_t>(nodes.size(), opt.sources));
    sources = nodes;
  }
  for (std::uint32_t i = 0; i < sources.size(); ++i) engine.inject(sources[i], t0, opt.walks, kProbeSeqBase + i * opt.walks);

  const std::size_t slots = schedule.n();
  std::vector<std::vector<std::uint64_t>> arrivals(sources.size(), std::vector<std::uint64_t>(slots, 0));
  std::vector<std::uint32_t> late(sources.size(), 0);
  for (Round r = t0 + 1; r <= t + slack; ++r) {
    const auto stats = engine.step_round(r);
    report.queued_node_rounds += stats.queued_nodes;
    report.node_rounds += schedule.n();
    for (Slot s = 0; s < slots; ++s) {
      for (const auto& tok : engine.completed_at(s)) {
        if (tok.seq() < kProbeSeqBase) continue;
        const std::uint32_t src = (tok.seq() - kProbeSeqBase) / opt.walks;
        if (r == t) {
          ++arrivals[src][s];
        } else {
          ++late[src];
        }
      }
      engine.clear_completed(s);
    }
    engine.spawn(r);
  }

  const double n = schedule.n();
  for (std::uint32_t i = 0; i < sources.size(); ++i) {
    const auto exact = exact_walk_distribution<double>(schedule, sources[i], t0, t);
    std::vector<double> p(slots + 2, 0.0), q(slots + 2, 0.0), uniform(slots, 1.0 / n);
    std::uint64_t arrived = 0;
    for (std::size_t s = 0; s < slots; ++s) {
      p[s] = static_cast<double>(arrivals[i][s]) / opt.walks;
      q[s] = exact.probability[static_cast<Eigen::Index>(s)];
      arrived += arrivals[i][s];
    }
    p[slots] = static_cast<double>(opt.walks - arrived - late[i]) / opt.walks;
    q[slots] = exact.kill_mass;
    p[slots + 1] = static_cast<double>(late[i]) / opt.walks;
    SoupRow row;
    row.source = sources[i];
    row.t0 = t0;
    row.t = t;
    row.walks = opt.walks;
    row.tv_engine_oracle = total_variation(p, q);
    row.survival_engine = static_cast<double>(arrived) / opt.walks;
    row.survival_oracle = 1.0 - exact.kill_mass;
    std::vector<double> dist(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(slots));
    row.tv_oracle_uniform = total_variation(dist, uniform);
    row.late = late[i];
    report.rows.push_back(row);
  }

  for (std::uint32_t w = 0; w < opt.band_windows; ++w) {
    const Round end = std::min<Round>(schedule.horizon() - 1, 2 * tau + static_cast<Round>(w) * tau);
    report.band.push_back(soup_band(schedule, end, static_cast<std::uint32_t>(2 * tau), opt.band_sources, cfg.protocol_seed));
    report.band_T.push_back(soup_band(schedule, end, static_cast<std::uint32_t>(T), opt.band_sources, cfg.protocol_seed));
  }

  // Survival over one mixing window from every node of round 0, and the
  // reversed-schedule origin distribution against the forward computation.
  const Round tr = std::min<Round>(tau, schedule.horizon() - 1);
  const auto& start = schedule.snapshot(0).nodes;
  const auto all = exact_walk_matrix<double>(schedule, start, 0, tr);
  const double threshold = 1.0 / std::pow(std::log(n), (cfg.k - 1.0) / 2.0);
  std::uint64_t exceeding = 0;
  for (Eigen::Index j = 0; j < all.cols(); ++j) exceeding += 1.0 - all.col(j).sum() > threshold;
  report.loss_fraction = static_cast<double>(exceeding) / static_cast<double>(all.cols());
  report.loss_bound = 4.0 * threshold;

  const auto& end_nodes = schedule.snapshot(tr).nodes;
  const NodeId d = end_nodes[std::uniform_int_distribution<std::size_t>(0, end_nodes.size() - 1)(rng)];
  const auto reversed = origin_distribution_reversed<double>(schedule, d, 0, tr);
  Eigen::VectorXd forward = all.row(schedule.slot_of(d)).transpose();
  const double mass = forward.sum();
  if (mass > 0) forward /= mass;
  Eigen::VectorXd by_slot = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(slots));
  for (std::size_t j = 0; j < start.size(); ++j) by_slot[schedule.slot_of(start[j])] = forward[static_cast<Eigen::Index>(j)];
  report.reversibility_error = (by_slot - reversed.probability).cwiseAbs().maxCoeff();
  return report;
}

void write_manifest(const std::filesystem::path& dir, const SimulationConfig& cfg, const std::string& extra) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "manifest.txt").string());
  out << "# churnsim run manifest\ncode_version=" << CHURNSTORE_VERSION << '\n' << dump_config(cfg) << extra;
}

void write_reports(const std::filesystem::path& dir, const SimulationConfig& cfg,
                   const std::vector<TrialReport>& trials) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
    return f;
  };
  auto searches = open("searches.csv");
  searches << "trial,task,storage_task,requester,requested_round,status,success,holder,rounds_elapsed,messages_used\n";
  auto storage = open("storage.csv");
  storage << "trial,task,item_id,mode,h,stored_round,end_round,lost,epochs,reconstruction_failures,fallbacks\n";
  auto health = open("health.csv");
  health << "trial,task,mode,epoch,round,live_members,core_proxy_members,good\n";
  auto builds = open("builds.csv");
  builds << "trial,task,kind,build,round,members,set_size,depth_reached,target_depth,invitations_sent,"
            "invitations_lost,declined\n";
  auto availability = open("availability.csv");
  availability << "trial,task,mode,round,landmarks,available\n";
  auto volume = open("volume.csv");
  volume << "trial,units,node_rounds\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    for (const auto& s : t.searches) {
      searches << i << ',' << s.task << ',' << s.storage_task << ',' << s.requester << ',' << s.requested_round << ','
               << to_string(s.status) << ',' << s.success << ','
               << (s.holder == kNoNode ? std::string("") : std::to_string(s.holder)) << ',' << s.rounds_elapsed
               << ',' << s.messages_used << '\n';
    }
    for (const auto& s : t.storage) {
      storage << i << ',' << s.task << ',' << to_hex(s.item_id) << ',' << to_string(s.mode) << ',' << s.h << ','
              << s.stored_round << ',' << (s.end_round == kNever ? std::string("") : std::to_string(s.end_round))
              << ',' << s.lost << ',' << s.epochs << ',' << s.reconstruction_failures << ',' << s.fallbacks << '\n';
    }
    for (const auto& h : t.health) {
      health << i << ',' << h.task << ',' << to_string(h.mode) << ',' << h.health.epoch << ',' << h.health.round
             << ',' << h.health.live_members << ',' << h.health.core_proxy_members << ',' << h.health.good << '\n';
    }
    for (const auto& b : t.builds) {
      builds << i << ',' << b.task << ',' << (b.kind == LandmarkKind::Storage ? "storage" : "search") << ','
             << b.build << ',' << b.round << ',' << b.members << ',' << b.set_size << ',' << b.depth_reached << ','
             << b.target_depth << ',' << b.invitations_sent << ',' << b.invitations_lost << ',' << b.declined << '\n';
    }
    for (const auto& a : t.availability) {
      availability << i << ',' << a.task << ',' << to_string(a.mode) << ',' << a.round << ',' << a.landmarks << ','
                   << a.available << '\n';
    }
    for (const auto& [units, count] : t.volume) volume << i << ',' << units << ',' << count << '\n';
    if (!t.metrics_csv.empty()) {
      std::ofstream m(dir / ("metrics_trial" + std::to_string(i) + ".csv"));
      m << t.metrics_csv;
    }
  }
  write_manifest(dir, cfg);
}

}  // namespace churnstore
