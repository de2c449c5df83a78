#ifndef CHURNSTORE_SCENARIOS_HPP
#define CHURNSTORE_SCENARIOS_HPP

#include <churnstore/simulator.hpp>
#include <churnstore/stats.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace churnstore {

struct AvailabilitySample {
  std::uint32_t task = 0;
  StorageMode mode = StorageMode::Replicate;
  Round round = 0;
  std::uint64_t landmarks = 0;
  bool available = false;
};

struct TrialReport {
  std::uint64_t protocol_seed = 0;
  std::uint64_t adversary_seed = 0;
  std::uint32_t churn_per_round = 0;
  int tree_depth = 0;
  std::uint64_t landmark_cap = 0;
  std::vector<SearchResult> searches;
  std::uint32_t searches_unfinished = 0;
  std::uint32_t stores_failed = 0;  // no candidate storer had enough samples
  std::vector<StorageOutcome> storage;
  std::vector<TaggedHealth> health;
  std::vector<BuildReport> builds;
  std::vector<AvailabilitySample> availability;
  std::map<std::uint64_t, std::uint64_t> volume;
  std::uint64_t node_rounds = 0;
  std::uint64_t queued_node_rounds = 0;
  std::uint32_t max_forwarded = 0;
  std::uint32_t forward_cap = 0;
  std::string metrics_csv;  // filled when requested
};

/// One seeded run: items stored at staggered rounds from random live nodes,
/// each retrieved later by a random live requester (when cfg.retrieve).
TrialReport run_trial(const SimulationConfig& cfg, bool keep_metrics = false);

/// cfg.trials runs; trial i uses seeds (protocol_seed + i, adversary_seed + i).
std::vector<TrialReport> scenario_store_retrieve(const SimulationConfig& cfg, bool keep_metrics = false);
/// The same runs without retrievals.
std::vector<TrialReport> scenario_committee_lifetime(const SimulationConfig& cfg, bool keep_metrics = false);

struct CampaignSummary {
  std::uint64_t searches = 0;
  std::uint64_t successes = 0;
  std::uint32_t unfinished = 0;
  double success_rate = 0.0;
  double median_latency = 0.0;
  double health_good_fraction = 0.0;
  std::uint64_t health_samples = 0;
  std::uint64_t committees = 0;
  std::uint64_t deaths = 0;
  GeometricFit lifetime;
  std::uint64_t builds = 0;
  double builds_in_range = 0.0;
  std::uint64_t cap_violations = 0;
  double availability_fraction = 0.0;
  std::uint64_t reconstruction_failures = 0;
  std::uint64_t p99_units = 0;
  std::uint64_t max_units = 0;
  double queued_fraction = 0.0;
};

/// Aggregates the trials; `mode` restricts committee, build, retrieval and
/// availability figures to items of that mode.
CampaignSummary summarize(const std::vector<TrialReport>& trials, StorageMode mode, std::uint32_t n);
std::vector<Lifetime> lifetimes(const std::vector<TrialReport>& trials, StorageMode mode);

struct SweepRow {
  double rate_scale = 0.0;
  double k = 0.0;
  std::uint32_t churn_per_round = 0;
  CampaignSummary summary;
};
std::vector<SweepRow> scenario_sweep(const SimulationConfig& cfg);

struct SoupOptions {
  std::uint32_t sources = 4;
  std::uint32_t walks = 1'000'000;  // per source
  Round t0 = -1;                    // injection round; -1: T when loaded, else 0
  bool background = false;          // full α load alongside the probes
  std::uint32_t band_sources = 64;
  std::uint32_t band_windows = 1;
};

struct SoupRow {
  NodeId source = kNoNode;
  Round t0 = 0;
  Round t = 0;
  std::uint32_t walks = 0;
  double tv_engine_oracle = 0.0;    // over V^t plus the killed outcome
  double survival_engine = 0.0;
  double survival_oracle = 0.0;
  double tv_oracle_uniform = 0.0;   // exact distribution vs uniform on V^t
  std::uint32_t late = 0;           // probes that queued past round t
};

struct BandResult {
  Round t = 0;
  std::uint32_t window = 0;
  std::uint32_t survivors = 0;
  std::uint64_t pairs = 0;
  std::uint64_t inside = 0;
  double fraction() const { return pairs ? static_cast<double>(inside) / static_cast<double>(pairs) : 0.0; }
};

struct SoupReport {
  std::vector<SoupRow> rows;
  std::vector<BandResult> band;     // walks of 2τ steps over the window
  std::vector<BandResult> band_T;   // walks of T steps ending at the same round
  // Sources of round 0 whose walks lose more than 1/ln^((k-1)/2) n of their
  // mass within τ rounds, as a fraction; compared against `loss_bound`.
  double loss_fraction = 0.0;
  double loss_bound = 0.0;
  double reversibility_error = 0.0;
  std::uint64_t queued_node_rounds = 0;
  std::uint64_t node_rounds = 0;
};

inline constexpr std::uint32_t kProbeSeqBase = 1u << 20;

/// Engine probe histograms against the exact oracle on `schedule`.
SoupReport scenario_soup(const DynamicNetworkSchedule& schedule, const SimulationConfig& cfg, const SoupOptions& opt);

/// Fraction of (s, d) pairs over nodes present throughout [t - window, t]
/// whose exact probability lies in [1/(17n), 3/(2n)] for walks started at
/// t - window (up to `max_sources` sampled sources).
BandResult soup_band(const DynamicNetworkSchedule& schedule, Round t, std::uint32_t window, std::uint32_t max_sources,
                     std::uint64_t seed);

/// CSV output of a trial set under `dir`, plus manifest.txt.
void write_reports(const std::filesystem::path& dir, const SimulationConfig& cfg,
                   const std::vector<TrialReport>& trials);
void write_manifest(const std::filesystem::path& dir, const SimulationConfig& cfg, const std::string& extra = {});

}  // namespace churnstore

#endif  // CHURNSTORE_SCENARIOS_HPP
