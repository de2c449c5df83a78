// churnsim: schedule generation, oracle comparison, store/retrieve runs and
// churn sweeps. Flags override values from --config.

#include <churnstore/config.hpp>
#include <churnstore/netgen.hpp>
#include <churnstore/scenarios.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace churnstore;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed_protocol, seed_adversary;
  std::optional<std::string> out, mode;
  std::optional<std::uint32_t> n, trials;
  std::optional<double> k, rate_scale;
  std::optional<Round> rounds;
  std::vector<std::string> set;
};

SimulationConfig resolve(const Flags& f) {
  SimulationConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed_protocol) cfg.protocol_seed = *f.seed_protocol;
  if (f.seed_adversary) cfg.adversary_seed = *f.seed_adversary;
  if (f.out) cfg.out = *f.out;
  if (f.mode) cfg.mode = parse_mode(*f.mode);
  if (f.n) cfg.n = *f.n;
  if (f.trials) cfg.trials = *f.trials;
  if (f.k) cfg.k = *f.k;
  if (f.rate_scale) cfg.rate_scale = *f.rate_scale;
  if (f.rounds) cfg.horizon = *f.rounds;
  return cfg;
}

void print_summary(std::ostream& out, const char* label, const CampaignSummary& s) {
  out << label << ": searches=" << s.searches << " success_rate=" << s.success_rate
      << " median_latency=" << s.median_latency << " unfinished=" << s.unfinished << " committees=" << s.committees
      << " deaths=" << s.deaths << " good_fraction=" << s.health_good_fraction << " builds=" << s.builds
      << " builds_in_range=" << s.builds_in_range << " availability=" << s.availability_fraction
      << " reconstruction_failures=" << s.reconstruction_failures << " lifetime_p=" << s.lifetime.p
      << " lifetime_fit_p=" << s.lifetime.p_value << " p99_units=" << s.p99_units << " max_units=" << s.max_units
      << " queued_fraction=" << s.queued_fraction << '\n';
}

int cmd_gen(const SimulationConfig& cfg) {
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  fs::create_directories(cfg.out);
  std::ofstream dump(fs::path(cfg.out) / "schedule.txt");
  if (!dump) throw Error(ErrorCode::IoError, "cannot write schedule dump");
  write_schedule(dump, schedule);
  const auto digest = schedule_digest(schedule);
  write_manifest(cfg.out, cfg, "schedule_sha256=" + digest + "\n");
  std::cout << "churn_per_round=" << schedule.churn_rate() << " horizon=" << schedule.horizon()
            << " schedule_sha256=" << digest << '\n';
  return 0;
}

int cmd_soup(const SimulationConfig& cfg, const SoupOptions& opt) {
  const auto schedule = commit_churn_schedule(cfg.schedule_params());
  const auto report = scenario_soup(schedule, cfg, opt);
  fs::create_directories(cfg.out);
  std::ofstream csv(fs::path(cfg.out) / "soup.csv");
  csv << "source,t0,t,walks,tv_engine_oracle,survival_engine,survival_oracle,tv_oracle_uniform,late\n";
  for (const auto& r : report.rows) {
    csv << r.source << ',' << r.t0 << ',' << r.t << ',' << r.walks << ',' << r.tv_engine_oracle << ','
        << r.survival_engine << ',' << r.survival_oracle << ',' << r.tv_oracle_uniform << ',' << r.late << '\n';
    std::cout << "source " << r.source << ": tv=" << r.tv_engine_oracle << " survival engine=" << r.survival_engine
              << " oracle=" << r.survival_oracle << " tv_uniform=" << r.tv_oracle_uniform << '\n';
  }
  std::ofstream band(fs::path(cfg.out) / "band.csv");
  band << "t,window,survivors,pairs,inside,fraction\n";
  for (const auto* set : {&report.band, &report.band_T}) {
    for (const auto& b : *set) {
      band << b.t << ',' << b.window << ',' << b.survivors << ',' << b.pairs << ',' << b.inside << ',' << b.fraction()
           << '\n';
      std::cout << "band window=" << b.window << " t=" << b.t << ": " << b.inside << "/" << b.pairs << " pairs inside\n";
    }
  }
  std::cout << "survival: fraction=" << report.loss_fraction << " bound=" << report.loss_bound
            << "\nreversibility max error=" << report.reversibility_error << '\n';
  write_manifest(cfg.out, cfg);
  return 0;
}

int cmd_run(const SimulationConfig& cfg, bool metrics) {
  const auto trials = cfg.scenario == Scenario::CommitteeLifetime ? scenario_committee_lifetime(cfg, metrics)
                                                                  : scenario_store_retrieve(cfg, metrics);
  write_reports(cfg.out, cfg, trials);
  print_summary(std::cout, "replicate", summarize(trials, StorageMode::Replicate, cfg.n));
  print_summary(std::cout, "erasure", summarize(trials, StorageMode::Erasure, cfg.n));
  return 0;
}

int cmd_sweep(const SimulationConfig& cfg) {
  const auto rows = scenario_sweep(cfg);
  fs::create_directories(cfg.out);
  std::ofstream csv(fs::path(cfg.out) / "sweep.csv");
  csv << "rate_scale,k,churn_per_round,searches,success_rate,median_latency,good_fraction,committees,deaths,"
         "builds_in_range,availability,reconstruction_failures,p99_units\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    csv << r.rate_scale << ',' << r.k << ',' << r.churn_per_round << ',' << s.searches << ',' << s.success_rate << ','
        << s.median_latency << ',' << s.health_good_fraction << ',' << s.committees << ',' << s.deaths << ','
        << s.builds_in_range << ',' << s.availability_fraction << ',' << s.reconstruction_failures << ','
        << s.p99_units << '\n';
    std::cout << "rate_scale=" << r.rate_scale << " k=" << r.k << " churn=" << r.churn_per_round
              << " success=" << s.success_rate << " good=" << s.health_good_fraction << '\n';
  }
  write_manifest(cfg.out, cfg);
  return 0;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::map<std::string, std::string>> rows;
  if (!in) return rows;
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) return rows;
  header = split(line);
  while (std::getline(in, line)) {
    auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_report(const std::vector<std::string>& dirs) {
  std::cout << "dir,mode,searches,success_rate,median_latency,health_samples,good_fraction,committees,deaths,"
               "p99_units\n";
  for (const auto& dir : dirs) {
    std::map<std::string, std::string> mode_of;
    std::map<std::string, std::uint64_t> committees, deaths;
    for (auto& r : read_csv(fs::path(dir) / "storage.csv")) {
      mode_of[r["trial"] + "/" + r["task"]] = r["mode"];
      ++committees[r["mode"]];
      deaths[r["mode"]] += !r["end_round"].empty();
    }
    std::map<std::string, std::vector<double>> latency;
    std::map<std::string, std::uint64_t> searches, good, samples;
    for (auto& r : read_csv(fs::path(dir) / "searches.csv")) {
      const auto& mode = mode_of[r["trial"] + "/" + r["storage_task"]];
      ++searches[mode];
      if (r["success"] == "1") latency[mode].push_back(std::stod(r["rounds_elapsed"]));
    }
    for (auto& r : read_csv(fs::path(dir) / "health.csv")) {
      ++samples[r["mode"]];
      good[r["mode"]] += r["good"] == "1";
    }
    std::map<std::uint64_t, std::uint64_t> volume;
    for (auto& r : read_csv(fs::path(dir) / "volume.csv")) volume[std::stoull(r["units"])] += std::stoull(r["node_rounds"]);
    if (committees.empty() && searches.empty()) throw Error(ErrorCode::IoError, "no run CSVs under " + dir);
    for (const char* mode : {"replicate", "erasure"}) {
      if (!committees.count(mode)) continue;
      const double rate = searches[mode] ? static_cast<double>(latency[mode].size()) / searches[mode] : 0.0;
      const double good_fraction = samples[mode] ? static_cast<double>(good[mode]) / samples[mode] : 0.0;
      std::cout << dir << ',' << mode << ',' << searches[mode] << ',' << rate << ',' << median(latency[mode]) << ','
                << samples[mode] << ',' << good_fraction << ',' << committees[mode] << ',' << deaths[mode] << ','
                << histogram_quantile(volume, 0.99) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage and search simulator for dynamic networks under churn"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "key=value configuration file");
    sub->add_option("--seed-protocol", flags.seed_protocol, "protocol RNG seed");
    sub->add_option("--seed-adversary", flags.seed_adversary, "adversary RNG seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--n", flags.n, "number of nodes");
    sub->add_option("--k", flags.k, "churn exponent k > 1");
    sub->add_option("--rate-scale", flags.rate_scale, "churn per round = rate_scale * n / ln^k n");
    sub->add_option("--rounds", flags.rounds, "horizon in rounds");
    sub->add_option("--trials", flags.trials, "independent seeded trials");
    sub->add_option("--mode", flags.mode, "replicate or erasure");
    sub->add_option("--set", flags.set, "extra key=value overrides")->take_all();
  };
  auto* gen = app.add_subcommand("gen", "commit a churn schedule and dump it");
  auto* soup = app.add_subcommand("soup", "compare engine walks with the exact oracle");
  auto* run = app.add_subcommand("run", "store and retrieve items under churn");
  auto* sweep = app.add_subcommand("sweep", "store/retrieve over a grid of churn rates");
  auto* report = app.add_subcommand("report", "aggregate the CSVs of earlier runs");
  for (auto* sub : {gen, soup, run, sweep}) add_common(sub);

  SoupOptions soup_opt;
  soup->add_option("--sources", soup_opt.sources, "probe sources");
  soup->add_option("--walks", soup_opt.walks, "probe walks per source");
  soup->add_flag("--background", soup_opt.background, "run the full walk load alongside the probes");
  bool metrics = false;
  run->add_flag("--metrics", metrics, "write per-round metrics CSVs");
  std::vector<std::string> dirs;
  report->add_option("dirs", dirs, "run output directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*report) return cmd_report(dirs);
    const SimulationConfig cfg = resolve(flags);
    if (*gen) return cmd_gen(cfg);
    if (*soup) return cmd_soup(cfg, soup_opt);
    if (*run) return cmd_run(cfg, metrics);
    if (*sweep) return cmd_sweep(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2 + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
