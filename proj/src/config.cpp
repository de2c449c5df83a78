#include <churnstore/config.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace churnstore {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ConfigError, "bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error(ErrorCode::ConfigError, "bad boolean '" + std::string(value) + "' for " + std::string(key));
}

}  // namespace

void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "n") cfg.n = number<std::uint32_t>(key, value);
  else if (key == "d") cfg.d = number<std::uint32_t>(key, value);
  else if (key == "lambda_max") cfg.lambda_max = number<double>(key, value);
  else if (key == "k") cfg.k = number<double>(key, value);
  else if (key == "rate_scale") cfg.rate_scale = number<double>(key, value);
  else if (key == "strategy") cfg.strategy = parse_strategy(value);
  else if (key == "rewire_fraction") cfg.rewire_fraction = number<double>(key, value);
  else if (key == "horizon" || key == "rounds") cfg.horizon = number<Round>(key, value);
  else if (key == "alpha") cfg.alpha = number<std::uint32_t>(key, value);
  else if (key == "h") cfg.h = number<std::uint32_t>(key, value);
  else if (key == "m") cfg.m = number<double>(key, value);
  else if (key == "epsilon") cfg.epsilon = number<double>(key, value);
  else if (key == "allow_h_override") cfg.allow_h_override = boolean(key, value);
  else if (key == "cap_mode") cfg.cap_mode = parse_cap_mode(value);
  else if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "scenario") cfg.scenario = parse_scenario(value);
  else if (key == "trials") cfg.trials = number<std::uint32_t>(key, value);
  else if (key == "protocol_seed") cfg.protocol_seed = number<std::uint64_t>(key, value);
  else if (key == "adversary_seed") cfg.adversary_seed = number<std::uint64_t>(key, value);
  else if (key == "out") cfg.out = std::string(value);
  else if (key == "budget_scale") cfg.budget_scale = number<double>(key, value);
  else if (key == "enforce_budget") cfg.enforce_budget = boolean(key, value);
  else if (key == "availability_threshold") cfg.availability_threshold = number<double>(key, value);
  else if (key == "tree_depth") cfg.tree_depth = number<int>(key, value);
  else if (key == "search_lifetime") cfg.search_lifetime = number<std::uint32_t>(key, value);
  else if (key == "items") cfg.items = number<std::uint32_t>(key, value);
  else if (key == "erasure_items") cfg.erasure_items = number<std::uint32_t>(key, value);
  else if (key == "erasure_h") cfg.erasure_h = number<std::uint32_t>(key, value);
  else if (key == "payload_bytes") cfg.payload_bytes = number<std::uint32_t>(key, value);
  else if (key == "retrieve") cfg.retrieve = boolean(key, value);
  else if (key == "sweep_rates") cfg.sweep_rates = parse_list(value);
  else if (key == "sweep_ks") cfg.sweep_ks = parse_list(value);
  else throw Error(ErrorCode::ConfigError, "unknown key '" + std::string(key) + "'");
}

SimulationConfig load_config(const std::filesystem::path& path, SimulationConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  int number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(number_of_line) + ": expected key=value");
    }
    apply_setting(base, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(number<double>("list", trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string dump_config(const SimulationConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  auto list = [](const std::vector<double>& v) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
  };
  out << "n=" << cfg.n << "\nd=" << cfg.d << "\nlambda_max=" << cfg.lambda_max << "\nk=" << cfg.k
      << "\nrate_scale=" << cfg.rate_scale << "\nstrategy=" << to_string(cfg.strategy)
      << "\nrewire_fraction=" << cfg.rewire_fraction << "\nhorizon=" << cfg.horizon << "\nalpha=" << cfg.alpha
      << "\nh=" << cfg.h << "\nm=" << cfg.m << "\nepsilon=" << cfg.epsilon
      << "\nallow_h_override=" << cfg.allow_h_override << "\ncap_mode=" << to_string(cfg.cap_mode)
      << "\nmode=" << to_string(cfg.mode) << "\nscenario=" << to_string(cfg.scenario) << "\ntrials=" << cfg.trials
      << "\nprotocol_seed=" << cfg.protocol_seed << "\nadversary_seed=" << cfg.adversary_seed << "\nout=" << cfg.out
      << "\nbudget_scale=" << cfg.budget_scale << "\nenforce_budget=" << cfg.enforce_budget
      << "\navailability_threshold=" << cfg.availability_threshold  << "\ntree_depth=" << cfg.tree_depth << "\nsearch_lifetime=" << cfg.search_lifetime
      << "\nitems=" << cfg.items << "\nerasure_items=" << cfg.erasure_items << "\nerasure_h=" << cfg.erasure_h
      << "\npayload_bytes=" << cfg.payload_bytes << "\nretrieve=" << cfg.retrieve
      << "\nsweep_rates=" << list(cfg.sweep_rates) << "\nsweep_ks=" << list(cfg.sweep_ks) << '\n';
  return out.str();
}

}  // namespace churnstore
