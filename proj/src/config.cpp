#include "qppg/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qppg {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& v) {
  size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: " + v);
  return x;
}

long long to_int(const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not an integer: " + v);
  return x;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("not a nonnegative integer: " + v);
  }
  return x;
}

// Shortest text that parses back to the same double.
std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string solve_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::Dense:
      return "dense";
    case SolveMethod::ConjugateGradient:
      return "cg";
    case SolveMethod::Auto:
      return "auto";
  }
  return "auto";
}

SolveMethod parse_solve(const std::string& v) {
  if (v == "dense") return SolveMethod::Dense;
  if (v == "cg") return SolveMethod::ConjugateGradient;
  if (v == "auto") return SolveMethod::Auto;
  throw std::invalid_argument("unknown solver: " + v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"env", {[](auto& c, const auto& v) { c.env = parse_env_kind(v); },
               [](const auto& c) { return to_string(c.env); }}},
      {"agent", {[](auto& c, const auto& v) { c.agent = parse_agent_kind(v); },
                 [](const auto& c) { return to_string(c.agent); }}},
      {"episodes", {[](auto& c, const auto& v) { c.episodes = static_cast<int>(to_int(v)); },
                    [](const auto& c) { return std::to_string(c.episodes); }}},
      {"seeds", {[](auto& c, const auto& v) {
                   c.seeds.clear();
                   for (const auto& s : split_list(v)) c.seeds.push_back(to_uint(s));
                 },
                 [](const auto& c) {
                   std::string out;
                   for (size_t i = 0; i < c.seeds.size(); ++i) {
                     out += (i ? "," : "") + std::to_string(c.seeds[i]);
                   }
                   return out;
                 }}},
      {"noise_level", {[](auto& c, const auto& v) { c.noise_level = to_double(v); },
                       [](const auto& c) { return format_double(c.noise_level); }}},
      {"width", {[](auto& c, const auto& v) { c.width = static_cast<int>(to_int(v)); },
                 [](const auto& c) { return std::to_string(c.width); }}},
      {"alpha", {[](auto& c, const auto& v) { c.agent_cfg.alpha = to_double(v); },
                 [](const auto& c) { return format_double(c.agent_cfg.alpha); }}},
      {"gamma", {[](auto& c, const auto& v) { c.agent_cfg.gamma = to_double(v); },
                 [](const auto& c) { return format_double(c.agent_cfg.gamma); }}},
      {"xi", {[](auto& c, const auto& v) { c.agent_cfg.xi = to_double(v); },
              [](const auto& c) { return format_double(c.agent_cfg.xi); }}},
      {"horizon", {[](auto& c, const auto& v) { c.agent_cfg.horizon = static_cast<int>(to_int(v)); },
                   [](const auto& c) { return std::to_string(c.agent_cfg.horizon); }}},
      {"epsilon_start", {[](auto& c, const auto& v) { c.agent_cfg.epsilon_start = to_double(v); },
                         [](const auto& c) { return format_double(c.agent_cfg.epsilon_start); }}},
      {"epsilon_end", {[](auto& c, const auto& v) { c.agent_cfg.epsilon_end = to_double(v); },
                       [](const auto& c) { return format_double(c.agent_cfg.epsilon_end); }}},
      {"epsilon_decay", {[](auto& c, const auto& v) { c.agent_cfg.epsilon_decay = to_double(v); },
                         [](const auto& c) { return format_double(c.agent_cfg.epsilon_decay); }}},
      {"target_sync", {[](auto& c, const auto& v) {
                         c.agent_cfg.target_sync_episodes = static_cast<int>(to_int(v));
                       },
                       [](const auto& c) { return std::to_string(c.agent_cfg.target_sync_episodes); }}},
      {"replay_capacity", {[](auto& c, const auto& v) { c.agent_cfg.replay_capacity = to_uint(v); },
                           [](const auto& c) { return std::to_string(c.agent_cfg.replay_capacity); }}},
      {"batch_size", {[](auto& c, const auto& v) { c.agent_cfg.batch_size = to_uint(v); },
                      [](const auto& c) { return std::to_string(c.agent_cfg.batch_size); }}},
      {"solver", {[](auto& c, const auto& v) { c.agent_cfg.solve = parse_solve(v); },
                  [](const auto& c) { return solve_name(c.agent_cfg.solve); }}},
      {"npg_rel_cutoff", {[](auto& c, const auto& v) { c.agent_cfg.npg_rel_cutoff = to_double(v); },
                          [](const auto& c) { return format_double(c.agent_cfg.npg_rel_cutoff); }}},
      {"output_dir", {[](auto& c, const auto& v) { c.output_dir = v; },
                      [](const auto& c) { return c.output_dir.string(); }}},
      {"success_threshold", {[](auto& c, const auto& v) { c.success_threshold = to_double(v); },
                             [](const auto& c) { return format_double(c.success_threshold); }}},
      {"eval_episodes", {[](auto& c, const auto& v) { c.eval_episodes = static_cast<int>(to_int(v)); },
                         [](const auto& c) { return std::to_string(c.eval_episodes); }}},
      {"robustness_levels", {[](auto& c, const auto& v) {
                               c.robustness_levels.clear();
                               for (const auto& s : split_list(v)) c.robustness_levels.push_back(to_double(s));
                             },
                             [](const auto& c) {
                               std::string out;
                               for (size_t i = 0; i < c.robustness_levels.size(); ++i) {
                                 out += (i ? "," : "") + format_double(c.robustness_levels[i]);
                               }
                               return out;
                             }}},
      {"antennas", {[](auto& c, const auto& v) { c.antennas = static_cast<int>(to_int(v)); },
                    [](const auto& c) { return std::to_string(c.antennas); }}},
      {"pilot_snr_db", {[](auto& c, const auto& v) { c.pilot_snr_db = to_double(v); },
                        [](const auto& c) { return format_double(c.pilot_snr_db); }}},
      {"degraded_pilot_snr_db", {[](auto& c, const auto& v) { c.degraded_pilot_snr_db = to_double(v); },
                                 [](const auto& c) { return format_double(c.degraded_pilot_snr_db); }}},
      {"capacity_fraction", {[](auto& c, const auto& v) { c.capacity_fraction = to_double(v); },
                             [](const auto& c) { return format_double(c.capacity_fraction); }}},
      {"capacity_samples", {[](auto& c, const auto& v) { c.capacity_samples = to_uint(v); },
                            [](const auto& c) { return std::to_string(c.capacity_samples); }}},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (episodes < 1) throw std::domain_error("episodes must be at least 1");
  if (seeds.empty()) throw std::domain_error("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::domain_error("seeds must be distinct");
  }
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) throw std::domain_error("noise_level must lie in [0, 1]");
  if (width < 1) throw std::domain_error("width must be positive");
  if (eval_episodes < 1) throw std::domain_error("eval_episodes must be positive");
  if (antennas < 1) throw std::domain_error("antennas must be positive");
  if (!(capacity_fraction > 0.0 && capacity_fraction <= 1.0)) {
    throw std::domain_error("capacity_fraction must lie in (0, 1]");
  }
  if (capacity_samples < 1) throw std::domain_error("capacity_samples must be positive");
  if (agent == AgentKind::Qdqn && env == EnvKind::Link) {
    throw std::domain_error("the Q-DQN agent has no continuous power head for the link env");
  }
  agent_cfg.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, const Field*> lookup;
  for (const auto& [name, field] : fields()) lookup[name] = &field;

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      it->second->set(cfg, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": bad value for '" + key +
                                  "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    out += name + " = " + field.get(cfg) + "\n";
  }
  return out;
}

QuantumEnvConfig quantum_env_config(const ExperimentConfig& cfg, double noise_level) {
  QuantumEnvConfig q;
  q.horizon = cfg.agent_cfg.horizon;
  q.noise_level = noise_level;
  return q;
}

ClassicalEnvConfig classical_env_config(const ExperimentConfig& cfg, double noise_level) {
  ClassicalEnvConfig c;
  c.horizon = cfg.agent_cfg.horizon;
  c.noise_prob = noise_level;
  return c;
}

LinkEnvConfig link_env_config(const ExperimentConfig& cfg, double pilot_snr_db) {
  LinkEnvConfig l;
  l.horizon = cfg.agent_cfg.horizon;
  l.antennas = cfg.antennas;
  l.pilot_snr_db = pilot_snr_db;
  return l;
}

}  // namespace qppg
