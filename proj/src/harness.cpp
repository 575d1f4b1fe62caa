#include "qppg/harness.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qppg {

using Eigen::VectorXd;

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::unique_ptr<Environment> make_env(const ExperimentConfig& cfg, double noise_level, std::uint64_t seed) {
  switch (cfg.env) {
    case EnvKind::Classical:
      return std::make_unique<ClassicalEnv>(seed, classical_env_config(cfg, noise_level));
    case EnvKind::Quantum:
      return std::make_unique<QuantumEnv>(seed, quantum_env_config(cfg, noise_level));
    case EnvKind::Link:
      return std::make_unique<LinkEnv>(seed, link_env_config(cfg, cfg.pilot_snr_db));
  }
  throw std::invalid_argument("unknown environment");
}

GreedyPolicy greedy_policy(const TrainedAgent& agent) {
  return std::visit(
      [](const auto& a) -> GreedyPolicy {
        return [&a](const VectorXd& obs) {
          // Greedy selection never consumes randomness.
          Rng unused(0);
          return a.act(obs, SelectionMode::greedy(), unused);
        };
      },
      agent);
}

namespace {

double run_policy_episode(PolicyAgent& agent, Environment& env, Rng& rng) {
  Trajectory traj;
  VectorXd obs = env.reset();
  for (;;) {
    const Action a = agent.act(obs, SelectionMode::sample(), rng);
    LogProbGrad lg = agent.score(obs, a);
    StepResult res = env.step(a);
    traj.steps.push_back({std::move(obs), a, std::move(lg.grad), res.reward});
    obs = std::move(res.obs);
    if (res.done) break;
  }
  agent.update(traj);
  return traj.total_reward();
}

double run_qdqn_episode(QdqnAgent& agent, Environment& env, Rng& rng) {
  double total = 0.0;
  VectorXd obs = env.reset();
  for (;;) {
    const Action a = agent.act(obs, rng);
    StepResult res = env.step(a);
    total += res.reward;
    agent.observe({obs, a.index, res.reward, res.obs, res.done}, rng);
    obs = std::move(res.obs);
    if (res.done) break;
  }
  agent.end_episode();
  return total;
}

}  // namespace

double success_target(const ExperimentConfig& cfg) {
  if (cfg.env != EnvKind::Link) return cfg.success_threshold;
  Rng rng = make_rng(0, kEvalStream);
  const Estimate cap = ergodic_capacity(link_env_config(cfg, cfg.pilot_snr_db), cfg.capacity_samples, rng);
  return cfg.capacity_fraction * cap.mean * cfg.agent_cfg.horizon;
}

TrainedRun train_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainedRun run;
  RunRecord& rec = run.record;
  rec.seed = seed;
  rec.env = cfg.env;
  rec.agent = cfg.agent;

  auto env = make_env(cfg, cfg.noise_level, seed);
  Rng init_rng = make_rng(seed, kInitStream);
  Rng agent_rng = make_rng(seed, kAgentStream);

  if (cfg.agent == AgentKind::Qdqn) {
    run.agent.emplace(std::in_place_type<QdqnAgent>, env->obs_dim(), env->num_actions(), cfg.agent_cfg,
                      init_rng);
  } else {
    run.agent.emplace(std::in_place_type<PolicyAgent>, cfg.agent,
                      ParamLayout::policy(env->obs_dim(), cfg.width, env->num_actions(),
                                          env->continuous_power()),
                      cfg.agent_cfg, init_rng);
  }

  rec.rewards.reserve(static_cast<size_t>(cfg.episodes));
  try {
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      const double total = std::visit(
          [&](auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, QdqnAgent>) {
              return run_qdqn_episode(a, *env, agent_rng);
            } else {
              return run_policy_episode(a, *env, agent_rng);
            }
          },
          *run.agent);
      if (!std::isfinite(total)) throw DivergenceError("non-finite episode reward");
      rec.rewards.push_back(total);
    }
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.failure = e.what();
  } catch (const SolverError& e) {
    rec.failed = true;
    rec.failure = e.what();
  }

  rec.moving_avg = moving_average(rec.rewards);
  if (!rec.failed) {
    rec.episodes_to_success = episodes_to_success(rec.rewards, success_target(cfg));
    const GreedyPolicy policy = greedy_policy(*run.agent);
    if (cfg.env == EnvKind::Link) {
      for (double snr : {cfg.pilot_snr_db, cfg.degraded_pilot_snr_db}) {
        rec.robustness[snr] = link_throughput_eval(policy, cfg, snr, cfg.eval_episodes, seed);
      }
    } else {
      for (double level : cfg.robustness_levels) {
        rec.robustness[level] =
            robustness_eval(policy, cfg, level, cfg.eval_episodes, seed, cfg.success_threshold);
      }
    }
  }
  return run;
}

std::vector<RunRecord> run_training(const ExperimentConfig& cfg) {
  std::vector<RunRecord> out;
  out.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds) {
    out.push_back(train_seed(cfg, seed).record);
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<size_t>(window)) sum -= series[i - static_cast<size_t>(window)];
    const size_t n = std::min(i + 1, static_cast<size_t>(window));
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

std::optional<int> episodes_to_success(const std::vector<double>& series, double threshold, int window) {
  if (window < 1) throw std::domain_error("window must be positive");
  const auto w = static_cast<size_t>(window);
  if (series.size() < w) return std::nullopt;
  // Direct window sums avoid drift from a running total.
  for (size_t end = w; end <= series.size(); ++end) {
    const double mean =
        std::accumulate(series.begin() + static_cast<std::ptrdiff_t>(end - w),
                        series.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
        static_cast<double>(w);
    if (mean >= threshold) return static_cast<int>(end);
  }
  return std::nullopt;
}

double robustness_eval(const GreedyPolicy& policy, const ExperimentConfig& cfg, double noise_level,
                       int episodes, std::uint64_t seed, double threshold) {
  if (episodes < 1) throw std::domain_error("episodes must be positive");
  auto env = make_env(cfg, noise_level, make_rng(seed, kEvalStream)());
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    VectorXd obs = env->reset();
    double total = 0.0;
    for (;;) {
      StepResult res = env->step(policy(obs));
      total += res.reward;
      obs = std::move(res.obs);
      if (res.done) break;
    }
    if (total >= threshold) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(episodes);
}

double link_throughput_eval(const GreedyPolicy& policy, const ExperimentConfig& cfg, double pilot_snr_db,
                            int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::domain_error("episodes must be positive");
  LinkEnv env(make_rng(seed, kEvalStream)(), link_env_config(cfg, pilot_snr_db));
  double sum = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    VectorXd obs = env.reset();
    for (;;) {
      StepResult res = env.step(policy(obs));
      sum += res.reward;
      obs = std::move(res.obs);
      if (res.done) break;
    }
  }
  return sum / static_cast<double>(episodes);
}

Estimate ergodic_capacity(const LinkEnvConfig& cfg, std::uint64_t samples, Rng& rng) {
  if (samples < 1) throw std::domain_error("need at least one sample");
  std::uniform_real_distribution<double> noise(cfg.sigma2_min, cfg.sigma2_max);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t k = 1; k <= samples; ++k) {
    const double sigma2 = noise(rng);
    const double gain = complex_gaussian(cfg.antennas, 1.0, rng).squaredNorm();
    const double c = std::log2(1.0 + cfg.p_max * gain / sigma2);
    const double delta = c - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (c - mean);
  }
  const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

MetricSummary MetricSummary::of(std::vector<double> values, int censored) {
  MetricSummary m;
  m.values = std::move(values);
  m.censored = censored;
  const auto n = static_cast<double>(m.values.size());
  if (m.values.empty()) return m;
  m.mean = std::accumulate(m.values.begin(), m.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : m.values) ss += (v - m.mean) * (v - m.mean);
  m.stddev = m.values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  m.std_error = m.stddev / std::sqrt(n);
  return m;
}

std::string format_robustness_key(double level) {
  std::ostringstream os;
  os << level;
  return os.str();
}

AgentSummary summarize(const std::vector<RunRecord>& records, int episodes) {
  AgentSummary out;
  if (records.empty()) return out;
  out.agent = to_string(records.front().agent);
  std::vector<double> ets;
  int censored = 0;
  std::map<double, std::vector<double>> robust;
  for (const auto& r : records) {
    if (r.episodes_to_success) {
      ets.push_back(*r.episodes_to_success);
    } else {
      ets.push_back(episodes + 1);
      ++censored;
    }
    for (const auto& [level, value] : r.robustness) robust[level].push_back(value);
  }
  out.episodes_to_success = MetricSummary::of(std::move(ets), censored);
  for (auto& [level, values] : robust) {
    out.robustness[format_robustness_key(level)] = MetricSummary::of(std::move(values));
  }
  return out;
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  nlohmann::json robust = nlohmann::json::array();
  for (const auto& [level, value] : r.robustness) robust.push_back({{"level", level}, {"value", value}});
  j = {{"seed", r.seed},
       {"env", to_string(r.env)},
       {"agent", to_string(r.agent)},
       {"rewards", r.rewards},
       {"episodes_to_success", r.episodes_to_success ? nlohmann::json(*r.episodes_to_success) : nlohmann::json()},
       {"robustness", robust},
       {"failed", r.failed},
       {"failure", r.failure}};
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  j.at("seed").get_to(r.seed);
  r.env = parse_env_kind(j.at("env").get<std::string>());
  r.agent = parse_agent_kind(j.at("agent").get<std::string>());
  j.at("rewards").get_to(r.rewards);
  r.moving_avg = moving_average(r.rewards);
  const auto& ets = j.at("episodes_to_success");
  r.episodes_to_success = ets.is_null() ? std::nullopt : std::optional<int>(ets.get<int>());
  r.robustness.clear();
  for (const auto& e : j.at("robustness")) r.robustness[e.at("level").get<double>()] = e.at("value").get<double>();
  j.at("failed").get_to(r.failed);
  j.at("failure").get_to(r.failure);
}

void to_json(nlohmann::json& j, const MetricSummary& m) {
  j = {{"values", m.values},
       {"mean", m.mean},
       {"std", m.stddev},
       {"stderr", m.std_error},
       {"censored", m.censored}};
}

void from_json(const nlohmann::json& j, MetricSummary& m) {
  j.at("values").get_to(m.values);
  j.at("mean").get_to(m.mean);
  j.at("std").get_to(m.stddev);
  j.at("stderr").get_to(m.std_error);
  j.at("censored").get_to(m.censored);
}

void to_json(nlohmann::json& j, const AgentSummary& a) {
  j = {{"agent", a.agent}, {"episodes_to_success", a.episodes_to_success}, {"robustness", a.robustness}};
}

void from_json(const nlohmann::json& j, AgentSummary& a) {
  j.at("agent").get_to(a.agent);
  j.at("episodes_to_success").get_to(a.episodes_to_success);
  j.at("robustness").get_to(a.robustness);
}

void to_json(nlohmann::json& j, const ExperimentSummary& s) {
  j = {{"env", s.env}, {"episodes", s.episodes}, {"agents", s.agents}};
}

void from_json(const nlohmann::json& j, ExperimentSummary& s) {
  j.at("env").get_to(s.env);
  j.at("episodes").get_to(s.episodes);
  j.at("agents").get_to(s.agents);
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv or json)");
}

std::string rewards_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << "seed,episode,reward,moving_avg\n";
  for (const auto& r : records) {
    for (size_t i = 0; i < r.rewards.size(); ++i) {
      os << r.seed << ',' << (i + 1) << ',' << r.rewards[i] << ',' << r.moving_avg[i] << '\n';
    }
  }
  return os.str();
}

void emit_results(const std::vector<RunRecord>& records, const ExperimentSummary& summary,
                  OutputFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == OutputFormat::Csv) {
    out << rewards_csv(records);
  } else {
    out << nlohmann::json(summary).dump(2) << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace qppg
