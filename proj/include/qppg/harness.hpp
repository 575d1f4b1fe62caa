// Experiment orchestration: per-seed training, success and robustness
// metrics, the ergodic-capacity estimate, and result files.
#pragma once

#include "qppg/agents.hpp"
#include "qppg/config.hpp"
#include "qppg/environments.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qppg {

inline constexpr int kMovingAverageWindow = 25;

/// Independent RNG stream for (seed, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

enum Stream : std::uint64_t { kEnvStream = 1, kAgentStream = 2, kInitStream = 3, kEvalStream = 4 };

std::unique_ptr<Environment> make_env(const ExperimentConfig& cfg, double noise_level,
                                      std::uint64_t seed);

using TrainedAgent = std::variant<PolicyAgent, QdqnAgent>;

/// Greedy (deterministic) action for evaluation.
using GreedyPolicy = std::function<Action(const Eigen::VectorXd&)>;
GreedyPolicy greedy_policy(const TrainedAgent& agent);

struct RunRecord {
  std::uint64_t seed = 0;
  EnvKind env = EnvKind::Quantum;
  AgentKind agent = AgentKind::Qppg;
  std::vector<double> rewards;
  std::vector<double> moving_avg;
  std::optional<int> episodes_to_success;
  /// noise level (quantum/classical) or pilot SNR in dB (link) -> metric
  std::map<double, double> robustness;
  bool failed = false;
  std::string failure;
  bool operator==(const RunRecord&) const = default;
};

struct TrainedRun {
  RunRecord record;
  std::optional<TrainedAgent> agent;
};

/// Trains one seed from a fresh environment and agent. Divergence marks the
/// record failed and keeps the episodes completed so far.
TrainedRun train_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Episode-return target used for episodes_to_success: the configured
/// success threshold, or for the link env capacity_fraction * horizon *
/// ergodic capacity.
double success_target(const ExperimentConfig& cfg);

/// train_seed over every configured seed, in seed order.
std::vector<RunRecord> run_training(const ExperimentConfig& cfg);

/// Trailing mean over min(window, n) most recent episodes.
std::vector<double> moving_average(const std::vector<double>& series, int window = kMovingAverageWindow);

/// Smallest 1-based n >= window with mean(series[n-window+1 .. n]) >= threshold.
std::optional<int> episodes_to_success(const std::vector<double>& series, double threshold = 9.0,
                                       int window = kMovingAverageWindow);

/// Fraction of greedy episodes whose total reward reaches `threshold`.
/// Environment noise and collapse stay active.
double robustness_eval(const GreedyPolicy& policy, const ExperimentConfig& cfg, double noise_level,
                       int episodes, std::uint64_t seed, double threshold = 9.0);

/// Mean greedy episode return on the link env at the given pilot SNR.
double link_throughput_eval(const GreedyPolicy& policy, const ExperimentConfig& cfg,
                            double pilot_snr_db, int episodes, std::uint64_t seed);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo E[log2(1 + p_max ||h||^2 / sigma2)] over the link env's
/// channel and noise-variance distributions.
Estimate ergodic_capacity(const LinkEnvConfig& cfg, std::uint64_t samples, Rng& rng);

struct MetricSummary {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;     // sample standard deviation across seeds
  double std_error = 0.0;  // stddev / sqrt(n)
  int censored = 0;      // seeds that never reached the target

  static MetricSummary of(std::vector<double> values, int censored = 0);
  bool operator==(const MetricSummary&) const = default;
};

struct AgentSummary {
  std::string agent;
  MetricSummary episodes_to_success;
  std::map<std::string, MetricSummary> robustness;
  bool operator==(const AgentSummary&) const = default;
};

struct ExperimentSummary {
  std::string env;
  int episodes = 0;
  std::vector<AgentSummary> agents;
  bool operator==(const ExperimentSummary&) const = default;
};

/// Per-agent aggregation. Seeds that never succeed count as episodes + 1.
AgentSummary summarize(const std::vector<RunRecord>& records, int episodes);

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);
void to_json(nlohmann::json& j, const MetricSummary& m);
void from_json(const nlohmann::json& j, MetricSummary& m);
void to_json(nlohmann::json& j, const AgentSummary& a);
void from_json(const nlohmann::json& j, AgentSummary& a);
void to_json(nlohmann::json& j, const ExperimentSummary& s);
void from_json(const nlohmann::json& j, ExperimentSummary& s);

enum class OutputFormat { Csv, Json };
OutputFormat parse_format(const std::string& name);

/// `seed,episode,reward,moving_avg` rows.
std::string rewards_csv(const std::vector<RunRecord>& records);

/// Writes rewards CSV or the JSON summary to `path`; failures throw
/// std::runtime_error naming the path.
void emit_results(const std::vector<RunRecord>& records, const ExperimentSummary& summary,
                  OutputFormat format, const std::filesystem::path& path);

std::string format_robustness_key(double level);

}  // namespace qppg
