// Experiment configuration and its flat `key = value` text format.
#pragma once

#include "qppg/agents.hpp"
#include "qppg/environments.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qppg {

struct ExperimentConfig {
  EnvKind env = EnvKind::Quantum;
  AgentKind agent = AgentKind::Qppg;
  int episodes = 500;
  std::vector<std::uint64_t> seeds = {42, 99, 123, 256, 512};
  /// Quantum env: rate of each Kraus channel. Classical env: noise-event
  /// probability. Unused by the link env.
  double noise_level = 0.03;
  int width = 16;
  AgentConfig agent_cfg;
  std::filesystem::path output_dir = "runs";

  double success_threshold = 9.0;
  int eval_episodes = 100;
  std::vector<double> robustness_levels = {0.05, 0.15};

  int antennas = 4;
  double pilot_snr_db = 10.0;
  double degraded_pilot_snr_db = 5.0;
  double capacity_fraction = 0.95;
  std::uint64_t capacity_samples = 1000000;

  /// Throws std::domain_error when an invariant is violated.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicate
/// keys and malformed values throw std::invalid_argument with the line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config for every field.
std::string to_config_text(const ExperimentConfig& cfg);

QuantumEnvConfig quantum_env_config(const ExperimentConfig& cfg, double noise_level);
ClassicalEnvConfig classical_env_config(const ExperimentConfig& cfg, double noise_level);
LinkEnvConfig link_env_config(const ExperimentConfig& cfg, double pilot_snr_db);

}  // namespace qppg
