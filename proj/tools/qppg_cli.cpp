// Command-line front end: train, evaluate saved parameters, estimate the
// ergodic capacity and aggregate run directories.
#include "qppg/harness.hpp"
#include "qppg/params_io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace qppg;

namespace {

constexpr const char* kRecordsFile = "records.json";
constexpr const char* kConfigFile = "config.txt";

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<double> noise;
};

ExperimentConfig load_with_overrides(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) cfg.seeds = {*opt.seed};
  if (opt.noise) cfg.noise_level = *opt.noise;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ParamFile param_file_of(const TrainedAgent& agent) {
  if (const auto* q = std::get_if<QdqnAgent>(&agent)) {
    std::vector<ParamEntry> entries{{"embed", static_cast<std::uint32_t>(kEmbedParams), 1}};
    for (auto& e : entries_of(q->head_layout())) entries.push_back(e);
    return {entries, q->params()};
  }
  const auto& p = std::get<PolicyAgent>(agent);
  return {entries_of(p.layout()), p.params()};
}

// Rebuilds an agent of the configured kind and loads `file` into it.
TrainedAgent agent_from_file(const ExperimentConfig& cfg, const ParamFile& file) {
  const auto env = make_env(cfg, cfg.noise_level, 0);
  Rng unused(0);
  TrainedAgent agent = [&]() -> TrainedAgent {
    if (cfg.agent == AgentKind::Qdqn) return QdqnAgent(env->obs_dim(), env->num_actions(), cfg.agent_cfg, unused);
    return PolicyAgent(cfg.agent,
                       ParamLayout::policy(env->obs_dim(), cfg.width, env->num_actions(), env->continuous_power()),
                       cfg.agent_cfg, unused);
  }();
  if (param_file_of(agent).entries != file.entries) {
    throw std::runtime_error("parameter layout does not match the configured agent and environment");
  }
  std::visit([&](auto& a) { a.set_params(file.values); }, agent);
  return agent;
}

void print_summary(const ExperimentSummary& summary, OutputFormat format) {
  if (format == OutputFormat::Json) {
    std::cout << nlohmann::json(summary).dump(2) << '\n';
    return;
  }
  std::cout << "agent,metric,mean,std,stderr,censored,n\n";
  for (const auto& a : summary.agents) {
    const auto row = [&](const std::string& metric, const MetricSummary& m) {
      std::cout << a.agent << ',' << metric << ',' << m.mean << ',' << m.stddev << ',' << m.std_error << ','
                << m.censored << ',' << m.values.size() << '\n';
    };
    row("episodes_to_success", a.episodes_to_success);
    for (const auto& [level, m] : a.robustness) row("robustness@" + level, m);
  }
}

int cmd_train(const CommonOptions& opt) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const OutputFormat format = parse_format(opt.format);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  std::vector<RunRecord> records;
  for (auto seed : cfg.seeds) {
    TrainedRun run = train_seed(cfg, seed);
    if (run.record.failed) std::cerr << "seed " << seed << " failed: " << run.record.failure << '\n';
    if (run.agent && !run.record.failed) {
      save_params(dir / ("seed_" + std::to_string(seed) + ".params"), param_file_of(*run.agent));
    }
    records.push_back(std::move(run.record));
  }

  ExperimentSummary summary{to_string(cfg.env), cfg.episodes, {summarize(records, cfg.episodes)}};
  emit_results(records, summary, OutputFormat::Csv, dir / "rewards.csv");
  emit_results(records, summary, OutputFormat::Json, dir / "summary.json");
  write_text(dir / kRecordsFile, nlohmann::json(records).dump(2) + "\n");
  write_text(dir / kConfigFile, to_config_text(cfg));
  print_summary(summary, format);
  return 0;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& params_path, int episodes) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const OutputFormat format = parse_format(opt.format);
  const TrainedAgent agent = agent_from_file(cfg, load_params(params_path));
  const GreedyPolicy policy = greedy_policy(agent);
  const std::uint64_t seed = cfg.seeds.front();
  const int n = episodes > 0 ? episodes : cfg.eval_episodes;

  std::map<double, double> results;
  std::string metric;
  if (cfg.env == EnvKind::Link) {
    metric = "throughput";
    for (double snr : {cfg.pilot_snr_db, cfg.degraded_pilot_snr_db}) {
      results[snr] = link_throughput_eval(policy, cfg, snr, n, seed);
    }
  } else {
    metric = "success_fraction";
    const std::vector<double> levels = opt.noise ? std::vector<double>{*opt.noise} : cfg.robustness_levels;
    for (double level : levels) results[level] = robustness_eval(policy, cfg, level, n, seed, cfg.success_threshold);
  }

  const std::string key = cfg.env == EnvKind::Link ? "pilot_snr_db" : "noise_level";
  if (format == OutputFormat::Json) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [level, value] : results) j.push_back({{key, level}, {metric, value}});
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << key << ',' << metric << '\n';
    for (const auto& [level, value] : results) std::cout << level << ',' << value << '\n';
  }
  return 0;
}

int cmd_capacity(const CommonOptions& opt, std::optional<std::uint64_t> samples) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const OutputFormat format = parse_format(opt.format);
  Rng rng = make_rng(opt.seed.value_or(0), kEvalStream);
  const LinkEnvConfig link = link_env_config(cfg, cfg.pilot_snr_db);
  const Estimate est = ergodic_capacity(link, samples.value_or(cfg.capacity_samples), rng);
  std::cout.precision(10);
  if (format == OutputFormat::Json) {
    std::cout << nlohmann::json{{"antennas", link.antennas}, {"capacity", est.mean}, {"stderr", est.std_error}}.dump(2)
              << '\n';
  } else {
    std::cout << "antennas,capacity,stderr\n" << link.antennas << ',' << est.mean << ',' << est.std_error << '\n';
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& format_name, const std::string& out) {
  const OutputFormat format = parse_format(format_name);
  std::vector<std::string> order;
  std::map<std::string, std::vector<RunRecord>> by_agent;
  std::optional<std::string> env;
  int episodes = 0;
  for (const auto& d : dirs) {
    const ExperimentConfig cfg = load_config(fs::path(d) / kConfigFile);
    const auto records = nlohmann::json::parse(read_text(fs::path(d) / kRecordsFile)).get<std::vector<RunRecord>>();
    if (env && *env != to_string(cfg.env)) throw std::runtime_error("run directories mix environments");
    env = to_string(cfg.env);
    if (episodes != 0 && episodes != cfg.episodes) throw std::runtime_error("run directories mix episode budgets");
    episodes = cfg.episodes;
    for (const auto& r : records) {
      const std::string name = to_string(r.agent);
      if (!by_agent.count(name)) order.push_back(name);
      by_agent[name].push_back(r);
    }
  }
  ExperimentSummary summary{env.value_or(""), episodes, {}};
  for (const auto& name : order) summary.agents.push_back(summarize(by_agent[name], episodes));

  if (out.empty()) {
    print_summary(summary, format);
  } else {
    std::vector<RunRecord> all;
    for (const auto& name : order) all.insert(all.end(), by_agent[name].begin(), by_agent[name].end());
    emit_results(all, summary, format, out);
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_out) {
  cmd->add_option("--config", opt.config, "experiment config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opt.seed, "use this seed instead of the configured list");
  if (with_out) cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--noise", opt.noise, "noise level override")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-preconditioned policy gradient experiments"};
  app.require_subcommand(1);

  CommonOptions train_opt;
  auto* train = app.add_subcommand("train", "train the configured agent on every seed");
  add_common(train, train_opt, true);

  CommonOptions eval_opt;
  std::string params_path;
  int eval_episodes = 0;
  auto* evaluate = app.add_subcommand("evaluate", "greedy robustness or throughput of saved parameters");
  add_common(evaluate, eval_opt, false);
  evaluate->add_option("--params", params_path, "parameter file written by train")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--episodes", eval_episodes, "evaluation episodes (default from config)");

  CommonOptions cap_opt;
  std::optional<std::uint64_t> samples;
  auto* capacity = app.add_subcommand("capacity", "Monte Carlo ergodic capacity of the link environment");
  add_common(capacity, cap_opt, false);
  capacity->add_option("--samples", samples, "Monte Carlo samples (default from config)");

  std::vector<std::string> dirs;
  std::string report_format = "json";
  std::string report_out;
  auto* report = app.add_subcommand("report", "aggregate summaries from run directories");
  report->add_option("dirs", dirs, "run directories written by train")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", report_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--out", report_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_opt);
    if (*evaluate) return cmd_evaluate(eval_opt, params_path, eval_episodes);
    if (*capacity) return cmd_capacity(cap_opt, samples);
    if (*report) return cmd_report(dirs, report_format, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
