#include "acmptc_cli/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "acmptc/checkpoint.hpp"
#include "acmptc/config.hpp"
#include "acmptc/drl.hpp"
#include "acmptc/error.hpp"
#include "acmptc/export.hpp"
#include "acmptc/sim_engine.hpp"

namespace acmptc::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kGradcheckTolerance = 1e-4;

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Common {
  std::string config_path;
  std::string out_dir;
  bool explain = false;
};

std::string config_text(const Common& c) { return c.config_path.empty() ? std::string() : read_file(c.config_path); }

// --seed, then ACMPTC_SEED, then dynamics.seed from the config.
std::uint64_t resolve_seed(const std::optional<std::string>& flag, const ScenarioConfig& cfg) {
  if (flag) return parse_u64(*flag, "seed");
  if (const char* env = std::getenv("ACMPTC_SEED"); env && *env) return parse_u64(env, "ACMPTC_SEED");
  return cfg.dynamics.seed;
}

std::vector<std::uint64_t> resolve_seeds(const std::optional<std::string>& flag, const ScenarioConfig& cfg) {
  if (flag) return parse_seed_list(*flag);
  return {resolve_seed(std::nullopt, cfg)};
}

fs::path prepare_out(const std::string& dir) {
  if (dir.empty()) throw InputError("--out is required");
  fs::create_directories(dir);
  return dir;
}

std::string metrics_text(std::span<const MetricsRecord> records) {
  std::ostringstream os;
  write_metrics_csv(os, records);
  return os.str();
}

std::string series_text(std::span<const SeriesPoint> points) {
  std::ostringstream os;
  write_series_csv(os, points);
  return os.str();
}

std::vector<SchedulerKind> parse_schedulers(const std::string& list) {
  std::vector<SchedulerKind> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string name = list.substr(start, comma - start);
    if (!name.empty()) {
      try {
        out.push_back(parse_scheduler(name));
      } catch (const ConfigError& e) {
        throw InputError(e.what());
      }
    }
    start = comma + 1;
  }
  if (out.empty()) throw InputError("--schedulers: at least one scheduler is required");
  return out;
}

void write_explanation(const Common& c, std::ostream& out) { out << format_explanation(explain_config(config_text(c))); }

int cmd_simulate(const Common& c, const std::optional<std::string>& seed_flag, const std::string& scheduler,
                 const std::string& checkpoint, std::ostream& out) {
  if (c.explain) {
    write_explanation(c, out);
    return kExitOk;
  }
  ScenarioConfig cfg = parse_config(config_text(c));
  if (!scheduler.empty()) cfg.scheduler = parse_scheduler(scheduler);
  const std::uint64_t seed = resolve_seed(seed_flag, cfg);
  const fs::path dir = prepare_out(c.out_dir);

  std::vector<Agent> agents;
  if (cfg.scheduler == SchedulerKind::acmptc_drl) {
    if (!checkpoint.empty()) {
      agents = load_checkpoint(checkpoint).agents;
    } else {
      TrainingResult training = train_agents(cfg, seed);
      agents = std::move(training.agents);
      write_text_file(dir / "training.csv", series_text(training_series(training)));
      save_checkpoint((dir / "checkpoint.json").string(), {cfg.agent, agents});
    }
  }
  const EpisodeResult result = run_episode(cfg, seed, agents);
  write_text_file(dir / "metrics.csv", metrics_text(result.records));
  write_text_file(dir / "summary.json", summary_json(result));
  write_text_file(dir / "config.json", serialize_config(cfg));
  out << "simulate: " << to_string(cfg.scheduler) << " seed " << seed << ", " << result.records.size()
      << " records, mean throughput " << format_number(result.summary.aggregate.mean_throughput_mbps)
      << " Mbps, violations " << result.violations << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const std::optional<std::string>& seeds_flag, std::ostream& out) {
  if (c.explain) {
    write_explanation(c, out);
    return kExitOk;
  }
  const ScenarioConfig cfg = parse_config(config_text(c));
  const std::vector<std::uint64_t> seeds = resolve_seeds(seeds_flag, cfg);
  const fs::path dir = prepare_out(c.out_dir);
  for (std::uint64_t seed : seeds) {
    const TrainingResult training = train_agents(cfg, seed);
    const std::string tag = "seed" + std::to_string(seed);
    save_checkpoint((dir / ("checkpoint_" + tag + ".json")).string(), {cfg.agent, training.agents});
    write_text_file(dir / ("training_" + tag + ".csv"), series_text(training_series(training)));
    const double last = training.episode_rewards.empty() ? 0.0 : training.episode_rewards.back();
    out << "train: seed " << seed << ", " << training.episode_rewards.size() << " episodes, final reward "
        << format_number(last) << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Common& c, const std::optional<std::string>& seeds_flag, const std::string& schedulers_flag,
                const std::string& checkpoint, std::optional<std::uint64_t> training_seed, std::ostream& out) {
  if (c.explain) {
    write_explanation(c, out);
    return kExitOk;
  }
  const ScenarioConfig cfg = parse_config(config_text(c));
  const std::vector<std::uint64_t> seeds = resolve_seeds(seeds_flag, cfg);
  const std::vector<SchedulerKind> schedulers = parse_schedulers(schedulers_flag);
  const fs::path dir = prepare_out(c.out_dir);

  std::vector<Agent> agents;
  if (!checkpoint.empty()) agents = load_checkpoint(checkpoint).agents;
  ComparisonOptions options;
  options.agents = agents;
  options.training_seed = training_seed.value_or(seeds.front());
  const ComparisonReport report = run_comparison(cfg, schedulers, seeds, options);

  write_text_file(dir / "comparison.json", comparison_json(report));
  write_text_file(dir / "comparison_series.csv", series_text(comparison_series(report)));
  for (const SchedulerColumn& col : report.columns) {
    // First seed only: a representative trajectory per scheduler for export-plots.
    const std::string name = "metrics_" + std::string(to_string(col.scheduler)) + ".csv";
    write_text_file(dir / name, metrics_text(col.runs.front().records));
  }
  if (report.training) {
    write_text_file(dir / "training.csv", series_text(training_series(*report.training)));
    save_checkpoint((dir / "checkpoint.json").string(), {cfg.agent, report.training->agents});
  }
  for (const SchedulerColumn& col : report.columns) {
    out << to_string(col.scheduler) << ": throughput " << format_number(col.mean.mean_throughput_mbps)
        << " Mbps, utility " << format_number(col.mean.mean_utility) << ", p95 latency "
        << format_number(col.mean.p95_latency_ms) << " ms\n";
  }
  for (const PairedDifference& d : report.differences) {
    out << to_string(d.scheduler) << " - " << to_string(d.baseline) << ": throughput "
        << format_number(d.mean_throughput) << " (wins " << d.throughput_wins << "/" << seeds.size() << ", p "
        << format_number(d.throughput_p_value) << "), utility " << format_number(d.mean_utility) << " (wins "
        << d.utility_wins << "/" << seeds.size() << ", p " << format_number(d.utility_p_value) << ")\n";
  }
  return kExitOk;
}

int cmd_gradcheck(std::size_t params, std::size_t networks, std::uint64_t seed, std::ostream& out) {
  const GradCheckReport report = run_gradcheck(seed, networks, params);
  const bool ok = report.max_relative_error < kGradcheckTolerance;
  out << "gradcheck: " << report.networks << " networks, " << report.parameters_checked
      << " parameters, max relative error " << format_number(report.max_relative_error) << " ("
      << (ok ? "ok" : "FAILED") << ", tolerance 1e-04)\n";
  if (!ok) out << "worst: " << report.worst << "\n";
  return ok ? kExitOk : kExitRuntime;
}

int cmd_export_plots(const std::string& in_dir, const std::string& out_dir, std::ostream& out) {
  for (const fs::path& p : export_plots(in_dir, out_dir)) out << p.string() << "\n";
  return kExitOk;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  if (const std::size_t dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t a = parse_u64(text.substr(0, dots), "seed range start");
    const std::uint64_t b = parse_u64(text.substr(dots + 2), "seed range end");
    if (a > b) throw InputError("seed range " + std::string(text) + " is empty");
    for (std::uint64_t s = a;; ++s) {
      out.push_back(s);
      if (s == b) break;
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_u64(text.substr(start, comma - start), "seed"));
    start = comma + 1;
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive multipath transport simulator", "acmptc"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common common;
  std::optional<std::string> seed_flag;
  std::optional<std::string> seeds_flag;
  std::string scheduler;
  std::string schedulers = "tcp,mptcp,acmptc,acmptc_drl";
  std::string checkpoint;
  std::optional<std::uint64_t> training_seed;
  std::size_t gc_params = 1000;
  std::size_t gc_networks = 50;
  std::uint64_t gc_seed = 0;
  std::string in_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON scenario config (defaults when omitted)");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_flag("--explain-config", common.explain, "print every config value with its source and exit");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one episode and write metrics");
  add_common(simulate);
  simulate->add_option("--seed", seed_flag, "episode seed (falls back to ACMPTC_SEED)");
  simulate->add_option("--scheduler", scheduler, "override run.scheduler");
  simulate->add_option("--checkpoint", checkpoint, "trained agents for acmptc_drl");

  CLI::App* train = app.add_subcommand("train", "train agents and write checkpoints and reward series");
  add_common(train);
  train->add_option("--seeds", seeds_flag, "seeds as N, A..B or a comma list");

  CLI::App* compare = app.add_subcommand("compare", "compare schedulers on paired seeds");
  add_common(compare);
  compare->add_option("--seeds", seeds_flag, "seeds as N, A..B or a comma list");
  compare->add_option("--schedulers", schedulers, "comma-separated schedulers; the first is the baseline");
  compare->add_option("--checkpoint", checkpoint, "trained agents for acmptc_drl");
  compare->add_option("--training-seed", training_seed, "seed for training when no checkpoint is given");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of actor and critic gradients");
  gradcheck->add_option("--params", gc_params, "maximum parameters per network")->check(CLI::PositiveNumber);
  gradcheck->add_option("--networks", gc_networks, "number of random networks")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "seed for the random networks");

  CLI::App* plots = app.add_subcommand("export-plots", "turn metrics CSVs into long-format plot series");
  plots->add_option("--in", in_dir, "directory with metrics*.csv")->required();
  plots->add_option("--out", common.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(common, seed_flag, scheduler, checkpoint, out);
    if (*train) return cmd_train(common, seeds_flag, out);
    if (*compare) return cmd_compare(common, seeds_flag, schedulers, checkpoint, training_seed, out);
    if (*gradcheck) return cmd_gradcheck(gc_params, gc_networks, gc_seed, out);
    if (*plots) return cmd_export_plots(in_dir, common.out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitInvalid;
}

}  // namespace acmptc::cli
