#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drift/datagen.hpp"
#include "drift/harness.hpp"
#include "drift/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::string out;
  int workers = 1;
  std::uint64_t seed = 0;
  CLI::Option* config_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_common_flags(CLI::App* sub, Flags& f) {
  f.config_opt =
      sub->add_option("--config", f.config, "Experiment config file");
  f.out_opt = sub->add_option("--out", f.out, "Output directory");
  f.workers_opt =
      sub->add_option("--workers", f.workers, "Parallel run workers");
  f.seed_opt = sub->add_option(
      "--seed", f.seed, "Replace the config seed list with this single seed");
}

void print_warnings(const drift::WarningList& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

drift::ExperimentConfig config_for(const Flags& f, bool require_methods) {
  drift::ExperimentConfig cfg;
  if (f.config_opt->count() > 0) {
    try {
      cfg = drift::load_config(f.config, require_methods);
    } catch (const drift::IoError& e) {
      // An unreadable config is a usage problem, not a runtime failure.
      throw drift::ConfigError(e.what());
    }
  } else if (require_methods) {
    throw drift::ConfigError("this subcommand needs --config");
  }
  if (f.out_opt->count() > 0) cfg.output_dir = f.out;
  if (f.workers_opt->count() > 0) cfg.workers = f.workers;
  if (f.seed_opt->count() > 0) cfg.seeds = {f.seed};
  return cfg;
}

int cmd_synth(const Flags& f) {
  drift::ExperimentConfig cfg = config_for(f, false);
  drift::BenchmarkConfig bench = cfg.benchmark;
  if (f.seed_opt->count() > 0) bench.seed = f.seed;
  if (bench.kind != drift::BenchmarkKind::kSynthetic)
    throw drift::ConfigError("synth needs a synthetic benchmark config");

  drift::SyntheticConfig sc = bench.synthetic;
  sc.test_ratio = bench.test_ratio;
  sc.seed = bench.seed;
  drift::WarningList warnings;
  const drift::DomainSequence seq =
      drift::generate_synthetic_stream(sc, &warnings);

  drift::Manifest manifest;
  drift::FeatureStore store;
  store.dim = static_cast<std::uint32_t>(seq.feature_dim);
  for (const drift::DomainTask& task : seq.tasks) {
    const std::vector<drift::Sample>* parts[2] = {&task.train, &task.test};
    for (const std::vector<drift::Sample>* part : parts) {
      for (const drift::Sample& s : *part) {
        drift::ManifestRow row;
        row.sample_id = s.id;
        row.class_id = s.label;
        row.user_id = 0;
        row.scene_id = s.domain_id;
        row.feature_ref = static_cast<std::int64_t>(store.rows.size());
        manifest.rows.push_back(row);
        store.rows.emplace_back(s.features.begin(), s.features.end());
      }
    }
  }

  const std::filesystem::path out(f.out_opt->count() > 0 ? f.out
                                                         : "benchmark");
  std::filesystem::create_directories(out);
  drift::write_manifest_csv(out / "manifest.csv", manifest);
  drift::write_feature_store(out / "features.fvec", store);
  drift::write_split_plan_csv(out / "split_plan.csv", seq);
  print_warnings(warnings);
  std::cout << "wrote " << manifest.rows.size() << " samples across "
            << seq.tasks.size() << " domains to " << out.string() << "\n";
  return kExitOk;
}

int cmd_split(const Flags& f) {
  const drift::ExperimentConfig cfg = config_for(f, false);
  const drift::BenchmarkConfig& bench = cfg.benchmark;
  if (bench.kind != drift::BenchmarkKind::kManifest)
    throw drift::ConfigError(
        "split needs --config with a [benchmark] of kind manifest");
  const std::uint64_t order_seed =
      f.seed_opt->count() > 0 ? f.seed : bench.seed;

  const drift::Manifest manifest =
      drift::read_manifest_csv(bench.manifest_path);
  const drift::FeatureStore store =
      drift::read_feature_store(bench.features_path);
  drift::WarningList warnings;
  const drift::DomainSequence seq = drift::sequence_from_manifest(
      manifest, store, bench.split_type, bench.test_ratio, order_seed,
      &warnings);

  const std::filesystem::path out(f.out_opt->count() > 0 ? f.out
                                                         : cfg.output_dir);
  std::filesystem::create_directories(out);
  drift::write_split_plan_csv(out / "split_plan.csv", seq);
  print_warnings(warnings);
  std::cout << "split " << manifest.rows.size() << " samples into "
            << seq.tasks.size() << " tasks; plan at "
            << (out / "split_plan.csv").string() << "\n";
  return kExitOk;
}

int cmd_run(const Flags& f) {
  const drift::ExperimentConfig cfg = config_for(f, true);
  drift::WarningList warnings;
  const drift::ExperimentResult result = drift::run_experiment(cfg, &warnings);
  print_warnings(warnings);

  std::ifstream summary(std::filesystem::path(cfg.output_dir) /
                        "summary.txt");
  std::cout << summary.rdbuf();
  if (result.failed > 0) {
    std::cerr << result.failed << " of " << result.runs.size()
              << " runs failed; see "
              << (std::filesystem::path(cfg.output_dir) / "failures.csv")
                     .string()
              << "\n";
    return kExitRuntime;
  }
  std::cout << result.runs.size() << " runs completed; results in "
            << cfg.output_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const Flags& f) {
  const drift::ExperimentConfig cfg = config_for(f, true);
  if (cfg.buffer_capacities.size() < 2)
    throw drift::ConfigError(
        "sweep needs `buffer_capacities` with at least 2 entries in "
        "[experiment]");
  drift::WarningList warnings;
  const drift::ExperimentResult result =
      drift::buffer_sweep(cfg, cfg.buffer_capacities, &warnings);
  print_warnings(warnings);
  if (result.failed > 0) {
    std::cerr << result.failed << " of " << result.runs.size()
              << " sweep runs failed\n";
    return kExitRuntime;
  }
  std::cout << "sweep table at "
            << (std::filesystem::path(cfg.output_dir) / "sweep.csv").string()
            << "\n";
  return kExitOk;
}

int cmd_report(const Flags& f) {
  std::filesystem::path results("results");
  if (f.out_opt->count() > 0) {
    results = f.out;
  } else if (f.config_opt->count() > 0) {
    results = drift::load_config(f.config, false).output_dir;
  }
  drift::emit_plot_data(results);
  std::cout << "plots and plot data in " << (results / "plots").string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-incremental continual learning experiment runner"};
  app.require_subcommand(1);

  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic benchmark (manifest + features) on disk");
  CLI::App* split = app.add_subcommand(
      "split", "Split a manifest benchmark into a task plan CSV");
  CLI::App* run =
      app.add_subcommand("run", "Run the configured method x seed grid");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run the replay method across buffer capacities");
  CLI::App* report =
      app.add_subcommand("report", "Emit plot data and charts from results");
  CLI::App* subs[5] = {synth, split, run, sweep, report};
  Flags flags[5];
  for (int i = 0; i < 5; ++i) add_common_flags(subs[i], flags[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(flags[0]);
    if (split->parsed()) return cmd_split(flags[1]);
    if (run->parsed()) return cmd_run(flags[2]);
    if (sweep->parsed()) return cmd_sweep(flags[3]);
    return cmd_report(flags[4]);
  } catch (const drift::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const drift::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const drift::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
