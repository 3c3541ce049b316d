#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drift/datagen.hpp"
#include "drift/trainer.hpp"
#include "drift/types.hpp"

namespace drift {

enum class BenchmarkKind { kSynthetic, kManifest };

std::string to_string(BenchmarkKind k);
BenchmarkKind benchmark_kind_from_string(const std::string& s);

// 5 domains rotated pi/6 apart, 6 classes, 16 dims, 100 samples per class
// per domain.
SyntheticConfig default_synthetic_benchmark();

struct BenchmarkConfig {
  BenchmarkKind kind = BenchmarkKind::kSynthetic;
  SyntheticConfig synthetic = default_synthetic_benchmark();
  std::string manifest_path;
  std::string features_path;
  SplitType split_type = SplitType::kScenes;
  double test_ratio = 0.2;
  std::uint64_t seed = 7;

  bool operator==(const BenchmarkConfig&) const = default;
};

struct ExperimentConfig {
  BenchmarkConfig benchmark;
  std::vector<MethodConfig> methods;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // Non-empty: replay methods run once per capacity (label suffix _cap<n>).
  // Empty: each method keeps its own buffer_capacity.
  std::vector<std::size_t> buffer_capacities;
  std::string output_dir = "results";
  int workers = 1;
  int log_every = 10;

  bool operator==(const ExperimentConfig&) const = default;
};

// Flat `key = value` sections: [experiment], [benchmark], and one
// [method:NAME] per method. Unknown keys, bad values, and violated
// constraints raise ParseError with the line number and key name.
// require_methods=false admits configs that only describe a benchmark.
ExperimentConfig parse_config(const std::string& text,
                              bool require_methods = true);
ExperimentConfig load_config(const std::filesystem::path& path,
                             bool require_methods = true);

// Emits the fully resolved config; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

std::string benchmark_label(const BenchmarkConfig& bench);

// Deterministic in (bench, run_seed): each run seed gets its own draw of the
// benchmark, shared by every method so seed-paired comparisons are fair.
DomainSequence build_benchmark(const BenchmarkConfig& bench,
                               std::uint64_t run_seed,
                               WarningList* warnings = nullptr);

struct RunOutcome {
  std::string label;
  std::uint64_t seed = 0;
  std::size_t capacity = 0;
  bool ok = false;
  std::string error;
  double aa = 0.0;
  double bwf = 0.0;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  int failed = 0;
};

// Runs the (method x seed x capacity) grid, up to cfg.workers runs in
// parallel, writing per-run bundles under <output_dir>/runs/ plus
// resolved_config.ini, summary.csv/summary.txt, failures.csv (only when a
// run fails), and run_info.txt (the only file allowed to differ between
// reruns).
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                WarningList* warnings = nullptr);

// Reads every runs/*/metrics.json under results_dir and writes, per
// benchmark, aa-curve point data plus line/bar charts into
// <results_dir>/plots/.
void emit_plot_data(const std::filesystem::path& results_dir);

// Repeats the replay run across buffer capacities on the same seed grid and
// writes sweep.csv (`capacity,seed,AA,BWF` rows, then per-capacity mean
// rows with `mean` in the seed column).
ExperimentResult buffer_sweep(const ExperimentConfig& cfg,
                              const std::vector<std::size_t>& capacities,
                              WarningList* warnings = nullptr);

}  // namespace drift
