#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drift/model.hpp"
#include "drift/types.hpp"

namespace drift {

// a[k][t]: percent accuracy on task k's test set after training through task
// t (0-based here). Cells with k > t hold zero-shot forward accuracy; the
// scalar metrics ignore them.
struct AccuracyMatrix {
  int num_tasks = 0;
  std::vector<std::vector<double>> a;
};

// All cells start at -1 so an unfilled matrix fails validation loudly.
AccuracyMatrix make_accuracy_matrix(int num_tasks);

// Square, T >= 1, every entry finite and in [0, 100].
void validate(const AccuracyMatrix& m);

// 100 x (argmax(logits) == label) rate; argmax ties go to the lowest class.
double evaluate(const ModelParams& params, const std::vector<Sample>& test_set);

// Mean of the final column.
double average_accuracy(const AccuracyMatrix& m);

// Mean of a[k][k] - a[k][T-1] over k < T-1. Negative values mean backward
// transfer. T=1 has no earlier tasks; defined as 0 with a warning.
double backward_forgetting(const AccuracyMatrix& m,
                           WarningList* warnings = nullptr);

// Entry t = mean of column t over rows 0..t.
std::vector<double> aa_curve(const AccuracyMatrix& m);

struct MetricsReport {
  std::string method;
  std::string benchmark;
  std::uint64_t seed = 0;
  double aa = 0.0;
  double bwf = 0.0;
  std::vector<double> curve;
  AccuracyMatrix matrix;
};

MetricsReport make_report(const std::string& method,
                          const std::string& benchmark, std::uint64_t seed,
                          const AccuracyMatrix& m,
                          WarningList* warnings = nullptr);

void write_metrics_json(const std::filesystem::path& path,
                        const MetricsReport& report);
MetricsReport read_metrics_json(const std::filesystem::path& path);

// Flat form, one row per matrix cell, k-major.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::string& method, std::uint64_t seed,
                       const AccuracyMatrix& m);

}  // namespace drift
