#include "drift/metrics.hpp"

#include <cmath>
#include <fstream>

#include "drift/io_util.hpp"
#include "json.hpp"

namespace drift {

AccuracyMatrix make_accuracy_matrix(int num_tasks) {
  if (num_tasks < 1)
    throw ConfigError("accuracy matrix needs at least one task");
  AccuracyMatrix m;
  m.num_tasks = num_tasks;
  m.a.assign(static_cast<std::size_t>(num_tasks),
             std::vector<double>(static_cast<std::size_t>(num_tasks), -1.0));
  return m;
}

void validate(const AccuracyMatrix& m) {
  const auto t = static_cast<std::size_t>(m.num_tasks);
  if (m.num_tasks < 1 || m.a.size() != t)
    throw InputError("accuracy matrix is not square with T >= 1");
  for (const auto& row : m.a) {
    if (row.size() != t)
      throw InputError("accuracy matrix is not square with T >= 1");
    for (const double v : row)
      if (!std::isfinite(v) || v < 0.0 || v > 100.0)
        throw InputError("accuracy matrix entry " + fmt_double(v) +
                         " outside [0, 100]");
  }
}

double evaluate(const ModelParams& params,
                const std::vector<Sample>& test_set) {
  if (test_set.empty()) throw InputError("evaluate: empty test set");
  std::size_t correct = 0;
  for (const Sample& s : test_set) {
    const std::vector<double> logits = forward(params, s.features);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    if (static_cast<int>(best) == s.label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(test_set.size());
}

double average_accuracy(const AccuracyMatrix& m) {
  validate(m);
  const auto last = static_cast<std::size_t>(m.num_tasks - 1);
  double sum = 0.0;
  for (const auto& row : m.a) sum += row[last];
  return sum / static_cast<double>(m.num_tasks);
}

double backward_forgetting(const AccuracyMatrix& m, WarningList* warnings) {
  validate(m);
  if (m.num_tasks == 1) {
    warn(warnings, "backward_forgetting: single task, defined as 0");
    return 0.0;
  }
  const auto last = static_cast<std::size_t>(m.num_tasks - 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < last; ++k) sum += m.a[k][k] - m.a[k][last];
  return sum / static_cast<double>(last);
}

std::vector<double> aa_curve(const AccuracyMatrix& m) {
  validate(m);
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(m.num_tasks));
  for (std::size_t t = 0; t < static_cast<std::size_t>(m.num_tasks); ++t) {
    double sum = 0.0;
    for (std::size_t k = 0; k <= t; ++k) sum += m.a[k][t];
    curve.push_back(sum / static_cast<double>(t + 1));
  }
  return curve;
}

MetricsReport make_report(const std::string& method,
                          const std::string& benchmark, std::uint64_t seed,
                          const AccuracyMatrix& m, WarningList* warnings) {
  MetricsReport r;
  r.method = method;
  r.benchmark = benchmark;
  r.seed = seed;
  r.aa = average_accuracy(m);
  r.bwf = backward_forgetting(m, warnings);
  r.curve = aa_curve(m);
  r.matrix = m;
  return r;
}

void write_metrics_json(const std::filesystem::path& path,
                        const MetricsReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["benchmark"] = report.benchmark;
  j["seed"] = report.seed;
  j["AA"] = report.aa;
  j["BWF"] = report.bwf;
  j["aa_curve"] = report.curve;
  j["matrix"] = report.matrix.a;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics report: " + path.string());
  out << j.dump(2) << "\n";
}

MetricsReport read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read metrics report: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad metrics report " + path.string() + ": " + e.what());
  }
  MetricsReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.benchmark = j.at("benchmark").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.aa = j.at("AA").get<double>();
    r.bwf = j.at("BWF").get<double>();
    r.curve = j.at("aa_curve").get<std::vector<double>>();
    r.matrix.a = j.at("matrix").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad metrics report " + path.string() + ": " + e.what());
  }
  r.matrix.num_tasks = static_cast<int>(r.matrix.a.size());
  validate(r.matrix);
  return r;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::string& method, std::uint64_t seed,
                       const AccuracyMatrix& m) {
  validate(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics csv: " + path.string());
  out << "method,seed,k,t,accuracy\n";
  for (std::size_t k = 0; k < m.a.size(); ++k)
    for (std::size_t t = 0; t < m.a[k].size(); ++t)
      out << method << ',' << seed << ',' << k << ',' << t << ','
          << fmt_double(m.a[k][t]) << "\n";
}

}  // namespace drift
