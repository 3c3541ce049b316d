#include "drift/harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "drift/io_util.hpp"
#include "drift/memory.hpp"
#include "drift/metrics.hpp"
#include "drift/svg.hpp"

namespace drift {

std::string to_string(BenchmarkKind k) {
  return k == BenchmarkKind::kSynthetic ? "synthetic" : "manifest";
}

BenchmarkKind benchmark_kind_from_string(const std::string& s) {
  if (s == "synthetic") return BenchmarkKind::kSynthetic;
  if (s == "manifest") return BenchmarkKind::kManifest;
  throw ConfigError("unknown benchmark kind: " + s);
}

SyntheticConfig default_synthetic_benchmark() {
  SyntheticConfig cfg;
  cfg.num_domains = 5;
  cfg.num_classes = 6;
  cfg.feature_dim = 16;
  cfg.samples_per_class_per_domain = 100;
  cfg.class_separation = 2.0;
  cfg.domain_shift.rotation_angle = std::numbers::pi / 6.0;
  cfg.domain_shift.translation_magnitude = 0.0;
  cfg.domain_shift.scale_factor = 1.0;
  cfg.noise_std = 0.3;
  cfg.test_ratio = 0.2;
  cfg.seed = 7;
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawSection {
  std::string name;
  int line = 0;
  std::map<std::string, RawEntry> entries;
};

std::vector<RawSection> tokenize_config(const std::string& text) {
  std::vector<RawSection> sections;
  std::ptrdiff_t cur = -1;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(at_line(line_no) + "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      const bool is_method = name.rfind("method:", 0) == 0;
      if (name != "experiment" && name != "benchmark" && !is_method)
        throw ParseError(at_line(line_no) + "unknown section [" + name + "]");
      if (is_method && trim(name.substr(7)).empty())
        throw ParseError(at_line(line_no) + "[method:] needs a name");
      for (const RawSection& s : sections)
        if (s.name == name)
          throw ParseError(at_line(line_no) + "duplicate section [" + name +
                           "]");
      sections.push_back({name, line_no, {}});
      cur = static_cast<std::ptrdiff_t>(sections.size()) - 1;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(at_line(line_no) + "expected `key = value`, got `" +
                       line + "`");
    if (cur < 0)
      throw ParseError(at_line(line_no) + "key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(at_line(line_no) + "empty key");
    RawSection& sec = sections[static_cast<std::size_t>(cur)];
    if (sec.entries.count(key) > 0)
      throw ParseError(at_line(line_no) + "duplicate key `" + key + "` in [" +
                       sec.name + "]");
    sec.entries[key] = {value, line_no, false};
  }
  return sections;
}

class SectionReader {
 public:
  explicit SectionReader(RawSection& sec) : sec_(sec) {}

  int line_of(const std::string& key) const {
    const auto it = sec_.entries.find(key);
    return it == sec_.entries.end() ? sec_.line : it->second.line;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const RawEntry* e = take(key);
    return e == nullptr ? fallback : e->value;
  }

  double get_double(const std::string& key, double fallback) {
    const RawEntry* e = take(key);
    if (e == nullptr) return fallback;
    double v = 0.0;
    if (!parse_full(e->value, v))
      throw ParseError(at_line(e->line) + "key `" + key +
                       "` expects a number, got `" + e->value + "`");
    return v;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    const RawEntry* e = take(key);
    if (e == nullptr) return fallback;
    std::int64_t v = 0;
    if (!parse_full(e->value, v))
      throw ParseError(at_line(e->line) + "key `" + key +
                       "` expects an integer, got `" + e->value + "`");
    return v;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const RawEntry* e = take(key);
    if (e == nullptr) return fallback;
    std::uint64_t v = 0;
    if (!parse_full(e->value, v))
      throw ParseError(at_line(e->line) + "key `" + key +
                       "` expects a non-negative integer, got `" + e->value +
                       "`");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const RawEntry* e = take(key);
    if (e == nullptr) return fallback;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    throw ParseError(at_line(e->line) + "key `" + key +
                     "` expects true or false, got `" + e->value + "`");
  }

  template <typename T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback) {
    const RawEntry* e = take(key);
    if (e == nullptr) return fallback;
    std::vector<T> out;
    std::size_t pos = 0;
    const std::string& v = e->value;
    while (pos <= v.size()) {
      const std::size_t comma = std::min(v.find(',', pos), v.size());
      const std::string piece = trim(v.substr(pos, comma - pos));
      if (!piece.empty()) {
        T item{};
        if (!parse_full(piece, item))
          throw ParseError(at_line(e->line) + "key `" + key +
                           "` has a bad list entry `" + piece + "`");
        out.push_back(item);
      } else if (!v.empty()) {
        throw ParseError(at_line(e->line) + "key `" + key +
                         "` has an empty list entry");
      }
      pos = comma + 1;
    }
    return out;
  }

 private:
  template <typename T>
  static bool parse_full(const std::string& s, T& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
  }

  const RawEntry* take(const std::string& key) {
    const auto it = sec_.entries.find(key);
    if (it == sec_.entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  RawSection& sec_;
};

void check_all_used(const RawSection& sec) {
  for (const auto& [key, entry] : sec.entries)
    if (!entry.used)
      throw ParseError(at_line(entry.line) + "unknown key `" + key +
                       "` in [" + sec.name + "]");
}

// Converts a name-lookup failure into a parse error that points at the key.
template <typename Fn>
auto named_lookup(SectionReader& r, const std::string& key, Fn&& fn)
    -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ParseError(at_line(r.line_of(key)) + e.what());
  }
}

void read_experiment_section(RawSection& sec, ExperimentConfig& cfg) {
  SectionReader r(sec);
  cfg.output_dir = r.get_string("output_dir", cfg.output_dir);
  cfg.seeds = r.get_list<std::uint64_t>("seeds", cfg.seeds);
  if (cfg.seeds.empty())
    throw ParseError(at_line(r.line_of("seeds")) +
                     "key `seeds` must list at least one seed");
  cfg.buffer_capacities =
      r.get_list<std::size_t>("buffer_capacities", cfg.buffer_capacities);
  cfg.workers = static_cast<int>(r.get_int("workers", cfg.workers));
  if (cfg.workers < 1)
    throw ParseError(at_line(r.line_of("workers")) +
                     "key `workers` must be >= 1");
  cfg.log_every = static_cast<int>(r.get_int("log_every", cfg.log_every));
  if (cfg.log_every < 1)
    throw ParseError(at_line(r.line_of("log_every")) +
                     "key `log_every` must be >= 1");
  check_all_used(sec);
}

void read_benchmark_section(RawSection& sec, BenchmarkConfig& bench) {
  SectionReader r(sec);
  bench.kind = named_lookup(r, "kind", [&] {
    return benchmark_kind_from_string(
        r.get_string("kind", to_string(bench.kind)));
  });
  bench.seed = r.get_u64("seed", bench.seed);
  bench.test_ratio = r.get_double("test_ratio", bench.test_ratio);
  if (!(bench.test_ratio > 0.0 && bench.test_ratio < 1.0))
    throw ParseError(at_line(r.line_of("test_ratio")) +
                     "key `test_ratio` must be in (0, 1)");

  SyntheticConfig& sc = bench.synthetic;
  sc.num_domains =
      static_cast<int>(r.get_int("num_domains", sc.num_domains));
  sc.num_classes =
      static_cast<int>(r.get_int("num_classes", sc.num_classes));
  sc.feature_dim =
      static_cast<int>(r.get_int("feature_dim", sc.feature_dim));
  sc.samples_per_class_per_domain = static_cast<int>(
      r.get_int("samples_per_class_per_domain",
                sc.samples_per_class_per_domain));
  sc.class_separation =
      r.get_double("class_separation", sc.class_separation);
  sc.domain_shift.rotation_angle =
      r.get_double("rotation_angle", sc.domain_shift.rotation_angle);
  sc.domain_shift.translation_magnitude = r.get_double(
      "translation_magnitude", sc.domain_shift.translation_magnitude);
  sc.domain_shift.scale_factor =
      r.get_double("scale_factor", sc.domain_shift.scale_factor);
  sc.noise_std = r.get_double("noise_std", sc.noise_std);
  sc.test_ratio = bench.test_ratio;
  sc.seed = bench.seed;

  bench.manifest_path = r.get_string("manifest_path", bench.manifest_path);
  bench.features_path = r.get_string("features_path", bench.features_path);
  bench.split_type = named_lookup(r, "split_type", [&] {
    return split_type_from_string(
        r.get_string("split_type", to_string(bench.split_type)));
  });
  check_all_used(sec);

  if (bench.kind == BenchmarkKind::kManifest) {
    if (bench.manifest_path.empty())
      throw ParseError(at_line(sec.line) +
                       "[benchmark] kind manifest needs `manifest_path`");
    if (bench.features_path.empty())
      throw ParseError(at_line(sec.line) +
                       "[benchmark] kind manifest needs `features_path`");
  } else {
    try {
      validate(sc);
    } catch (const ConfigError& e) {
      throw ParseError(at_line(sec.line) + e.what());
    }
  }
}

MethodConfig read_method_section(RawSection& sec) {
  SectionReader r(sec);
  MethodConfig m;
  m.name = trim(sec.name.substr(7));
  m.method = named_lookup(r, "method", [&] {
    return method_from_string(r.get_string("method", m.name));
  });
  m.lr = r.get_double("lr", m.lr);
  m.momentum = r.get_double("momentum", m.momentum);
  m.batch_size = static_cast<int>(r.get_int("batch_size", m.batch_size));
  m.epochs_per_task =
      static_cast<int>(r.get_int("epochs_per_task", m.epochs_per_task));
  m.loss.temperature = r.get_double("temperature", m.loss.temperature);
  m.loss.lambda = r.get_double("lambda", m.loss.lambda);
  m.lambda_ewc = r.get_double("lambda_ewc", m.lambda_ewc);
  m.buffer_capacity = static_cast<std::size_t>(
      r.get_u64("buffer_capacity", m.buffer_capacity));
  m.snapshot_policy = named_lookup(r, "snapshot_policy", [&] {
    return snapshot_policy_from_string(
        r.get_string("snapshot_policy", to_string(m.snapshot_policy)));
  });
  m.arch = named_lookup(r, "arch", [&] {
    return arch_from_string(r.get_string("arch", to_string(m.arch)));
  });
  m.hidden_width =
      static_cast<int>(r.get_int("hidden_width", m.hidden_width));
  m.replay_batch_size = static_cast<int>(
      r.get_int("replay_batch_size", m.replay_batch_size));
  m.fisher_sample_cap = static_cast<std::size_t>(
      r.get_u64("fisher_sample_cap", m.fisher_sample_cap));
  m.loss.use_class_loss = r.get_bool("use_class_loss", m.loss.use_class_loss);
  m.loss.use_kd_loss = r.get_bool("use_kd_loss", m.loss.use_kd_loss);
  m.loss.kd_t2_scaling = r.get_bool("kd_t2_scaling", m.loss.kd_t2_scaling);
  m.loss.kd_on_replay = r.get_bool("kd_on_replay", m.loss.kd_on_replay);
  m.seed = r.get_u64("seed", m.seed);
  check_all_used(sec);
  try {
    validate(m);
  } catch (const ConfigError& e) {
    throw ParseError(at_line(sec.line) + "[" + sec.name + "]: " + e.what());
  }
  return m;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string host_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
  return buf;
}

void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (const double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double sum = 0.0;
  for (const double x : v) sum += (x - m) * (x - m);
  return std::sqrt(sum / static_cast<double>(v.size() - 1));
}

std::string sanitize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s)
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

struct RunSpec {
  MethodConfig method;
  std::string label;
  std::uint64_t seed = 0;
  std::size_t capacity = 0;
  std::filesystem::path dir;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, bool require_methods) {
  std::vector<RawSection> sections = tokenize_config(text);
  ExperimentConfig cfg;
  bool any_method = false;
  for (RawSection& sec : sections) {
    if (sec.name == "experiment") {
      read_experiment_section(sec, cfg);
    } else if (sec.name == "benchmark") {
      read_benchmark_section(sec, cfg.benchmark);
    } else {
      cfg.methods.push_back(read_method_section(sec));
      any_method = true;
    }
  }
  if (require_methods && !any_method)
    throw ParseError(
        "config resolves to an empty `methods` list; add a [method:...] "
        "section");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             bool require_methods) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), require_methods);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    out << (i ? ", " : "") << cfg.seeds[i];
  out << "\n";
  if (!cfg.buffer_capacities.empty()) {
    out << "buffer_capacities = ";
    for (std::size_t i = 0; i < cfg.buffer_capacities.size(); ++i)
      out << (i ? ", " : "") << cfg.buffer_capacities[i];
    out << "\n";
  }
  out << "workers = " << cfg.workers << "\n";
  out << "log_every = " << cfg.log_every << "\n";

  const BenchmarkConfig& b = cfg.benchmark;
  const SyntheticConfig& sc = b.synthetic;
  out << "\n[benchmark]\n";
  out << "kind = " << to_string(b.kind) << "\n";
  out << "seed = " << b.seed << "\n";
  out << "test_ratio = " << fmt_double(b.test_ratio) << "\n";
  out << "num_domains = " << sc.num_domains << "\n";
  out << "num_classes = " << sc.num_classes << "\n";
  out << "feature_dim = " << sc.feature_dim << "\n";
  out << "samples_per_class_per_domain = " << sc.samples_per_class_per_domain
      << "\n";
  out << "class_separation = " << fmt_double(sc.class_separation) << "\n";
  out << "rotation_angle = " << fmt_double(sc.domain_shift.rotation_angle)
      << "\n";
  out << "translation_magnitude = "
      << fmt_double(sc.domain_shift.translation_magnitude) << "\n";
  out << "scale_factor = " << fmt_double(sc.domain_shift.scale_factor) << "\n";
  out << "noise_std = " << fmt_double(sc.noise_std) << "\n";
  if (!b.manifest_path.empty())
    out << "manifest_path = " << b.manifest_path << "\n";
  if (!b.features_path.empty())
    out << "features_path = " << b.features_path << "\n";
  out << "split_type = " << to_string(b.split_type) << "\n";

  for (const MethodConfig& m : cfg.methods) {
    out << "\n[method:" << (m.name.empty() ? to_string(m.method) : m.name)
        << "]\n";
    out << "method = " << to_string(m.method) << "\n";
    out << "lr = " << fmt_double(m.lr) << "\n";
    out << "momentum = " << fmt_double(m.momentum) << "\n";
    out << "batch_size = " << m.batch_size << "\n";
    out << "epochs_per_task = " << m.epochs_per_task << "\n";
    out << "temperature = " << fmt_double(m.loss.temperature) << "\n";
    out << "lambda = " << fmt_double(m.loss.lambda) << "\n";
    out << "lambda_ewc = " << fmt_double(m.lambda_ewc) << "\n";
    out << "buffer_capacity = " << m.buffer_capacity << "\n";
    out << "snapshot_policy = " << to_string(m.snapshot_policy) << "\n";
    out << "arch = " << to_string(m.arch) << "\n";
    out << "hidden_width = " << m.hidden_width << "\n";
    out << "replay_batch_size = " << m.replay_batch_size << "\n";
    out << "fisher_sample_cap = " << m.fisher_sample_cap << "\n";
    out << "use_class_loss = " << (m.loss.use_class_loss ? "true" : "false")
        << "\n";
    out << "use_kd_loss = " << (m.loss.use_kd_loss ? "true" : "false") << "\n";
    out << "kd_t2_scaling = " << (m.loss.kd_t2_scaling ? "true" : "false")
        << "\n";
    out << "kd_on_replay = " << (m.loss.kd_on_replay ? "true" : "false")
        << "\n";
    out << "seed = " << m.seed << "\n";
  }
  return out.str();
}

std::string benchmark_label(const BenchmarkConfig& bench) {
  if (bench.kind == BenchmarkKind::kSynthetic) return "synthetic";
  const std::string stem =
      std::filesystem::path(bench.manifest_path).stem().string();
  return (stem.empty() ? std::string("manifest") : stem) + "_" +
         to_string(bench.split_type);
}

DomainSequence build_benchmark(const BenchmarkConfig& bench,
                               std::uint64_t run_seed, WarningList* warnings) {
  const std::uint64_t data_seed = mix_seed(bench.seed, run_seed);
  if (bench.kind == BenchmarkKind::kSynthetic) {
    SyntheticConfig sc = bench.synthetic;
    sc.test_ratio = bench.test_ratio;
    sc.seed = data_seed;
    return generate_synthetic_stream(sc, warnings);
  }
  if (bench.manifest_path.empty() || bench.features_path.empty())
    throw ConfigError("manifest benchmark needs manifest_path and features_path");
  const Manifest m = read_manifest_csv(bench.manifest_path);
  const FeatureStore store = read_feature_store(bench.features_path);
  return sequence_from_manifest(m, store, bench.split_type, bench.test_ratio,
                                data_seed, warnings);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                WarningList* warnings) {
  if (cfg.methods.empty())
    throw ConfigError("experiment needs at least one method");
  if (cfg.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.log_every < 1) throw ConfigError("log_every must be >= 1");
  for (const MethodConfig& m : cfg.methods) validate(m);
  if (cfg.benchmark.kind == BenchmarkKind::kManifest) {
    if (cfg.benchmark.manifest_path.empty() ||
        cfg.benchmark.features_path.empty())
      throw ConfigError("manifest benchmark needs manifest_path and features_path");
  } else {
    SyntheticConfig probe = cfg.benchmark.synthetic;
    probe.test_ratio = cfg.benchmark.test_ratio;
    validate(probe);
  }

  const std::string started = now_utc();
  const auto t0 = std::chrono::steady_clock::now();

  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir / "runs");
  write_text_file(out_dir / "resolved_config.ini", serialize_config(cfg));

  std::vector<RunSpec> specs;
  for (const MethodConfig& m : cfg.methods) {
    std::vector<std::size_t> caps;
    if (uses_buffer(m.method))
      caps = cfg.buffer_capacities.empty()
                 ? std::vector<std::size_t>{m.buffer_capacity}
                 : cfg.buffer_capacities;
    else
      caps = {0};  // the capacity axis is meaningless without a buffer
    for (const std::size_t cap : caps) {
      for (const std::uint64_t seed : cfg.seeds) {
        RunSpec spec;
        spec.method = m;
        spec.method.seed = seed;
        if (uses_buffer(m.method)) spec.method.buffer_capacity = cap;
        spec.label = method_label(m);
        if (uses_buffer(m.method) && !cfg.buffer_capacities.empty())
          spec.label += "_cap" + std::to_string(cap);
        spec.seed = seed;
        spec.capacity = cap;
        spec.dir =
            out_dir / "runs" / (spec.label + "_seed" + std::to_string(seed));
        specs.push_back(std::move(spec));
      }
    }
  }

  ExperimentResult result;
  result.runs.assign(specs.size(), {});

  const auto execute = [&](std::size_t i) {
    const RunSpec& spec = specs[i];
    RunOutcome o;
    o.label = spec.label;
    o.seed = spec.seed;
    o.capacity = spec.capacity;
    try {
      std::filesystem::create_directories(spec.dir);
      WarningList run_warnings;
      const DomainSequence seq =
          build_benchmark(cfg.benchmark, spec.seed, &run_warnings);
      RunLogger logger(spec.dir / "run_log.csv", cfg.log_every);
      RunArtifacts artifacts;
      const AccuracyMatrix m =
          run_sequence(seq, spec.method, &logger, &artifacts);
      const MetricsReport report =
          make_report(spec.label, benchmark_label(cfg.benchmark), spec.seed, m,
                      &run_warnings);
      write_metrics_json(spec.dir / "metrics.json", report);
      write_metrics_csv(spec.dir / "metrics.csv", spec.label, spec.seed, m);
      save_checkpoint(spec.dir / "checkpoint.bin", artifacts.final_params);
      if (uses_buffer(spec.method.method))
        write_buffer_dump_csv(spec.dir / "buffer.csv", artifacts.final_buffer);
      if (!run_warnings.empty()) {
        std::string text;
        for (const std::string& w : run_warnings) text += w + "\n";
        write_text_file(spec.dir / "warnings.txt", text);
      }
      o.aa = report.aa;
      o.bwf = report.bwf;
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    result.runs[i] = std::move(o);
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.workers),
                            specs.size());
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) return;
          execute(i);
        }
      });
    for (std::thread& th : pool) th.join();
  }

  for (const RunOutcome& o : result.runs)
    if (!o.ok) {
      ++result.failed;
      warn(warnings, "run " + o.label + " seed " + std::to_string(o.seed) +
                         " failed: " + o.error);
    }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunOutcome*>> groups;
  std::map<std::string, std::size_t> group_capacity;
  for (const RunOutcome& o : result.runs) {
    if (!o.ok) continue;
    if (groups.count(o.label) == 0) order.push_back(o.label);
    groups[o.label].push_back(&o);
    group_capacity[o.label] = o.capacity;
  }

  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    if (!out) throw IoError("cannot write summary.csv");
    out << "method,capacity,runs,aa_mean,aa_std,bwf_mean,bwf_std\n";
    for (const std::string& label : order) {
      std::vector<double> aas, bwfs;
      for (const RunOutcome* o : groups[label]) {
        aas.push_back(o->aa);
        bwfs.push_back(o->bwf);
      }
      out << label << ',' << group_capacity[label] << ',' << aas.size() << ','
          << fmt_double(mean_of(aas)) << ',' << fmt_double(sample_std(aas))
          << ',' << fmt_double(mean_of(bwfs)) << ','
          << fmt_double(sample_std(bwfs)) << "\n";
    }
  }
  {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s %15s %15s\n", "method", "AA",
                  "BWF");
    out << buf;
    for (const std::string& label : order) {
      std::vector<double> aas, bwfs;
      for (const RunOutcome* o : groups[label]) {
        aas.push_back(o->aa);
        bwfs.push_back(o->bwf);
      }
      std::snprintf(buf, sizeof(buf), "%-24s %6.2f +- %5.2f %6.2f +- %5.2f\n",
                    label.c_str(), mean_of(aas), sample_std(aas),
                    mean_of(bwfs), sample_std(bwfs));
      out << buf;
    }
    write_text_file(out_dir / "summary.txt", out.str());
  }

  if (result.failed > 0) {
    std::ofstream out(out_dir / "failures.csv", std::ios::binary);
    if (!out) throw IoError("cannot write failures.csv");
    out << "method,seed,capacity,error\n";
    for (const RunOutcome& o : result.runs)
      if (!o.ok)
        out << o.label << ',' << o.seed << ',' << o.capacity << ','
            << csv_escape(o.error) << "\n";
  } else {
    std::filesystem::remove(out_dir / "failures.csv");
  }

  const auto t1 = std::chrono::steady_clock::now();
  std::ostringstream info;
  info << "started: " << started << "\n";
  info << "finished: " << now_utc() << "\n";
  info << "elapsed_seconds: "
       << fmt_double(std::chrono::duration<double>(t1 - t0).count()) << "\n";
  info << "host: " << host_name() << "\n";
  info << "runs: " << result.runs.size() << "\n";
  info << "failed: " << result.failed << "\n";
  write_text_file(out_dir / "run_info.txt", info.str());

  return result;
}

void emit_plot_data(const std::filesystem::path& results_dir) {
  std::vector<std::filesystem::path> files;
  const std::filesystem::path runs_dir = results_dir / "runs";
  if (std::filesystem::is_directory(runs_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
      const std::filesystem::path mj = entry.path() / "metrics.json";
      if (entry.is_directory() && std::filesystem::exists(mj))
        files.push_back(mj);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw InputError("no metrics reports under " + results_dir.string());

  std::vector<MetricsReport> reports;
  reports.reserve(files.size());
  for (const std::filesystem::path& f : files)
    reports.push_back(read_metrics_json(f));

  std::vector<std::string> benchmarks;
  for (const MetricsReport& r : reports)
    if (std::find(benchmarks.begin(), benchmarks.end(), r.benchmark) ==
        benchmarks.end())
      benchmarks.push_back(r.benchmark);
  std::sort(benchmarks.begin(), benchmarks.end());

  const std::filesystem::path plots = results_dir / "plots";
  std::filesystem::create_directories(plots);

  for (const std::string& bench : benchmarks) {
    const std::string suffix =
        benchmarks.size() > 1 ? "_" + sanitize(bench) : "";

    std::vector<std::string> method_order;
    std::map<std::string, std::vector<const MetricsReport*>> by_method;
    for (const MetricsReport& r : reports) {
      if (r.benchmark != bench) continue;
      if (by_method.count(r.method) == 0) method_order.push_back(r.method);
      by_method[r.method].push_back(&r);
    }

    {
      std::ofstream out(plots / ("aa_curve" + suffix + ".csv"),
                        std::ios::binary);
      if (!out) throw IoError("cannot write aa_curve csv");
      out << "task,method,seed,aa\n";
      for (const std::string& method : method_order)
        for (const MetricsReport* r : by_method[method])
          for (std::size_t t = 0; t < r->curve.size(); ++t)
            out << (t + 1) << ',' << method << ',' << r->seed << ','
                << fmt_double(r->curve[t]) << "\n";
    }

    std::vector<Series> series;
    std::vector<Bar> bars;
    std::ofstream final_csv(plots / ("final_aa" + suffix + ".csv"),
                            std::ios::binary);
    if (!final_csv) throw IoError("cannot write final_aa csv");
    final_csv << "method,aa_mean\n";
    for (const std::string& method : method_order) {
      const std::vector<const MetricsReport*>& runs = by_method[method];
      const std::size_t num_tasks = runs.front()->curve.size();
      for (const MetricsReport* r : runs)
        if (r->curve.size() != num_tasks)
          throw InputError("mismatched task counts for method " + method +
                           " in " + bench);
      Series s;
      s.label = method;
      for (std::size_t t = 0; t < num_tasks; ++t) {
        double sum = 0.0;
        for (const MetricsReport* r : runs) sum += r->curve[t];
        s.xs.push_back(static_cast<double>(t + 1));
        s.ys.push_back(sum / static_cast<double>(runs.size()));
      }
      std::vector<double> finals;
      for (const MetricsReport* r : runs) finals.push_back(r->aa);
      const double final_aa = mean_of(finals);
      series.push_back(std::move(s));
      bars.push_back({method, final_aa});
      final_csv << method << ',' << fmt_double(final_aa) << "\n";
    }
    write_line_chart_svg(plots / ("aa_curve" + suffix + ".svg"),
                         "Average accuracy by task (" + bench + ")",
                         "tasks trained", "average accuracy (%)", series);
    write_bar_chart_svg(plots / ("final_aa" + suffix + ".svg"),
                        "Final average accuracy (" + bench + ")",
                        "average accuracy (%)", bars);
  }
}

ExperimentResult buffer_sweep(const ExperimentConfig& cfg,
                              const std::vector<std::size_t>& capacities,
                              WarningList* warnings) {
  if (capacities.size() < 2)
    throw ConfigError("buffer sweep needs at least 2 capacities");
  std::vector<std::size_t> caps(capacities);
  std::sort(caps.begin(), caps.end());
  const auto dup = std::unique(caps.begin(), caps.end());
  if (dup != caps.end()) {
    caps.erase(dup, caps.end());
    warn(warnings, "buffer sweep: duplicate capacities removed");
  }

  ExperimentConfig sweep_cfg = cfg;
  MethodConfig driver;
  driver.method = Method::kDrift;
  for (const MethodConfig& m : cfg.methods)
    if (m.method == Method::kDrift) {
      driver = m;
      break;
    }
  sweep_cfg.methods = {driver};
  sweep_cfg.buffer_capacities = caps;

  const ExperimentResult result = run_experiment(sweep_cfg, warnings);

  std::ofstream out(std::filesystem::path(cfg.output_dir) / "sweep.csv",
                    std::ios::binary);
  if (!out) throw IoError("cannot write sweep.csv");
  out << "capacity,seed,AA,BWF\n";
  for (const RunOutcome& o : result.runs)
    if (o.ok)
      out << o.capacity << ',' << o.seed << ',' << fmt_double(o.aa) << ','
          << fmt_double(o.bwf) << "\n";
  for (const std::size_t cap : caps) {
    std::vector<double> aas, bwfs;
    for (const RunOutcome& o : result.runs)
      if (o.ok && o.capacity == cap) {
        aas.push_back(o.aa);
        bwfs.push_back(o.bwf);
      }
    if (aas.empty()) continue;
    out << cap << ",mean," << fmt_double(mean_of(aas)) << ','
        << fmt_double(mean_of(bwfs)) << "\n";
  }
  return result;
}

}  // namespace drift
