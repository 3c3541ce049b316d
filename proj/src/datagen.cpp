#include "drift/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "drift/io_util.hpp"
#include "drift/rng.hpp"

namespace drift {

void validate(const SyntheticConfig& cfg) {
  if (cfg.num_domains < 1) throw ConfigError("SyntheticConfig.num_domains must be >= 1");
  if (cfg.num_classes < 1) throw ConfigError("SyntheticConfig.num_classes must be >= 1");
  if (cfg.feature_dim < 1) throw ConfigError("SyntheticConfig.feature_dim must be >= 1");
  if (cfg.samples_per_class_per_domain < 1)
    throw ConfigError("SyntheticConfig.samples_per_class_per_domain must be >= 1");
  if (!(cfg.class_separation > 0.0))
    throw ConfigError("SyntheticConfig.class_separation must be > 0");
  if (!(cfg.domain_shift.scale_factor > 0.0))
    throw ConfigError("SyntheticConfig.domain_shift.scale_factor must be > 0");
  if (cfg.noise_std < 0.0) throw ConfigError("SyntheticConfig.noise_std must be >= 0");
  if (!(cfg.test_ratio > 0.0 && cfg.test_ratio < 1.0))
    throw ConfigError("SyntheticConfig.test_ratio must be in (0,1)");
}

std::vector<double> apply_domain_transform(std::span<const double> x,
                                           const DomainShift& shift,
                                           int repetitions) {
  std::vector<double> y(x.begin(), x.end());
  if (repetitions < 0) throw InputError("apply_domain_transform: repetitions must be >= 0");
  const double c = std::cos(shift.rotation_angle);
  const double s = std::sin(shift.rotation_angle);
  for (int rep = 0; rep < repetitions; ++rep) {
    // Rotate in the (0,1) plane when it exists.
    if (y.size() >= 2) {
      const double y0 = y[0];
      const double y1 = y[1];
      y[0] = c * y0 - s * y1;
      y[1] = s * y0 + c * y1;
    }
    for (double& v : y) v *= shift.scale_factor;
    if (!y.empty()) y.back() += shift.translation_magnitude;
  }
  return y;
}

std::pair<std::vector<Sample>, std::vector<Sample>> train_test_split(
    const std::vector<Sample>& samples, double ratio, std::uint64_t seed,
    WarningList* warnings) {
  if (samples.size() < 2) throw InputError("train_test_split: need at least 2 samples");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("train_test_split: ratio must be in (0,1)");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_class[samples[i].label].push_back(i);

  Rng rng(seed);
  std::vector<Sample> train;
  std::vector<Sample> test;
  for (auto& [label, idx] : by_class) {
    if (idx.size() == 1) {
      warn(warnings, "train_test_split: class " + std::to_string(label) +
                         " has a single sample; assigned to train");
      train.push_back(samples[idx[0]]);
      continue;
    }
    rng.shuffle(idx);
    // Keep at least one train sample per class.
    auto n_test = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(idx.size())));
    n_test = std::min(n_test, idx.size() - 1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_test ? test : train).push_back(samples[idx[i]]);
    }
  }
  return {std::move(train), std::move(test)};
}

DomainSequence generate_synthetic_stream(const SyntheticConfig& cfg,
                                         WarningList* warnings) {
  validate(cfg);

  const int d = cfg.feature_dim;
  const int num_classes = cfg.num_classes;

  std::vector<std::vector<double>> base_protos(
      static_cast<std::size_t>(num_classes), std::vector<double>(d, 0.0));
  for (int c = 0; c < num_classes; ++c)
    base_protos[static_cast<std::size_t>(c)][0] = c * cfg.class_separation;

  DomainSequence seq;
  seq.num_classes = num_classes;
  seq.feature_dim = d;

  std::int64_t next_id = 0;
  for (int k = 0; k < cfg.num_domains; ++k) {
    Rng noise_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(k)));
    std::vector<Sample> pool;
    pool.reserve(static_cast<std::size_t>(num_classes) *
                 static_cast<std::size_t>(cfg.samples_per_class_per_domain));
    for (int c = 0; c < num_classes; ++c) {
      const std::vector<double> proto = apply_domain_transform(
          base_protos[static_cast<std::size_t>(c)], cfg.domain_shift, k);
      for (int n = 0; n < cfg.samples_per_class_per_domain; ++n) {
        Sample s;
        s.id = next_id++;
        s.label = c;
        s.domain_id = k;
        s.features.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j)
          s.features[static_cast<std::size_t>(j)] =
              proto[static_cast<std::size_t>(j)] +
              cfg.noise_std * noise_rng.normal();
        pool.push_back(std::move(s));
      }
    }
    DomainTask task;
    task.domain_id = k;
    auto [train, test] = train_test_split(
        pool, cfg.test_ratio,
        mix_seed(cfg.seed, 0x10000ull + static_cast<std::uint64_t>(k)),
        warnings);
    task.train = std::move(train);
    task.test = std::move(test);
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Manifest handling
// ---------------------------------------------------------------------------

std::string to_string(SplitType t) {
  switch (t) {
    case SplitType::kUsers: return "users";
    case SplitType::kScenes: return "scenes";
    case SplitType::kHybrid: return "hybrid";
  }
  throw InputError("unknown split type");
}

SplitType split_type_from_string(const std::string& s) {
  if (s == "users") return SplitType::kUsers;
  if (s == "scenes") return SplitType::kScenes;
  if (s == "hybrid") return SplitType::kHybrid;
  throw ParseError("unknown split type '" + s + "' (expected users|scenes|hybrid)");
}

namespace {

constexpr const char* kManifestHeader =
    "sample_id,class_id,user_id,scene_id,feature_ref";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int64_t parse_int_field(const std::string& s, const char* what, int line_no) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("manifest line " + std::to_string(line_no) + ": field '" +
                     what + "' is not an integer: '" + s + "'");
  return v;
}

}  // namespace

Manifest read_manifest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("manifest is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw ParseError("manifest header mismatch, expected '" +
                     std::string(kManifestHeader) + "'");

  Manifest m;
  std::set<std::int64_t> seen_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5)
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": expected 5 fields, got " + std::to_string(fields.size()));
    ManifestRow row;
    row.sample_id = parse_int_field(fields[0], "sample_id", line_no);
    row.class_id = static_cast<int>(parse_int_field(fields[1], "class_id", line_no));
    row.user_id = static_cast<int>(parse_int_field(fields[2], "user_id", line_no));
    row.scene_id = static_cast<int>(parse_int_field(fields[3], "scene_id", line_no));
    row.feature_ref = parse_int_field(fields[4], "feature_ref", line_no);
    if (row.class_id < 0 || row.user_id < 0 || row.scene_id < 0)
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": class_id, user_id and scene_id must be non-negative");
    if (!seen_ids.insert(row.sample_id).second)
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": duplicate sample_id " + std::to_string(row.sample_id));
    m.rows.push_back(row);
  }
  return m;
}

void write_manifest_csv(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << kManifestHeader << "\n";
  for (const auto& r : m.rows) {
    out << r.sample_id << ',' << r.class_id << ',' << r.user_id << ','
        << r.scene_id << ',' << r.feature_ref << "\n";
  }
}

std::vector<std::pair<int, std::vector<std::int64_t>>> split_manifest(
    const Manifest& m, SplitType split_type, std::uint64_t order_seed,
    WarningList* warnings) {
  if (m.rows.empty()) throw InputError("split_manifest: manifest is empty");

  std::set<std::int64_t> seen_ids;
  for (const auto& r : m.rows)
    if (!seen_ids.insert(r.sample_id).second)
      throw InputError("split_manifest: duplicate sample_id " +
                       std::to_string(r.sample_id));

  // Group ids are assigned in ascending key order, so they depend only on
  // the manifest contents, not on order_seed.
  std::map<std::pair<int, int>, std::vector<std::int64_t>> groups;
  for (const auto& r : m.rows) {
    std::pair<int, int> key;
    switch (split_type) {
      case SplitType::kUsers: key = {r.user_id, 0}; break;
      case SplitType::kScenes: key = {r.scene_id, 0}; break;
      case SplitType::kHybrid: key = {r.user_id, r.scene_id}; break;
    }
    groups[key].push_back(r.sample_id);
  }

  std::vector<std::pair<int, std::vector<std::int64_t>>> domains;
  domains.reserve(groups.size());
  int domain_id = 0;
  for (auto& [key, ids] : groups) domains.emplace_back(domain_id++, std::move(ids));

  std::vector<std::size_t> order(domains.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(order_seed);
  rng.shuffle(order);
  std::vector<std::pair<int, std::vector<std::int64_t>>> out;
  out.reserve(domains.size());
  for (const std::size_t i : order) out.push_back(std::move(domains[i]));

  if (warnings != nullptr) {
    std::set<int> all_classes;
    std::map<std::int64_t, int> class_of;
    for (const auto& r : m.rows) {
      all_classes.insert(r.class_id);
      class_of[r.sample_id] = r.class_id;
    }
    for (const auto& [did, ids] : out) {
      std::set<int> present;
      for (const auto id : ids) present.insert(class_of[id]);
      std::vector<int> missing;
      for (const int c : all_classes)
        if (!present.count(c)) missing.push_back(c);
      if (!missing.empty()) {
        std::string msg = "split_manifest: domain " + std::to_string(did) +
                          " missing classes:";
        for (const int c : missing) msg += " " + std::to_string(c);
        warn(warnings, msg);
      }
    }
  }
  return out;
}

void write_feature_store(const std::filesystem::path& path,
                         const FeatureStore& store) {
  for (const auto& row : store.rows)
    if (row.size() != store.dim)
      throw ShapeError("feature store row has dim " + std::to_string(row.size()) +
                       ", expected " + std::to_string(store.dim));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature store: " + path.string());
  out.write("FVEC", 4);
  put_u32_le(out, static_cast<std::uint32_t>(store.rows.size()));
  put_u32_le(out, store.dim);
  for (const auto& row : store.rows)
    for (const float v : row) put_f32_le(out, v);
}

FeatureStore read_feature_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature store: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "FVEC")
    throw ParseError("feature store magic mismatch (expected FVEC)");
  const std::uint32_t count = get_u32_le(in);
  FeatureStore store;
  store.dim = get_u32_le(in);
  store.rows.resize(count);
  for (auto& row : store.rows) {
    row.resize(store.dim);
    for (auto& v : row) v = get_f32_le(in);
  }
  return store;
}

DomainSequence sequence_from_manifest(const Manifest& m,
                                      const FeatureStore& store,
                                      SplitType split_type, double test_ratio,
                                      std::uint64_t order_seed,
                                      WarningList* warnings) {
  const auto domains = split_manifest(m, split_type, order_seed, warnings);

  std::map<std::int64_t, const ManifestRow*> row_of;
  int max_class = 0;
  for (const auto& r : m.rows) {
    row_of[r.sample_id] = &r;
    max_class = std::max(max_class, r.class_id);
  }

  DomainSequence seq;
  seq.num_classes = max_class + 1;
  seq.feature_dim = static_cast<int>(store.dim);

  std::size_t task_index = 0;
  for (const auto& [did, ids] : domains) {
    std::vector<Sample> pool;
    pool.reserve(ids.size());
    for (const auto id : ids) {
      const ManifestRow* r = row_of.at(id);
      if (r->feature_ref < 0 ||
          static_cast<std::size_t>(r->feature_ref) >= store.rows.size())
        throw InputError("feature_ref " + std::to_string(r->feature_ref) +
                         " out of range for feature store of " +
                         std::to_string(store.rows.size()) + " rows");
      Sample s;
      s.id = r->sample_id;
      s.label = r->class_id;
      s.domain_id = did;
      const auto& frow = store.rows[static_cast<std::size_t>(r->feature_ref)];
      s.features.assign(frow.begin(), frow.end());
      pool.push_back(std::move(s));
    }
    DomainTask task;
    task.domain_id = did;
    auto [train, test] = train_test_split(
        pool, test_ratio, mix_seed(order_seed, 0x7a5ull + task_index), warnings);
    task.train = std::move(train);
    task.test = std::move(test);
    seq.tasks.push_back(std::move(task));
    ++task_index;
  }
  return seq;
}

void write_split_plan_csv(const std::filesystem::path& path,
                          const DomainSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write split plan: " + path.string());
  out << "task_index,domain_id,sample_id,split\n";
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    const auto& task = seq.tasks[t];
    for (const auto& s : task.train)
      out << t << ',' << task.domain_id << ',' << s.id << ",train\n";
    for (const auto& s : task.test)
      out << t << ',' << task.domain_id << ',' << s.id << ",test\n";
  }
}

}  // namespace drift
