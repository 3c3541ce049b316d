#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "drift/datagen.hpp"

using namespace drift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("drift_datagen_" + std::to_string(::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SyntheticConfig small_cfg() {
  SyntheticConfig cfg;
  cfg.num_domains = 3;
  cfg.num_classes = 4;
  cfg.feature_dim = 6;
  cfg.samples_per_class_per_domain = 50;
  cfg.class_separation = 2.0;
  cfg.noise_std = 0.1;
  cfg.test_ratio = 0.2;
  cfg.seed = 99;
  return cfg;
}

ManifestRow row(std::int64_t id, int cls, int user, int scene) {
  ManifestRow r;
  r.sample_id = id;
  r.class_id = cls;
  r.user_id = user;
  r.scene_id = scene;
  r.feature_ref = id;
  return r;
}

std::vector<Sample> labeled_block(int per_class, int num_classes, int dim) {
  std::vector<Sample> out;
  std::int64_t id = 0;
  for (int c = 0; c < num_classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.id = id++;
      s.label = c;
      s.features.assign(dim, double(c) + 0.01 * i);
      out.push_back(s);
    }
  return out;
}

}  // namespace

TEST_CASE("synthetic config validation names the offending field") {
  SyntheticConfig cfg = small_cfg();
  cfg.num_domains = 0;
  CHECK_THROWS_WITH_AS(validate(cfg),
                       "SyntheticConfig.num_domains must be >= 1",
                       ConfigError);
  cfg = small_cfg();
  cfg.noise_std = -0.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = small_cfg();
  cfg.domain_shift.scale_factor = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = small_cfg();
  cfg.test_ratio = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_NOTHROW(validate(small_cfg()));
}

TEST_CASE("domain transform with zero repetitions is the identity") {
  DomainShift shift;
  shift.rotation_angle = 1.1;
  shift.translation_magnitude = 2.0;
  shift.scale_factor = 1.5;
  const std::vector<double> x{0.3, -1.2, 4.0, 0.0};
  CHECK(apply_domain_transform(x, shift, 0) == x);
}

TEST_CASE("four quarter turns recover the input") {
  DomainShift shift;
  shift.rotation_angle = std::acos(-1.0) / 2.0;
  const std::vector<double> x{0.7, -0.4, 1.3, 2.2, -5.0};
  const std::vector<double> back = apply_domain_transform(x, shift, 4);
  REQUIRE(back.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
}

TEST_CASE("one quarter turn with doubling scale maps e0 to 2*e1") {
  // Hand matrix product: rotate (1,0) into (0,1) in the (0,1) plane, then
  // scale by 2.
  DomainShift shift;
  shift.rotation_angle = std::acos(-1.0) / 2.0;
  shift.scale_factor = 2.0;
  const std::vector<double> x{1.0, 0.0, 0.0, 0.0};
  const std::vector<double> y = apply_domain_transform(x, shift, 1);
  CHECK(std::abs(y[0]) < 1e-12);
  CHECK(y[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(y[2] == 0.0);
  CHECK(y[3] == 0.0);
}

TEST_CASE("identity shift with one domain keeps base prototypes") {
  SyntheticConfig cfg = small_cfg();
  cfg.num_domains = 1;
  cfg.noise_std = 0.0;
  cfg.domain_shift = DomainShift{};
  const DomainSequence seq = generate_synthetic_stream(cfg);
  REQUIRE(seq.tasks.size() == 1);
  for (const Sample& s : seq.tasks[0].train) {
    CHECK(s.features[0] ==
          doctest::Approx(s.label * cfg.class_separation).epsilon(1e-12));
    for (int j = 1; j < cfg.feature_dim; ++j)
      CHECK(std::abs(s.features[j]) < 1e-12);
  }
}

TEST_CASE("same config and seed give identical sequences") {
  const SyntheticConfig cfg = small_cfg();
  const DomainSequence a = generate_synthetic_stream(cfg);
  const DomainSequence b = generate_synthetic_stream(cfg);
  REQUIRE(a.tasks.size() == b.tasks.size());
  for (std::size_t t = 0; t < a.tasks.size(); ++t) {
    CHECK(a.tasks[t].domain_id == b.tasks[t].domain_id);
    CHECK(a.tasks[t].train == b.tasks[t].train);
    CHECK(a.tasks[t].test == b.tasks[t].test);
  }
}

TEST_CASE("task and sample counts add up") {
  SyntheticConfig cfg = small_cfg();  // 3 domains, 4 classes, 50 per class
  const DomainSequence seq = generate_synthetic_stream(cfg);
  CHECK(seq.num_classes == 4);
  CHECK(seq.feature_dim == 6);
  REQUIRE(seq.tasks.size() == 3);
  std::set<int> domain_ids;
  for (const DomainTask& task : seq.tasks) {
    CHECK(task.train.size() + task.test.size() == 200);
    domain_ids.insert(task.domain_id);
    std::set<int> train_classes;
    for (const Sample& s : task.train) {
      train_classes.insert(s.label);
      CHECK(s.domain_id == task.domain_id);
    }
    CHECK(train_classes == std::set<int>{0, 1, 2, 3});
    std::set<std::int64_t> train_ids, test_ids;
    for (const Sample& s : task.train) train_ids.insert(s.id);
    for (const Sample& s : task.test) test_ids.insert(s.id);
    CHECK(train_ids.size() == task.train.size());
    for (const std::int64_t id : test_ids) CHECK(train_ids.count(id) == 0);
  }
  CHECK(domain_ids.size() == 3);
}

TEST_CASE("noise-free domains are separable by nearest prototype") {
  SyntheticConfig cfg = small_cfg();
  cfg.noise_std = 0.0;
  cfg.domain_shift.rotation_angle = 0.7;
  cfg.domain_shift.scale_factor = 1.1;
  const DomainSequence seq = generate_synthetic_stream(cfg);
  for (const DomainTask& task : seq.tasks) {
    // Per-class means from train.
    std::map<int, std::vector<double>> mean;
    std::map<int, int> count;
    for (const Sample& s : task.train) {
      auto& m = mean[s.label];
      if (m.empty()) m.assign(s.features.size(), 0.0);
      for (std::size_t j = 0; j < s.features.size(); ++j)
        m[j] += s.features[j];
      ++count[s.label];
    }
    for (auto& [cls, m] : mean)
      for (double& v : m) v /= count[cls];
    int correct = 0;
    for (const Sample& s : task.test) {
      int best = -1;
      double best_d = 0.0;
      for (const auto& [cls, m] : mean) {
        double d = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j)
          d += (s.features[j] - m[j]) * (s.features[j] - m[j]);
        if (best < 0 || d < best_d) {
          best = cls;
          best_d = d;
        }
      }
      correct += best == s.label;
    }
    CHECK(correct == int(task.test.size()));
  }
}

TEST_CASE("train test split keeps ratio and stays disjoint") {
  const std::vector<Sample> samples = labeled_block(5, 2, 3);  // 10 total
  const auto [train, test] = train_test_split(samples, 0.2, 4);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  std::set<std::int64_t> train_ids;
  for (const Sample& s : train) train_ids.insert(s.id);
  for (const Sample& s : test) CHECK(train_ids.count(s.id) == 0);
}

TEST_CASE("train test split is deterministic in the seed") {
  const std::vector<Sample> samples = labeled_block(10, 3, 4);
  const auto a = train_test_split(samples, 0.3, 77);
  const auto b = train_test_split(samples, 0.3, 77);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("stratified split takes the same count from every class") {
  const std::vector<Sample> samples = labeled_block(25, 4, 2);  // 100 total
  const auto [train, test] = train_test_split(samples, 0.2, 9);
  CHECK(test.size() == 20);
  std::map<int, int> per_class;
  for (const Sample& s : test) ++per_class[s.label];
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 5);
}

TEST_CASE("a single-sample class goes to train with a warning") {
  std::vector<Sample> samples = labeled_block(4, 1, 2);
  Sample lone;
  lone.id = 100;
  lone.label = 1;
  lone.features = {9.0, 9.0};
  samples.push_back(lone);
  WarningList warnings;
  const auto [train, test] = train_test_split(samples, 0.5, 3, &warnings);
  CHECK(!warnings.empty());
  bool lone_in_train = false;
  for (const Sample& s : train) lone_in_train |= s.id == 100;
  CHECK(lone_in_train);
}

TEST_CASE("seven scenes split into seven domains") {
  Manifest m;
  std::int64_t id = 0;
  for (int scene = 0; scene < 7; ++scene)
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 3; ++i) m.rows.push_back(row(id++, c, 0, scene));
  const auto domains = split_manifest(m, SplitType::kScenes, 1);
  CHECK(domains.size() == 7);
}

TEST_CASE("user split partitions the manifest") {
  Manifest m;
  std::int64_t id = 0;
  for (int user = 0; user < 2; ++user)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 4; ++i) m.rows.push_back(row(id++, c, user, c % 2));
  const auto domains = split_manifest(m, SplitType::kUsers, 5);
  REQUIRE(domains.size() == 2);
  std::set<std::int64_t> seen;
  std::size_t total = 0;
  for (const auto& [domain_id, ids] : domains) {
    total += ids.size();
    for (const std::int64_t sid : ids) CHECK(seen.insert(sid).second);
  }
  CHECK(total == m.rows.size());
}

TEST_CASE("hybrid split crosses users with scenes") {
  Manifest m;
  std::int64_t id = 0;
  for (int user = 1; user <= 2; ++user)
    for (int scene = 0; scene < 2; ++scene)
      for (int c = 0; c < 2; ++c) m.rows.push_back(row(id++, c, user, scene));
  const auto domains = split_manifest(m, SplitType::kHybrid, 2);
  CHECK(domains.size() == 4);
}

TEST_CASE("a domain missing a class is reported, not fatal") {
  Manifest m;
  m.rows.push_back(row(0, 0, 0, 0));
  m.rows.push_back(row(1, 1, 0, 0));
  m.rows.push_back(row(2, 0, 1, 0));  // user 1 never sees class 1
  WarningList warnings;
  const auto domains = split_manifest(m, SplitType::kUsers, 0, &warnings);
  CHECK(domains.size() == 2);
  REQUIRE(!warnings.empty());
  CHECK(warnings[0].find("class") != std::string::npos);
}

TEST_CASE("empty manifest cannot be split") {
  CHECK_THROWS_AS(split_manifest(Manifest{}, SplitType::kScenes, 0),
                  InputError);
}

TEST_CASE("task order is a seeded permutation of the domains") {
  Manifest m;
  std::int64_t id = 0;
  for (int scene = 0; scene < 6; ++scene)
    m.rows.push_back(row(id++, 0, 0, scene));
  const auto a = split_manifest(m, SplitType::kScenes, 3);
  const auto b = split_manifest(m, SplitType::kScenes, 3);
  CHECK(a == b);
  std::set<int> ids_a, ids_seen;
  for (const auto& [domain_id, ids] : a) ids_a.insert(domain_id);
  CHECK(ids_a.size() == 6);
}

TEST_CASE("split type names round-trip") {
  for (const SplitType t :
       {SplitType::kUsers, SplitType::kScenes, SplitType::kHybrid})
    CHECK(split_type_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(split_type_from_string("frames"), ParseError);
}

TEST_CASE("manifest csv round-trips") {
  TempDir tmp;
  Manifest m;
  for (int i = 0; i < 5; ++i) m.rows.push_back(row(i * 7, i % 2, i % 3, i));
  const fs::path p = tmp.path / "manifest.csv";
  write_manifest_csv(p, m);
  const Manifest back = read_manifest_csv(p);
  CHECK(back.rows == m.rows);
}

TEST_CASE("manifest with a wrong header is rejected") {
  TempDir tmp;
  const fs::path p = tmp.path / "bad.csv";
  std::ofstream(p) << "id,class,user,scene,ref\n1,0,0,0,0\n";
  CHECK_THROWS_AS(read_manifest_csv(p), ParseError);
}

TEST_CASE("feature store round-trips") {
  TempDir tmp;
  FeatureStore store;
  store.dim = 3;
  store.rows = {{1.0f, 2.0f, 3.0f}, {-0.5f, 0.0f, 9.25f}};
  const fs::path p = tmp.path / "features.fvec";
  write_feature_store(p, store);
  const FeatureStore back = read_feature_store(p);
  CHECK(back.dim == store.dim);
  CHECK(back.rows == store.rows);
}

TEST_CASE("feature store with a wrong magic is rejected") {
  TempDir tmp;
  const fs::path p = tmp.path / "bad.fvec";
  std::ofstream(p, std::ios::binary) << "NOPE\x01\x00\x00\x00";
  CHECK_THROWS_AS(read_feature_store(p), ParseError);
}

TEST_CASE("sequence assembly from a seven-scene manifest yields seven tasks") {
  Manifest m;
  FeatureStore store;
  store.dim = 4;
  std::int64_t id = 0;
  for (int scene = 0; scene < 7; ++scene)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 8; ++i) {
        ManifestRow r = row(id, c, 0, scene);
        r.feature_ref = id;
        m.rows.push_back(r);
        store.rows.push_back({float(scene), float(c), float(i), 1.0f});
        ++id;
      }
  WarningList warnings;
  const DomainSequence seq =
      sequence_from_manifest(m, store, SplitType::kScenes, 0.25, 12, &warnings);
  CHECK(seq.tasks.size() == 7);
  CHECK(seq.num_classes == 3);
  CHECK(seq.feature_dim == 4);
  for (const DomainTask& task : seq.tasks) {
    CHECK(task.train.size() == 18);  // 24 per scene, quarter held out
    CHECK(task.test.size() == 6);
  }
}

TEST_CASE("split plan csv lists every sample exactly once") {
  TempDir tmp;
  SyntheticConfig cfg = small_cfg();
  cfg.num_domains = 2;
  const DomainSequence seq = generate_synthetic_stream(cfg);
  const fs::path p = tmp.path / "split_plan.csv";
  write_split_plan_csv(p, seq);

  std::ifstream in(p);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "task_index,domain_id,sample_id,split");
  std::size_t rows = 0, trains = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string task, domain, sid, split;
    std::getline(ls, task, ',');
    std::getline(ls, domain, ',');
    std::getline(ls, sid, ',');
    std::getline(ls, split, ',');
    CHECK((split == "train" || split == "test"));
    trains += split == "train";
    CHECK(ids.insert(sid).second);
  }
  std::size_t expected = 0, expected_train = 0;
  for (const DomainTask& t : seq.tasks) {
    expected += t.train.size() + t.test.size();
    expected_train += t.train.size();
  }
  CHECK(rows == expected);
  CHECK(trains == expected_train);
}
