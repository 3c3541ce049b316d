#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drift/types.hpp"

namespace drift {

// Affine per-domain shift: rotation in the (0,1) coordinate plane,
// isotropic scaling, then translation along the last feature axis.
// Domain k applies the shift k times.
struct DomainShift {
  double rotation_angle = 0.0;
  double translation_magnitude = 0.0;
  double scale_factor = 1.0;

  bool operator==(const DomainShift&) const = default;
};

struct SyntheticConfig {
  int num_domains = 1;
  int num_classes = 2;
  int feature_dim = 2;
  int samples_per_class_per_domain = 10;
  double class_separation = 2.0;
  DomainShift domain_shift;
  double noise_std = 0.0;
  double test_ratio = 0.2;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticConfig&) const = default;
};

// Throws ConfigError naming the offending field.
void validate(const SyntheticConfig& cfg);

// Applies the shift to x exactly `repetitions` times; 0 is the identity.
std::vector<double> apply_domain_transform(std::span<const double> x,
                                           const DomainShift& shift,
                                           int repetitions);

// Gaussian class clusters, class c centered at c * class_separation along
// axis 0, shifted per domain by composing the domain transform. Train/test
// per task come from train_test_split with cfg.test_ratio. Deterministic
// in cfg.seed.
DomainSequence generate_synthetic_stream(const SyntheticConfig& cfg,
                                         WarningList* warnings = nullptr);

// Class-stratified split, |test| ~= round(ratio * n) per class (clamped so
// every class keeps at least one train sample). A single-sample class goes
// to train with a warning.
std::pair<std::vector<Sample>, std::vector<Sample>> train_test_split(
    const std::vector<Sample>& samples, double ratio, std::uint64_t seed,
    WarningList* warnings = nullptr);

// ---------------------------------------------------------------------------
// Manifest-driven benchmarks
// ---------------------------------------------------------------------------

struct ManifestRow {
  std::int64_t sample_id = 0;
  int class_id = 0;
  int user_id = 0;
  int scene_id = 0;
  std::int64_t feature_ref = 0;

  bool operator==(const ManifestRow&) const = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
};

enum class SplitType { kUsers, kScenes, kHybrid };

std::string to_string(SplitType t);
SplitType split_type_from_string(const std::string& s);

// CSV with header exactly `sample_id,class_id,user_id,scene_id,feature_ref`.
Manifest read_manifest_csv(const std::filesystem::path& path);
void write_manifest_csv(const std::filesystem::path& path, const Manifest& m);

// One task per distinct key (user, scene, or user x scene pair). Domain ids
// are assigned 0..n-1 over keys in ascending key order; the returned task
// order is an order_seed-determined permutation. The domains partition the
// manifest. Domains missing a class (relative to the classes present in the
// manifest) are reported as warnings.
std::vector<std::pair<int, std::vector<std::int64_t>>> split_manifest(
    const Manifest& m, SplitType split_type, std::uint64_t order_seed,
    WarningList* warnings = nullptr);

// Binary feature store: magic "FVEC", u32 LE count, u32 LE dim, then
// count*dim IEEE-754 f32 LE row-major. Row i serves manifest rows whose
// feature_ref == i.
struct FeatureStore {
  std::uint32_t dim = 0;
  std::vector<std::vector<float>> rows;
};

void write_feature_store(const std::filesystem::path& path,
                         const FeatureStore& store);
FeatureStore read_feature_store(const std::filesystem::path& path);

// Assembles the full incremental sequence from a manifest plus its feature
// store: split into domains, order tasks by order_seed, then per-task
// stratified train/test split.
DomainSequence sequence_from_manifest(const Manifest& m,
                                      const FeatureStore& store,
                                      SplitType split_type, double test_ratio,
                                      std::uint64_t order_seed,
                                      WarningList* warnings = nullptr);

// Split plan CSV: `task_index,domain_id,sample_id,split`.
void write_split_plan_csv(const std::filesystem::path& path,
                          const DomainSequence& seq);

}  // namespace drift
