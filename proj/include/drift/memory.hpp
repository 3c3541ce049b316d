#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drift/rng.hpp"
#include "drift/types.hpp"

namespace drift {

// Fixed-capacity exemplar store. The default mode is a classic global
// reservoir: after n >= capacity offers every offered sample is resident
// with probability capacity/n. The class-balanced mode keeps an
// independent per-class reservoir inside the same capacity.
struct MemoryBuffer {
  std::size_t capacity = 0;
  std::vector<Sample> items;
  std::uint64_t seen_count = 0;
  // Non-empty only in class-balanced mode: per-class offer counts.
  std::vector<std::uint64_t> class_seen;
};

MemoryBuffer make_buffer(std::size_t capacity, bool class_balanced = false,
                         int num_classes = 0);

// Offers one stream sample. seen_count increments exactly once per call;
// |items| never exceeds capacity. Consumes randomness only when an actual
// replacement decision is needed, so capacity-0 buffers leave the rng
// stream untouched.
void reservoir_update(MemoryBuffer& buf, const Sample& s, Rng& rng);

// min(k, |items|) samples uniformly without replacement; an empty buffer
// yields an empty batch and consumes no randomness.
std::vector<Sample> draw_replay_batch(const MemoryBuffer& buf, std::size_t k,
                                      Rng& rng);

// Per class, ranks samples by Euclidean distance to the class feature mean
// (ascending, ties by ascending sample id), then takes rounds of one per
// class in ascending class-id order until m are chosen. features[i] must
// correspond to samples[i].
std::vector<Sample> herding_select(const std::vector<Sample>& samples,
                                   const std::vector<std::vector<double>>& features,
                                   std::size_t m,
                                   WarningList* warnings = nullptr);

// Convenience overload ranking in the samples' own feature space.
std::vector<Sample> herding_select(const std::vector<Sample>& samples,
                                   std::size_t m,
                                   WarningList* warnings = nullptr);

// Ranks by Shannon entropy of the given prediction, descending, ties by
// ascending sample id; takes the top min(m, n).
std::vector<Sample> entropy_select(const std::vector<Sample>& samples,
                                   const std::vector<std::vector<double>>& model_probs,
                                   std::size_t m);

// Uniform without replacement, min(m, n) results.
std::vector<Sample> random_select(const std::vector<Sample>& samples,
                                  std::size_t m, Rng& rng);

// Debug/audit dump: `slot,sample_id,label,domain_id,seen_count`.
void write_buffer_dump_csv(const std::filesystem::path& path,
                           const MemoryBuffer& buf);

}  // namespace drift
