#include "drift/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "drift/io_util.hpp"

namespace drift {

MemoryBuffer make_buffer(std::size_t capacity, bool class_balanced,
                         int num_classes) {
  MemoryBuffer buf;
  buf.capacity = capacity;
  if (class_balanced) {
    if (num_classes < 1)
      throw ConfigError("class-balanced buffer needs num_classes >= 1");
    buf.class_seen.assign(static_cast<std::size_t>(num_classes), 0);
  }
  return buf;
}

namespace {

std::size_t class_quota(const MemoryBuffer& buf, std::size_t cls) {
  const std::size_t c = buf.class_seen.size();
  return buf.capacity / c + (cls < buf.capacity % c ? 1 : 0);
}

void balanced_update(MemoryBuffer& buf, const Sample& s, Rng& rng) {
  const auto cls = static_cast<std::size_t>(s.label);
  if (s.label < 0 || cls >= buf.class_seen.size())
    throw InputError("reservoir_update: label " + std::to_string(s.label) +
                     " outside the balanced buffer's class range");
  const std::size_t quota = class_quota(buf, cls);
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < buf.items.size(); ++i)
    if (static_cast<std::size_t>(buf.items[i].label) == cls) slots.push_back(i);

  if (quota > 0) {
    if (slots.size() < quota) {
      buf.items.push_back(s);
    } else {
      const std::uint64_t j = rng.below(buf.class_seen[cls] + 1);
      if (j < quota) buf.items[slots[static_cast<std::size_t>(j)]] = s;
    }
  }
  ++buf.class_seen[cls];
  ++buf.seen_count;
}

}  // namespace

void reservoir_update(MemoryBuffer& buf, const Sample& s, Rng& rng) {
  if (!buf.class_seen.empty()) {
    balanced_update(buf, s, rng);
    return;
  }
  if (buf.capacity == 0) {
    ++buf.seen_count;
    return;
  }
  if (buf.seen_count < buf.capacity) {
    buf.items.push_back(s);
  } else {
    const std::uint64_t j = rng.below(buf.seen_count + 1);
    if (j < buf.capacity) buf.items[static_cast<std::size_t>(j)] = s;
  }
  ++buf.seen_count;
}

std::vector<Sample> draw_replay_batch(const MemoryBuffer& buf, std::size_t k,
                                      Rng& rng) {
  const std::size_t n = buf.items.size();
  const std::size_t take = std::min(k, n);
  std::vector<Sample> out;
  if (take == 0) return out;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(buf.items[idx[i]]);
  return out;
}

std::vector<Sample> herding_select(const std::vector<Sample>& samples,
                                   const std::vector<std::vector<double>>& features,
                                   std::size_t m, WarningList* warnings) {
  if (m < 1) throw ConfigError("herding_select: m must be >= 1");
  if (features.size() != samples.size())
    throw ShapeError("herding_select: features/samples size mismatch");
  if (m >= samples.size()) {
    if (m > samples.size())
      warn(warnings, "herding_select: requested " + std::to_string(m) +
                         " of " + std::to_string(samples.size()) +
                         " samples; returning all");
    return samples;
  }

  // Rank each class's samples by distance to the class feature mean.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_class[samples[i].label].push_back(i);

  std::map<int, std::vector<std::size_t>> ranked;
  for (const auto& [cls, idx] : by_class) {
    const std::size_t dim = features[idx[0]].size();
    std::vector<double> mean(dim, 0.0);
    for (const std::size_t i : idx) {
      if (features[i].size() != dim)
        throw ShapeError("herding_select: inconsistent feature dims");
      for (std::size_t j = 0; j < dim; ++j) mean[j] += features[i][j];
    }
    for (double& v : mean) v /= static_cast<double>(idx.size());

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(idx.size());
    for (const std::size_t i : idx) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = features[i][j] - mean[j];
        dist2 += diff * diff;
      }
      scored.emplace_back(dist2, i);
    }
    std::sort(scored.begin(), scored.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return samples[a.second].id < samples[b.second].id;
              });
    auto& r = ranked[cls];
    for (const auto& [dist, i] : scored) r.push_back(i);
  }

  // Rounds of one per class, ascending class id.
  std::vector<Sample> out;
  out.reserve(m);
  std::map<int, std::size_t> cursor;
  while (out.size() < m) {
    bool any = false;
    for (const auto& [cls, idx] : ranked) {
      std::size_t& c = cursor[cls];
      if (c >= idx.size()) continue;
      out.push_back(samples[idx[c]]);
      ++c;
      any = true;
      if (out.size() == m) break;
    }
    if (!any) break;
  }
  return out;
}

std::vector<Sample> herding_select(const std::vector<Sample>& samples,
                                   std::size_t m, WarningList* warnings) {
  std::vector<std::vector<double>> features;
  features.reserve(samples.size());
  for (const auto& s : samples) features.push_back(s.features);
  return herding_select(samples, features, m, warnings);
}

std::vector<Sample> entropy_select(const std::vector<Sample>& samples,
                                   const std::vector<std::vector<double>>& model_probs,
                                   std::size_t m) {
  if (model_probs.size() != samples.size())
    throw ShapeError("entropy_select: probs/samples size mismatch");

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double sum = 0.0;
    double entropy = 0.0;
    for (const double p : model_probs[i]) {
      if (p < 0.0)
        throw InputError("entropy_select: negative probability for sample " +
                         std::to_string(samples[i].id));
      sum += p;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InputError("entropy_select: probabilities for sample " +
                       std::to_string(samples[i].id) + " sum to " +
                       fmt_double(sum));
    scored.emplace_back(entropy, i);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return samples[a.second].id < samples[b.second].id;
  });

  std::vector<Sample> out;
  const std::size_t take = std::min(m, samples.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(samples[scored[i].second]);
  return out;
}

std::vector<Sample> random_select(const std::vector<Sample>& samples,
                                  std::size_t m, Rng& rng) {
  const std::size_t n = samples.size();
  const std::size_t take = std::min(m, n);
  std::vector<Sample> out;
  if (take == 0) return out;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(samples[idx[i]]);
  return out;
}

void write_buffer_dump_csv(const std::filesystem::path& path,
                           const MemoryBuffer& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write buffer dump: " + path.string());
  out << "slot,sample_id,label,domain_id,seen_count\n";
  for (std::size_t i = 0; i < buf.items.size(); ++i) {
    const auto& s = buf.items[i];
    out << i << ',' << s.id << ',' << s.label << ',' << s.domain_id << ','
        << buf.seen_count << "\n";
  }
}

}  // namespace drift
