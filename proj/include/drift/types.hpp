#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drift {

// Error taxonomy. Everything user-facing derives from std::runtime_error
// so callers can catch broadly; the subtypes exist for targeted handling
// and for tests that pin down which contract was violated.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics (missing classes in a domain, clamped selections).
// Functions that can warn take an optional sink; a null sink drops them.
using WarningList = std::vector<std::string>;

inline void warn(WarningList* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

// One labeled feature vector. domain_id is evaluation bookkeeping only;
// task-agnostic training paths never read it.
struct Sample {
  std::int64_t id = 0;
  std::vector<double> features;
  int label = 0;
  int domain_id = 0;

  bool operator==(const Sample&) const = default;
};

// One task of the incremental stream: a train/test split drawn from a
// single domain. Every class of the sequence appears in train.
struct DomainTask {
  int domain_id = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Ordered stream of disjoint-domain tasks over a fixed class set.
struct DomainSequence {
  std::vector<DomainTask> tasks;
  int num_classes = 0;
  int feature_dim = 0;
};

}  // namespace drift
