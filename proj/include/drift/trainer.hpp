#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drift/datagen.hpp"
#include "drift/memory.hpp"
#include "drift/metrics.hpp"
#include "drift/model.hpp"
#include "drift/rng.hpp"
#include "drift/types.hpp"

namespace drift {

enum class Method {
  kDrift,
  kNaive,
  kJoint,
  kEwc,
  kLwf,
  kDriftRandom,
  kDriftHerding,
  kDriftEntropy,
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// The drift family replays from a memory buffer; the others never touch one.
bool uses_buffer(Method m);

enum class SnapshotPolicyKind { kTaskBoundary, kEveryNSteps };

struct SnapshotPolicy {
  SnapshotPolicyKind kind = SnapshotPolicyKind::kTaskBoundary;
  // Optimizer-step cadence for kEveryNSteps; must be >= 1 there.
  std::int64_t every_n = 0;

  bool operator==(const SnapshotPolicy&) const = default;
};

std::string to_string(const SnapshotPolicy& p);
SnapshotPolicy snapshot_policy_from_string(const std::string& s);

struct MethodConfig {
  Method method = Method::kDrift;
  LossConfig loss;
  std::size_t buffer_capacity = 200;
  int epochs_per_task = 80;
  int batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  double lambda_ewc = 3e3;
  SnapshotPolicy snapshot_policy;
  std::uint64_t seed = 0;

  Arch arch = Arch::kMlp;
  int hidden_width = 32;
  // 0 means "match batch_size".
  int replay_batch_size = 0;
  std::size_t fisher_sample_cap = 1024;
  // Report label; empty means to_string(method).
  std::string name;

  bool operator==(const MethodConfig&) const = default;
};

void validate(const MethodConfig& cfg);
std::string method_label(const MethodConfig& cfg);

struct TrainState {
  ModelParams params;
  OptState opt;
  MemoryBuffer buffer;
  std::optional<ModelParams> teacher;
  // (anchor params, diagonal fisher) per finished task.
  std::vector<std::pair<ModelParams, std::vector<double>>> ewc_anchors;
  // Batch shuffling and buffer decisions draw from separate streams so the
  // batch order a method sees never depends on whether it keeps a buffer.
  Rng shuffle_rng;
  Rng buffer_rng;
  int tasks_seen = 0;
  std::int64_t steps_seen = 0;
  int teacher_refreshes = 0;
};

TrainState make_train_state(const MethodConfig& cfg, int feature_dim,
                            int num_classes);

// Writes `step,task_index,loss_total,loss_class,loss_kd,buffer_fill` rows,
// one per log_every optimizer steps.
class RunLogger {
 public:
  RunLogger(const std::filesystem::path& path, int log_every);
  void log(std::int64_t step, int task_index, double loss_total,
           double loss_class, double loss_kd, std::size_t buffer_fill);

 private:
  std::ofstream out_;
  int log_every_;
};

// Copies params into teacher unconditionally.
void snapshot_teacher(TrainState& state);
// Policy triggers: call the first after every optimizer step, the second at
// every task end. Each refreshes the teacher only if its policy fires.
void maybe_snapshot_after_step(TrainState& state, const SnapshotPolicy& policy);
void maybe_snapshot_at_task_end(TrainState& state,
                                const SnapshotPolicy& policy);

// One task of replay + distillation training. Classic drift offers each
// train sample to the reservoir once (streamed during the first epoch);
// drift_random/drift_herding/drift_entropy instead rebuild the buffer at
// task end with an equal per-domain quota chosen by their selector.
void train_drift_task(TrainState& state, const DomainTask& task,
                      const MethodConfig& cfg, RunLogger* logger = nullptr);

// naive: plain cross-entropy. ewc: adds quadratic anchor penalties and
// appends a new (params, fisher) anchor at task end. lwf: adds distillation
// against the task-boundary teacher, no buffer.
void train_baseline_task(TrainState& state, const DomainTask& task,
                         const MethodConfig& cfg, RunLogger* logger = nullptr);

// Trains on the shuffled union of all task train sets with the same total
// step budget the sequential runs get.
ModelParams train_joint(const DomainSequence& seq, const MethodConfig& cfg,
                        RunLogger* logger = nullptr);

struct RunSequenceError : std::runtime_error {
  RunSequenceError(const std::string& msg, AccuracyMatrix partial_matrix)
      : std::runtime_error(msg), partial(std::move(partial_matrix)) {}
  AccuracyMatrix partial;
};

// End-of-run state the harness persists alongside the matrix.
struct RunArtifacts {
  ModelParams final_params;
  MemoryBuffer final_buffer;
};

// Trains tasks in order; after each task, evaluates every task's test set to
// fill column t of the matrix (rows above the diagonal hold zero-shot
// accuracy). The joint method fills columns at equal-budget checkpoints of
// its single union run. Throws RunSequenceError with the partial matrix if a
// task fails mid-run.
AccuracyMatrix run_sequence(const DomainSequence& seq, const MethodConfig& cfg,
                            RunLogger* logger = nullptr,
                            RunArtifacts* artifacts = nullptr);

}  // namespace drift
