#include "drift/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "drift/io_util.hpp"

namespace drift {

std::string to_string(Method m) {
  switch (m) {
    case Method::kDrift: return "drift";
    case Method::kNaive: return "naive";
    case Method::kJoint: return "joint";
    case Method::kEwc: return "ewc";
    case Method::kLwf: return "lwf";
    case Method::kDriftRandom: return "drift_random";
    case Method::kDriftHerding: return "drift_herding";
    case Method::kDriftEntropy: return "drift_entropy";
  }
  throw ConfigError("unknown method enum value");
}

Method method_from_string(const std::string& s) {
  if (s == "drift") return Method::kDrift;
  if (s == "naive") return Method::kNaive;
  if (s == "joint") return Method::kJoint;
  if (s == "ewc") return Method::kEwc;
  if (s == "lwf") return Method::kLwf;
  if (s == "drift_random") return Method::kDriftRandom;
  if (s == "drift_herding") return Method::kDriftHerding;
  if (s == "drift_entropy") return Method::kDriftEntropy;
  throw ConfigError("unknown method: " + s);
}

bool uses_buffer(Method m) {
  return m == Method::kDrift || m == Method::kDriftRandom ||
         m == Method::kDriftHerding || m == Method::kDriftEntropy;
}

std::string to_string(const SnapshotPolicy& p) {
  if (p.kind == SnapshotPolicyKind::kTaskBoundary) return "task_boundary";
  return "every_n_steps(" + std::to_string(p.every_n) + ")";
}

SnapshotPolicy snapshot_policy_from_string(const std::string& s) {
  if (s == "task_boundary") return {};
  const std::string prefix = "every_n_steps(";
  if (s.size() > prefix.size() + 1 && s.rfind(prefix, 0) == 0 &&
      s.back() == ')') {
    const std::string num = s.substr(prefix.size(), s.size() - prefix.size() - 1);
    std::int64_t n = 0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
    if (ec == std::errc() && ptr == num.data() + num.size()) {
      if (n < 1)
        throw ConfigError("snapshot_policy every_n_steps needs n >= 1");
      return {SnapshotPolicyKind::kEveryNSteps, n};
    }
  }
  throw ConfigError("unknown snapshot_policy: " + s);
}

void validate(const MethodConfig& cfg) {
  validate(cfg.loss);
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.epochs_per_task < 1)
    throw ConfigError("epochs_per_task must be >= 1");
  if (!std::isfinite(cfg.lr) || cfg.lr <= 0.0)
    throw ConfigError("lr must be positive and finite");
  if (!std::isfinite(cfg.momentum) || cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ConfigError("momentum must be in [0, 1)");
  if (!std::isfinite(cfg.lambda_ewc) || cfg.lambda_ewc < 0.0)
    throw ConfigError("lambda_ewc must be >= 0 and finite");
  if (cfg.replay_batch_size < 0)
    throw ConfigError("replay_batch_size must be >= 0");
  if (cfg.snapshot_policy.kind == SnapshotPolicyKind::kEveryNSteps &&
      cfg.snapshot_policy.every_n < 1)
    throw ConfigError("snapshot_policy every_n_steps needs n >= 1");
  if (cfg.arch == Arch::kMlp && cfg.hidden_width < 1)
    throw ConfigError("hidden_width must be >= 1 for the mlp arch");
  if (cfg.fisher_sample_cap < 1)
    throw ConfigError("fisher_sample_cap must be >= 1");
}

std::string method_label(const MethodConfig& cfg) {
  return cfg.name.empty() ? to_string(cfg.method) : cfg.name;
}

namespace {

constexpr std::uint64_t kInitStream = 0xA11;
constexpr std::uint64_t kShuffleStream = 0xD51;
constexpr std::uint64_t kBufferStream = 0xB0F;

std::int64_t steps_for(std::size_t n, int batch, int epochs) {
  const auto b = static_cast<std::int64_t>(batch);
  const auto nn = static_cast<std::int64_t>(n);
  return static_cast<std::int64_t>(epochs) * ((nn + b - 1) / b);
}

std::size_t replay_k(const MethodConfig& cfg) {
  return cfg.replay_batch_size > 0
             ? static_cast<std::size_t>(cfg.replay_batch_size)
             : static_cast<std::size_t>(cfg.batch_size);
}

std::vector<std::size_t> iota_idx(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

BatchView gather(const std::vector<Sample>& data,
                 const std::vector<std::size_t>& idx, std::size_t lo,
                 std::size_t hi) {
  BatchView out;
  out.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) out.push_back(&data[idx[i]]);
  return out;
}

// Rebuilds the buffer from per-domain pools with an equal split of the
// capacity, remainder to the lowest domain ids. Old domains re-select from
// their surviving exemplars; the current domain from its full train set.
void ablation_refill(TrainState& state, const DomainTask& task,
                     const MethodConfig& cfg) {
  std::map<int, std::vector<Sample>> pools;
  for (const Sample& s : state.buffer.items) pools[s.domain_id].push_back(s);
  pools[task.domain_id] = task.train;

  const std::size_t groups = pools.size();
  const std::size_t capacity = state.buffer.capacity;
  std::vector<Sample> next;
  next.reserve(std::min(capacity, next.max_size()));
  std::size_t gi = 0;
  for (auto& [dom, pool] : pools) {
    const std::size_t quota =
        capacity / groups + (gi < capacity % groups ? 1 : 0);
    ++gi;
    if (quota == 0) continue;
    std::vector<Sample> chosen;
    switch (cfg.method) {
      case Method::kDriftRandom:
        chosen = random_select(pool, quota, state.buffer_rng);
        break;
      case Method::kDriftHerding:
        chosen = herding_select(pool, quota, nullptr);
        break;
      case Method::kDriftEntropy: {
        std::vector<std::vector<double>> probs;
        probs.reserve(pool.size());
        for (const Sample& s : pool)
          probs.push_back(
              tempered_softmax(forward(state.params, s.features), 1.0));
        chosen = entropy_select(pool, probs, quota);
        break;
      }
      default:
        throw ConfigError("ablation refill on non-ablation method " +
                          to_string(cfg.method));
    }
    for (Sample& s : chosen) next.push_back(std::move(s));
  }
  state.buffer.items = std::move(next);
  state.buffer.seen_count += task.train.size();
}

void fill_column(AccuracyMatrix& m, const ModelParams& params,
                 const DomainSequence& seq, std::size_t t) {
  for (std::size_t k = 0; k < seq.tasks.size(); ++k)
    m.a[k][t] = evaluate(params, seq.tasks[k].test);
}

ModelParams joint_run(const DomainSequence& seq, const MethodConfig& cfg,
                      RunLogger* logger, AccuracyMatrix* matrix) {
  validate(cfg);
  if (seq.tasks.empty()) throw InputError("joint training: empty sequence");

  std::vector<Sample> pool;
  std::vector<std::int64_t> budgets;
  for (const DomainTask& task : seq.tasks) {
    if (task.train.empty())
      throw InputError("joint training: task with an empty train set");
    pool.insert(pool.end(), task.train.begin(), task.train.end());
    budgets.push_back(
        steps_for(task.train.size(), cfg.batch_size, cfg.epochs_per_task));
  }

  TrainState state = make_train_state(cfg, seq.feature_dim, seq.num_classes);
  const std::size_t n = pool.size();
  const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> idx = iota_idx(n);
  std::size_t lo = n;  // forces a shuffle before the first batch

  for (std::size_t chunk = 0; chunk < budgets.size(); ++chunk) {
    for (std::int64_t s = 0; s < budgets[chunk]; ++s) {
      if (lo >= n) {
        state.shuffle_rng.shuffle(idx);
        lo = 0;
      }
      const std::size_t hi = std::min(n, lo + bsz);
      const BatchView current = gather(pool, idx, lo, hi);
      lo = hi;
      const TotalLossResult res =
          total_loss_and_grad(state.params, nullptr, current, {}, cfg.loss);
      sgd_update(state.params, state.opt, res.grads);
      ++state.steps_seen;
      if (logger)
        logger->log(state.steps_seen, static_cast<int>(chunk), res.total,
                    res.class_component, res.kd_component, 0);
    }
    if (matrix != nullptr) fill_column(*matrix, state.params, seq, chunk);
  }
  return state.params;
}

}  // namespace

TrainState make_train_state(const MethodConfig& cfg, int feature_dim,
                            int num_classes) {
  validate(cfg);
  TrainState st{
      .params = init_params(cfg.arch, feature_dim, num_classes,
                            cfg.arch == Arch::kMlp ? cfg.hidden_width : 0,
                            mix_seed(cfg.seed, kInitStream)),
      .opt = {},
      .buffer = make_buffer(uses_buffer(cfg.method) ? cfg.buffer_capacity : 0),
      .teacher = std::nullopt,
      .ewc_anchors = {},
      .shuffle_rng = Rng(mix_seed(cfg.seed, kShuffleStream)),
      .buffer_rng = Rng(mix_seed(cfg.seed, kBufferStream)),
  };
  st.opt = make_opt_state(st.params, cfg.lr, cfg.momentum);
  return st;
}

RunLogger::RunLogger(const std::filesystem::path& path, int log_every)
    : out_(path, std::ios::binary), log_every_(log_every) {
  if (log_every_ < 1) throw ConfigError("log_every must be >= 1");
  if (!out_) throw IoError("cannot write run log: " + path.string());
  out_ << "step,task_index,loss_total,loss_class,loss_kd,buffer_fill\n";
  out_.flush();
}

void RunLogger::log(std::int64_t step, int task_index, double loss_total,
                    double loss_class, double loss_kd,
                    std::size_t buffer_fill) {
  if (step % log_every_ != 0) return;
  out_ << step << ',' << task_index << ',' << fmt_double(loss_total) << ','
       << fmt_double(loss_class) << ',' << fmt_double(loss_kd) << ','
       << buffer_fill << "\n";
  out_.flush();
}

void snapshot_teacher(TrainState& state) {
  state.teacher = state.params;
  ++state.teacher_refreshes;
}

void maybe_snapshot_after_step(TrainState& state,
                               const SnapshotPolicy& policy) {
  if (policy.kind != SnapshotPolicyKind::kEveryNSteps) return;
  if (policy.every_n < 1)
    throw ConfigError("snapshot_policy every_n_steps needs n >= 1");
  if (state.steps_seen % policy.every_n == 0) snapshot_teacher(state);
}

void maybe_snapshot_at_task_end(TrainState& state,
                                const SnapshotPolicy& policy) {
  if (policy.kind == SnapshotPolicyKind::kTaskBoundary)
    snapshot_teacher(state);
}

void train_drift_task(TrainState& state, const DomainTask& task,
                      const MethodConfig& cfg, RunLogger* logger) {
  validate(cfg);
  if (!uses_buffer(cfg.method))
    throw ConfigError("train_drift_task: method " + to_string(cfg.method) +
                      " does not replay from a buffer");
  if (task.train.empty())
    throw InputError("train_drift_task: empty train set");

  const bool classic = cfg.method == Method::kDrift;
  const std::size_t n = task.train.size();
  const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t rk = replay_k(cfg);
  std::vector<std::size_t> idx = iota_idx(n);

  for (int epoch = 0; epoch < cfg.epochs_per_task; ++epoch) {
    state.shuffle_rng.shuffle(idx);
    for (std::size_t lo = 0; lo < n; lo += bsz) {
      const std::size_t hi = std::min(n, lo + bsz);
      const BatchView current = gather(task.train, idx, lo, hi);

      // No past data exists before the second task; replay would only echo
      // the current stream.
      std::vector<Sample> replay_store;
      if (state.tasks_seen > 0)
        replay_store = draw_replay_batch(state.buffer, rk, state.buffer_rng);
      const BatchView replay = batch_view(replay_store);

      const ModelParams* teacher =
          state.teacher.has_value() ? &state.teacher.value() : nullptr;
      const TotalLossResult res =
          total_loss_and_grad(state.params, teacher, current, replay, cfg.loss);
      sgd_update(state.params, state.opt, res.grads);
      ++state.steps_seen;
      maybe_snapshot_after_step(state, cfg.snapshot_policy);

      // Each train sample visits the reservoir once per task, in the order
      // the first epoch streams it.
      if (classic && epoch == 0)
        for (std::size_t i = lo; i < hi; ++i)
          reservoir_update(state.buffer, task.train[idx[i]], state.buffer_rng);

      if (logger)
        logger->log(state.steps_seen, state.tasks_seen, res.total,
                    res.class_component, res.kd_component,
                    state.buffer.items.size());
    }
  }

  if (!classic) ablation_refill(state, task, cfg);
  ++state.tasks_seen;
  maybe_snapshot_at_task_end(state, cfg.snapshot_policy);
}

void train_baseline_task(TrainState& state, const DomainTask& task,
                         const MethodConfig& cfg, RunLogger* logger) {
  validate(cfg);
  if (cfg.method != Method::kNaive && cfg.method != Method::kEwc &&
      cfg.method != Method::kLwf)
    throw ConfigError("train_baseline_task: method " + to_string(cfg.method) +
                      " is not a sequential baseline");
  if (task.train.empty())
    throw InputError("train_baseline_task: empty train set");

  const std::size_t n = task.train.size();
  const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> idx = iota_idx(n);

  LossConfig loss_cfg = cfg.loss;
  if (cfg.method != Method::kLwf) loss_cfg.use_kd_loss = false;
  const BatchView no_replay;

  for (int epoch = 0; epoch < cfg.epochs_per_task; ++epoch) {
    state.shuffle_rng.shuffle(idx);
    for (std::size_t lo = 0; lo < n; lo += bsz) {
      const std::size_t hi = std::min(n, lo + bsz);
      const BatchView current = gather(task.train, idx, lo, hi);
      const ModelParams* teacher =
          cfg.method == Method::kLwf && state.teacher.has_value()
              ? &state.teacher.value()
              : nullptr;
      TotalLossResult res =
          total_loss_and_grad(state.params, teacher, current, no_replay,
                              loss_cfg);

      // A zero-strength penalty is skipped outright so it cannot perturb
      // a single gradient bit.
      if (cfg.method == Method::kEwc && cfg.lambda_ewc != 0.0) {
        for (const auto& [anchor, fisher] : state.ewc_anchors) {
          const LossResult pen =
              ewc_penalty_and_grad(state.params, anchor, fisher,
                                   cfg.lambda_ewc);
          res.total += pen.loss;
          for (std::size_t i = 0; i < res.grads.size(); ++i)
            res.grads[i] += pen.grads[i];
        }
      }

      sgd_update(state.params, state.opt, res.grads);
      ++state.steps_seen;
      maybe_snapshot_after_step(state, cfg.snapshot_policy);
      if (logger)
        logger->log(state.steps_seen, state.tasks_seen, res.total,
                    res.class_component, res.kd_component, 0);
    }
  }

  if (cfg.method == Method::kEwc)
    state.ewc_anchors.emplace_back(
        state.params,
        fisher_diag(state.params, batch_view(task.train),
                    cfg.fisher_sample_cap));
  ++state.tasks_seen;
  maybe_snapshot_at_task_end(state, cfg.snapshot_policy);
}

ModelParams train_joint(const DomainSequence& seq, const MethodConfig& cfg,
                        RunLogger* logger) {
  return joint_run(seq, cfg, logger, nullptr);
}

AccuracyMatrix run_sequence(const DomainSequence& seq, const MethodConfig& cfg,
                            RunLogger* logger, RunArtifacts* artifacts) {
  validate(cfg);
  if (seq.tasks.empty()) throw InputError("run_sequence: empty sequence");
  for (std::size_t k = 0; k < seq.tasks.size(); ++k) {
    if (seq.tasks[k].train.empty())
      throw InputError("run_sequence: task " + std::to_string(k) +
                       " has an empty train set");
    if (seq.tasks[k].test.empty())
      throw InputError("run_sequence: task " + std::to_string(k) +
                       " has an empty test set");
  }

  AccuracyMatrix m =
      make_accuracy_matrix(static_cast<int>(seq.tasks.size()));

  if (cfg.method == Method::kJoint) {
    try {
      ModelParams final_params = joint_run(seq, cfg, logger, &m);
      if (artifacts != nullptr) artifacts->final_params = std::move(final_params);
    } catch (const std::exception& e) {
      throw RunSequenceError(std::string("joint run failed: ") + e.what(), m);
    }
    return m;
  }

  TrainState state = make_train_state(cfg, seq.feature_dim, seq.num_classes);
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    try {
      if (uses_buffer(cfg.method))
        train_drift_task(state, seq.tasks[t], cfg, logger);
      else
        train_baseline_task(state, seq.tasks[t], cfg, logger);
      fill_column(m, state.params, seq, t);
    } catch (const std::exception& e) {
      throw RunSequenceError(
          "task " + std::to_string(t) + " failed: " + e.what(), m);
    }
  }
  if (artifacts != nullptr) {
    artifacts->final_params = std::move(state.params);
    artifacts->final_buffer = std::move(state.buffer);
  }
  return m;
}

}  // namespace drift
