#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "drift/types.hpp"

namespace drift {

enum class Arch { kLinear, kMlp };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

// Classifier parameters in one flat vector. The output layer always has
// num_classes rows: the class set is fixed for the whole sequence.
//
// Layout (row-major):
//   linear: w1 [C x d], b1 [C]
//   mlp:    w1 [h x d], b1 [h], w2 [C x h], b2 [C], tanh hidden layer
struct ModelParams {
  Arch arch = Arch::kLinear;
  int feature_dim = 0;
  int num_classes = 0;
  int hidden_width = 0;  // 0 for linear
  std::vector<double> values;

  bool same_shape(const ModelParams& other) const {
    return arch == other.arch && feature_dim == other.feature_dim &&
           num_classes == other.num_classes &&
           hidden_width == other.hidden_width &&
           values.size() == other.values.size();
  }
  bool operator==(const ModelParams&) const = default;
};

std::size_t param_count(Arch arch, int feature_dim, int num_classes,
                        int hidden_width);

// Gradient (or velocity, or Fisher) storage shares the ModelParams layout.
using GradVec = std::vector<double>;

struct OptState {
  double lr = 1e-3;
  double momentum = 0.9;
  GradVec velocity;
};

struct LossConfig {
  double lambda = 1.0;        // KD weight in the combined objective
  double temperature = 2.0;   // KD softening temperature
  bool use_class_loss = true;
  bool use_kd_loss = true;
  bool kd_t2_scaling = false;  // multiply KD loss/grad by T^2
  bool kd_on_replay = false;   // distill on current u replay instead of current

  bool operator==(const LossConfig&) const = default;
};

void validate(const LossConfig& cfg);

using BatchView = std::vector<const Sample*>;

BatchView batch_view(const std::vector<Sample>& samples);

// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
ModelParams init_params(Arch arch, int feature_dim, int num_classes,
                        int hidden_width, std::uint64_t seed);

OptState make_opt_state(const ModelParams& p, double lr, double momentum);

// Logits for one feature row. Batched paths stack this row computation.
std::vector<double> forward(const ModelParams& p, std::span<const double> x);

// Softmax of logits / T with max subtraction. Entries are positive and sum
// to 1 within 1e-9.
std::vector<double> tempered_softmax(std::span<const double> logits, double t);

struct LossResult {
  double loss = 0.0;
  GradVec grads;
};

// Mean cross-entropy over the batch with exact analytic gradients.
LossResult class_loss_and_grad(const ModelParams& p, const BatchView& batch);

// Mean cross-entropy between the frozen teacher's T-softened distribution
// and the student's. Gradients flow through the student only.
LossResult kd_loss_and_grad(const ModelParams& p, const ModelParams& p_prev,
                            const BatchView& batch, double t,
                            bool t2_scaling = false);

struct TotalLossResult {
  double total = 0.0;
  double class_component = 0.0;
  double kd_component = 0.0;  // unweighted KD value
  GradVec grads;
};

// total = L_class(current u replay) + lambda * L_KD(current).
// A disabled component is skipped entirely, so degenerate configurations
// reproduce the single-loss results bit for bit. teacher may be null
// (no KD contribution).
TotalLossResult total_loss_and_grad(const ModelParams& p,
                                    const ModelParams* teacher,
                                    const BatchView& current,
                                    const BatchView& replay,
                                    const LossConfig& cfg);

// Classical momentum: v <- momentum*v + g; p <- p - lr*v.
// Refuses non-finite gradients without touching the state.
void sgd_update(ModelParams& p, OptState& opt, const GradVec& grads);

// Empirical diagonal Fisher: mean squared per-sample gradient of the
// log-likelihood of the true label, over the first min(samples_cap, n)
// samples.
GradVec fisher_diag(const ModelParams& p, const BatchView& data,
                    std::size_t samples_cap);

// loss = (lambda/2) * sum_i F_i (theta_i - anchor_i)^2.
LossResult ewc_penalty_and_grad(const ModelParams& p,
                                const ModelParams& anchor,
                                const GradVec& fisher, double lambda_ewc);

// Checkpoint: magic "DRFT", u16 LE version, u8 arch tag, u32 LE dims
// (feature_dim, num_classes, hidden_width), then all values as f32 LE.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace drift
