#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "drift/model.hpp"
#include "drift/rng.hpp"

using namespace drift;
namespace fs = std::filesystem;

namespace {

std::vector<Sample> random_batch(Rng& rng, int n, int d, int num_classes) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = i;
    s.label = int(rng.below(std::uint64_t(num_classes)));
    for (int j = 0; j < d; ++j) s.features.push_back(rng.normal() * 1.5);
    out.push_back(std::move(s));
  }
  return out;
}

// Central finite differences against the analytic gradient; relative error
// guarded by max(1, |g|) so near-zero coordinates are compared absolutely.
template <typename LossFn>
double max_grad_mismatch(ModelParams p, LossFn loss_of,
                         const GradVec& analytic) {
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double keep = p.values[i];
    p.values[i] = keep + h;
    const double up = loss_of(p);
    p.values[i] = keep - h;
    const double down = loss_of(p);
    p.values[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(fd)});
    worst = std::max(worst, std::abs(analytic[i] - fd) / scale);
  }
  return worst;
}

ModelParams zero_params(Arch arch, int d, int c, int h) {
  ModelParams p = init_params(arch, d, c, h, 1);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  return p;
}

}  // namespace

TEST_CASE("linear init has the right shape and zero biases") {
  const ModelParams p = init_params(Arch::kLinear, 4, 3, 0, 11);
  CHECK(p.values.size() == 3 * 4 + 3);
  CHECK(param_count(Arch::kLinear, 4, 3, 0) == 15);
  for (std::size_t i = 12; i < 15; ++i) CHECK(p.values[i] == 0.0);
  const double bound = 1.0 / std::sqrt(4.0);
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(p.values[i]) <= bound);
}

TEST_CASE("mlp init stacks two layers") {
  const ModelParams p = init_params(Arch::kMlp, 4, 3, 8, 11);
  CHECK(param_count(Arch::kMlp, 4, 3, 8) == 8 * 4 + 8 + 3 * 8 + 3);
  CHECK(p.values.size() == 67);
  // Hidden biases then output biases start zeroed.
  for (std::size_t i = 32; i < 40; ++i) CHECK(p.values[i] == 0.0);
  for (std::size_t i = 64; i < 67; ++i) CHECK(p.values[i] == 0.0);
}

TEST_CASE("init is deterministic in the seed") {
  CHECK(init_params(Arch::kMlp, 6, 4, 5, 42) ==
        init_params(Arch::kMlp, 6, 4, 5, 42));
  CHECK(init_params(Arch::kMlp, 6, 4, 5, 42) !=
        init_params(Arch::kMlp, 6, 4, 5, 43));
}

TEST_CASE("zero model gives zero logits") {
  const ModelParams p = zero_params(Arch::kLinear, 3, 4, 0);
  const std::vector<double> x{1.0, -2.0, 0.5};
  for (const double v : forward(p, x)) CHECK(v == 0.0);
}

TEST_CASE("identity weights pass features through") {
  ModelParams p = zero_params(Arch::kLinear, 2, 2, 0);
  p.values = {1.0, 0.0, 0.0, 1.0, 0.0, 0.0};  // W = I, b = 0
  const std::vector<double> logits = forward(p, std::vector<double>{2.0, 3.0});
  CHECK(logits == std::vector<double>{2.0, 3.0});
}

TEST_CASE("forward rejects a wrong feature dimension") {
  const ModelParams p = init_params(Arch::kLinear, 3, 2, 0, 1);
  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("forward is consistent across repeated calls") {
  const ModelParams p = init_params(Arch::kMlp, 5, 3, 4, 8);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> x;
    for (int j = 0; j < 5; ++j) x.push_back(rng.normal());
    CHECK(forward(p, x) == forward(p, x));
  }
}

TEST_CASE("tempered softmax of equal logits is uniform") {
  const std::vector<double> logits{3.0, 3.0, 3.0, 3.0};
  for (const double t : {0.5, 1.0, 2.0}) {
    for (const double v : tempered_softmax(logits, t))
      CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("a huge temperature flattens the distribution") {
  const std::vector<double> probs =
      tempered_softmax(std::vector<double>{10.0, 0.0}, 1000.0);
  CHECK(std::abs(probs[0] - 0.5) < 0.01);
  CHECK(std::abs(probs[1] - 0.5) < 0.01);
}

TEST_CASE("tempered softmax matches the closed form") {
  const std::vector<double> probs =
      tempered_softmax(std::vector<double>{2.0, 0.0}, 2.0);
  const double e = std::exp(1.0);
  CHECK(probs[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
}

TEST_CASE("tempered softmax sums to one and ignores logit offsets") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits, shifted;
    for (int i = 0; i < 6; ++i) logits.push_back(rng.normal() * 10.0);
    for (const double v : logits) shifted.push_back(v + 123.456);
    const std::vector<double> p = tempered_softmax(logits, 2.0);
    const std::vector<double> q = tempered_softmax(shifted, 2.0);
    double sum = 0.0;
    for (const double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(std::abs(p[i] - q[i]) < 1e-9);
    // Argmax does not move with the temperature.
    const std::vector<double> hot = tempered_softmax(logits, 0.25);
    const auto arg = [](const std::vector<double>& v) {
      return std::max_element(v.begin(), v.end()) - v.begin();
    };
    CHECK(arg(p) == arg(hot));
  }
}

TEST_CASE("zero model classification loss is ln C") {
  const ModelParams p = zero_params(Arch::kLinear, 4, 5, 0);
  Rng rng(7);
  const std::vector<Sample> batch = random_batch(rng, 12, 4, 5);
  const LossResult res = class_loss_and_grad(p, batch_view(batch));
  CHECK(res.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("a confident correct model has near-zero loss") {
  ModelParams p = zero_params(Arch::kLinear, 2, 3, 0);
  p.values[2 * 3 + 1] = 20.0;  // bias strongly favors class 1
  Sample s;
  s.id = 0;
  s.label = 1;
  s.features = {0.0, 0.0};
  const std::vector<Sample> batch{s};
  CHECK(class_loss_and_grad(p, batch_view(batch)).loss < 1e-6);
}

TEST_CASE("labels outside the class set are rejected") {
  const ModelParams p = init_params(Arch::kLinear, 2, 3, 0, 1);
  Sample s;
  s.label = 3;
  s.features = {1.0, 1.0};
  const std::vector<Sample> batch{s};
  CHECK_THROWS_AS(class_loss_and_grad(p, batch_view(batch)), InputError);
  CHECK_THROWS_AS(class_loss_and_grad(p, BatchView{}), InputError);
}

TEST_CASE("classification gradients match finite differences") {
  Rng rng(21);
  for (const Arch arch : {Arch::kLinear, Arch::kMlp}) {
    for (int trial = 0; trial < 10; ++trial) {
      ModelParams p = init_params(arch, 5, 3, 4, rng.below(1u << 30));
      for (double& v : p.values) v += rng.normal() * 0.3;
      const std::vector<Sample> batch = random_batch(rng, 6, 5, 3);
      const BatchView view = batch_view(batch);
      const LossResult res = class_loss_and_grad(p, view);
      const double worst = max_grad_mismatch(
          p, [&](const ModelParams& q) {
            return class_loss_and_grad(q, view).loss;
          },
          res.grads);
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("distilling a model against itself sits at the loss minimum") {
  Rng rng(31);
  ModelParams p = init_params(Arch::kMlp, 4, 3, 5, 2);
  for (double& v : p.values) v += rng.normal() * 0.5;
  const std::vector<Sample> batch = random_batch(rng, 8, 4, 3);
  const LossResult res = kd_loss_and_grad(p, p, batch_view(batch), 2.0);
  double grad_norm = 0.0;
  for (const double g : res.grads) grad_norm += g * g;
  CHECK(std::sqrt(grad_norm) < 1e-8);

  // At matching distributions the cross-entropy equals the teacher entropy.
  double mean_entropy = 0.0;
  for (const Sample& s : batch) {
    const std::vector<double> probs =
        tempered_softmax(forward(p, s.features), 2.0);
    for (const double q : probs) mean_entropy -= q * std::log(q);
  }
  mean_entropy /= double(batch.size());
  CHECK(res.loss == doctest::Approx(mean_entropy).epsilon(1e-9));
}

TEST_CASE("uniform teacher and student distill at ln C") {
  const ModelParams p = zero_params(Arch::kLinear, 3, 4, 0);
  Rng rng(9);
  const std::vector<Sample> batch = random_batch(rng, 5, 3, 4);
  const LossResult res = kd_loss_and_grad(p, p, batch_view(batch), 2.0);
  CHECK(res.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("distillation rejects mismatched teacher shapes") {
  const ModelParams p = init_params(Arch::kLinear, 3, 2, 0, 1);
  const ModelParams teacher = init_params(Arch::kLinear, 4, 2, 0, 1);
  Rng rng(2);
  const std::vector<Sample> batch = random_batch(rng, 2, 3, 2);
  CHECK_THROWS_AS(kd_loss_and_grad(p, teacher, batch_view(batch), 2.0),
                  ShapeError);
}

TEST_CASE("distillation gradients match finite differences") {
  Rng rng(41);
  for (const Arch arch : {Arch::kLinear, Arch::kMlp}) {
    for (int trial = 0; trial < 10; ++trial) {
      ModelParams p = init_params(arch, 4, 3, 4, rng.below(1u << 30));
      ModelParams teacher = init_params(arch, 4, 3, 4, rng.below(1u << 30));
      for (double& v : p.values) v += rng.normal() * 0.4;
      for (double& v : teacher.values) v += rng.normal() * 0.4;
      const std::vector<Sample> batch = random_batch(rng, 5, 4, 3);
      const BatchView view = batch_view(batch);
      const LossResult res = kd_loss_and_grad(p, teacher, view, 2.0);
      const double worst = max_grad_mismatch(
          p, [&](const ModelParams& q) {
            return kd_loss_and_grad(q, teacher, view, 2.0).loss;
          },
          res.grads);
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("temperature-squared scaling multiplies the distillation term") {
  Rng rng(43);
  ModelParams p = init_params(Arch::kLinear, 3, 3, 0, 4);
  ModelParams teacher = init_params(Arch::kLinear, 3, 3, 0, 5);
  const std::vector<Sample> batch = random_batch(rng, 4, 3, 3);
  const BatchView view = batch_view(batch);
  const LossResult plain = kd_loss_and_grad(p, teacher, view, 2.0, false);
  const LossResult scaled = kd_loss_and_grad(p, teacher, view, 2.0, true);
  CHECK(scaled.loss == doctest::Approx(4.0 * plain.loss).epsilon(1e-12));
  for (std::size_t i = 0; i < plain.grads.size(); ++i)
    CHECK(scaled.grads[i] == doctest::Approx(4.0 * plain.grads[i]));
}

TEST_CASE("with zero distillation weight the combined loss is plain "
          "cross-entropy on the union") {
  Rng rng(51);
  ModelParams p = init_params(Arch::kMlp, 4, 3, 4, 6);
  ModelParams teacher = init_params(Arch::kMlp, 4, 3, 4, 7);
  const std::vector<Sample> current = random_batch(rng, 6, 4, 3);
  const std::vector<Sample> replay = random_batch(rng, 4, 4, 3);
  LossConfig cfg;
  cfg.lambda = 0.0;

  std::vector<Sample> unioned = current;
  unioned.insert(unioned.end(), replay.begin(), replay.end());
  const LossResult plain = class_loss_and_grad(p, batch_view(unioned));
  const TotalLossResult total = total_loss_and_grad(
      p, &teacher, batch_view(current), batch_view(replay), cfg);
  CHECK(total.total == plain.loss);
  CHECK(total.grads == plain.grads);
  CHECK(total.kd_component == 0.0);

  const TotalLossResult no_replay =
      total_loss_and_grad(p, &teacher, batch_view(current), {}, cfg);
  const LossResult current_only = class_loss_and_grad(p, batch_view(current));
  CHECK(no_replay.total == current_only.loss);
  CHECK(no_replay.grads == current_only.grads);
}

TEST_CASE("combined loss decomposes into its components") {
  Rng rng(53);
  ModelParams p = init_params(Arch::kMlp, 5, 4, 4, 8);
  ModelParams teacher = init_params(Arch::kMlp, 5, 4, 4, 9);
  const std::vector<Sample> current = random_batch(rng, 5, 5, 4);
  const std::vector<Sample> replay = random_batch(rng, 3, 5, 4);
  LossConfig cfg;
  cfg.lambda = 1.0;

  const TotalLossResult total = total_loss_and_grad(
      p, &teacher, batch_view(current), batch_view(replay), cfg);
  std::vector<Sample> unioned = current;
  unioned.insert(unioned.end(), replay.begin(), replay.end());
  const double cls = class_loss_and_grad(p, batch_view(unioned)).loss;
  const double kd =
      kd_loss_and_grad(p, teacher, batch_view(current), cfg.temperature).loss;
  CHECK(total.class_component == doctest::Approx(cls).epsilon(1e-12));
  CHECK(total.kd_component == doctest::Approx(kd).epsilon(1e-12));
  CHECK(total.total == doctest::Approx(cls + kd).epsilon(1e-12));
}

TEST_CASE("distilling on the union is a flag away") {
  Rng rng(57);
  ModelParams p = init_params(Arch::kLinear, 4, 3, 0, 2);
  ModelParams teacher = init_params(Arch::kLinear, 4, 3, 0, 3);
  const std::vector<Sample> current = random_batch(rng, 4, 4, 3);
  const std::vector<Sample> replay = random_batch(rng, 4, 4, 3);
  LossConfig cfg;
  cfg.kd_on_replay = true;

  const TotalLossResult total = total_loss_and_grad(
      p, &teacher, batch_view(current), batch_view(replay), cfg);
  std::vector<Sample> unioned = current;
  unioned.insert(unioned.end(), replay.begin(), replay.end());
  const double kd =
      kd_loss_and_grad(p, teacher, batch_view(unioned), cfg.temperature).loss;
  CHECK(total.kd_component == doctest::Approx(kd).epsilon(1e-12));
}

TEST_CASE("disabling both loss terms is a configuration error") {
  LossConfig cfg;
  cfg.use_class_loss = false;
  cfg.use_kd_loss = false;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  const ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 1);
  Rng rng(1);
  const std::vector<Sample> batch = random_batch(rng, 2, 2, 2);
  CHECK_THROWS_AS(
      total_loss_and_grad(p, nullptr, batch_view(batch), {}, cfg),
      ConfigError);
}

TEST_CASE("combined loss gradients match finite differences") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = init_params(Arch::kMlp, 4, 3, 4, rng.below(1u << 30));
    ModelParams teacher = init_params(Arch::kMlp, 4, 3, 4, rng.below(1u << 30));
    for (double& v : teacher.values) v += rng.normal() * 0.3;
    const std::vector<Sample> current = random_batch(rng, 4, 4, 3);
    const std::vector<Sample> replay = random_batch(rng, 3, 4, 3);
    LossConfig cfg;
    cfg.lambda = 0.7;
    const TotalLossResult res = total_loss_and_grad(
        p, &teacher, batch_view(current), batch_view(replay), cfg);
    const double worst = max_grad_mismatch(
        p, [&](const ModelParams& q) {
          return total_loss_and_grad(q, &teacher, batch_view(current),
                                     batch_view(replay), cfg)
              .total;
        },
        res.grads);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("momentum-free sgd is a plain gradient step") {
  ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 3);
  const ModelParams before = p;
  OptState opt = make_opt_state(p, 0.1, 0.0);
  GradVec g(p.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = double(i) + 1.0;
  sgd_update(p, opt, g);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(p.values[i] == doctest::Approx(before.values[i] - 0.1 * g[i])
                              .epsilon(1e-15));
}

TEST_CASE("zero gradients leave parameters alone") {
  ModelParams p = init_params(Arch::kMlp, 3, 2, 3, 5);
  const ModelParams before = p;
  OptState opt = make_opt_state(p, 0.5, 0.9);
  const GradVec zero(p.values.size(), 0.0);
  for (int i = 0; i < 7; ++i) sgd_update(p, opt, zero);
  CHECK(p == before);
}

TEST_CASE("two momentum steps compound the velocity") {
  // v1 = g, v2 = 0.9 g + g; total displacement = -(1 + 1.9) g.
  ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 8);
  const ModelParams before = p;
  OptState opt = make_opt_state(p, 1.0, 0.9);
  GradVec g(p.values.size(), 0.25);
  sgd_update(p, opt, g);
  sgd_update(p, opt, g);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(p.values[i] ==
          doctest::Approx(before.values[i] - 2.9 * 0.25).epsilon(1e-12));
}

TEST_CASE("non-finite gradients are refused without touching state") {
  ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 9);
  const ModelParams before = p;
  OptState opt = make_opt_state(p, 0.1, 0.9);
  GradVec g(p.values.size(), 1.0);
  g[2] = std::nan("");
  CHECK_THROWS_AS(sgd_update(p, opt, g), NumericError);
  CHECK(p == before);
  for (const double v : opt.velocity) CHECK(v == 0.0);
}

TEST_CASE("parameters stay finite over a long optimization") {
  Rng rng(71);
  ModelParams p = init_params(Arch::kMlp, 6, 3, 8, 12);
  OptState opt = make_opt_state(p, 1e-3, 0.9);
  const std::vector<Sample> batch = random_batch(rng, 16, 6, 3);
  for (int step = 0; step < 1000; ++step) {
    const LossResult res = class_loss_and_grad(p, batch_view(batch));
    sgd_update(p, opt, res.grads);
  }
  for (const double v : p.values) CHECK(std::isfinite(v));
}

TEST_CASE("fisher entries are squares and honor the sample cap") {
  Rng rng(81);
  ModelParams p = init_params(Arch::kLinear, 3, 3, 0, 14);
  for (double& v : p.values) v += rng.normal() * 0.3;
  const std::vector<Sample> data = random_batch(rng, 5, 3, 3);
  const GradVec fisher = fisher_diag(p, batch_view(data), 1024);
  for (const double f : fisher) CHECK(f >= 0.0);

  // The empirical diagonal is the mean of squared per-sample gradients of
  // the log-likelihood, reproduced here sample by sample.
  GradVec expect(p.values.size(), 0.0);
  for (const Sample& s : data) {
    const std::vector<Sample> one{s};
    const LossResult res = class_loss_and_grad(p, batch_view(one));
    for (std::size_t i = 0; i < expect.size(); ++i)
      expect[i] += res.grads[i] * res.grads[i];
  }
  for (std::size_t i = 0; i < expect.size(); ++i) {
    expect[i] /= double(data.size());
    CHECK(fisher[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }

  const GradVec capped = fisher_diag(p, batch_view(data), 2);
  GradVec expect2(p.values.size(), 0.0);
  for (int k = 0; k < 2; ++k) {
    const std::vector<Sample> one{data[k]};
    const LossResult res = class_loss_and_grad(p, batch_view(one));
    for (std::size_t i = 0; i < expect2.size(); ++i)
      expect2[i] += res.grads[i] * res.grads[i] / 2.0;
  }
  for (std::size_t i = 0; i < expect2.size(); ++i)
    CHECK(capped[i] == doctest::Approx(expect2[i]).epsilon(1e-12));
}

TEST_CASE("anchored parameters pay no penalty") {
  const ModelParams p = init_params(Arch::kLinear, 3, 2, 0, 15);
  const GradVec fisher(p.values.size(), 0.7);
  const LossResult res = ewc_penalty_and_grad(p, p, fisher, 3000.0);
  CHECK(res.loss == 0.0);
  for (const double g : res.grads) CHECK(g == 0.0);
}

TEST_CASE("the quadratic penalty follows its closed form") {
  ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 16);
  ModelParams anchor = p;
  // Unit displacement on one coordinate, unit fisher, weight 2: loss is 1.
  p.values[3] += 1.0;
  const GradVec fisher(p.values.size(), 1.0);
  const LossResult res = ewc_penalty_and_grad(p, anchor, fisher, 2.0);
  CHECK(res.loss == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.grads[3] == doctest::Approx(2.0).epsilon(1e-12));

  // Doubling the displacement quadruples the loss.
  p.values[3] += 1.0;
  const LossResult wide = ewc_penalty_and_grad(p, anchor, fisher, 2.0);
  CHECK(wide.loss == doctest::Approx(4.0 * res.loss).epsilon(1e-12));
}

TEST_CASE("negative fisher entries are rejected") {
  const ModelParams p = init_params(Arch::kLinear, 2, 2, 0, 17);
  GradVec fisher(p.values.size(), 1.0);
  fisher[1] = -0.1;
  CHECK_THROWS_AS(ewc_penalty_and_grad(p, p, fisher, 1.0), InputError);
}

TEST_CASE("ewc penalty gradients match finite differences") {
  Rng rng(91);
  ModelParams p = init_params(Arch::kMlp, 3, 2, 3, 18);
  ModelParams anchor = p;
  for (double& v : p.values) v += rng.normal() * 0.5;
  GradVec fisher(p.values.size());
  for (double& f : fisher) f = rng.uniform() * 2.0;
  const LossResult res = ewc_penalty_and_grad(p, anchor, fisher, 7.0);
  const double worst = max_grad_mismatch(
      p, [&](const ModelParams& q) {
        return ewc_penalty_and_grad(q, anchor, fisher, 7.0).loss;
      },
      res.grads);
  CHECK(worst < 1e-4);
}

TEST_CASE("checkpoints survive a save and load") {
  const fs::path p =
      fs::temp_directory_path() / ("drift_ckpt_" + std::to_string(::rand()));
  fs::create_directories(p);
  ModelParams params = init_params(Arch::kMlp, 5, 3, 4, 20);
  Rng rng(6);
  for (double& v : params.values) v += rng.normal();
  save_checkpoint(p / "model.bin", params);
  const ModelParams back = load_checkpoint(p / "model.bin");
  CHECK(back.arch == params.arch);
  CHECK(back.feature_dim == params.feature_dim);
  CHECK(back.num_classes == params.num_classes);
  CHECK(back.hidden_width == params.hidden_width);
  REQUIRE(back.values.size() == params.values.size());
  // Values pass through 32-bit storage.
  for (std::size_t i = 0; i < back.values.size(); ++i)
    CHECK(back.values[i] == double(float(params.values[i])));

  std::ofstream(p / "bad.bin", std::ios::binary) << "NOPExxxxxxxxxxxx";
  CHECK_THROWS_AS(load_checkpoint(p / "bad.bin"), ParseError);
  fs::remove_all(p);
}
