#include "drift/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "drift/io_util.hpp"
#include "drift/rng.hpp"

namespace drift {

std::string to_string(Arch a) {
  return a == Arch::kLinear ? "linear" : "mlp";
}

Arch arch_from_string(const std::string& s) {
  if (s == "linear") return Arch::kLinear;
  if (s == "mlp") return Arch::kMlp;
  throw ParseError("unknown architecture '" + s + "' (expected linear|mlp)");
}

std::size_t param_count(Arch arch, int feature_dim, int num_classes,
                        int hidden_width) {
  const auto d = static_cast<std::size_t>(feature_dim);
  const auto c = static_cast<std::size_t>(num_classes);
  const auto h = static_cast<std::size_t>(hidden_width);
  if (arch == Arch::kLinear) return c * d + c;
  return h * d + h + c * h + c;
}

void validate(const LossConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw ConfigError("LossConfig.temperature must be > 0");
  if (cfg.lambda < 0.0) throw ConfigError("LossConfig.lambda must be >= 0");
  if (!cfg.use_class_loss && !cfg.use_kd_loss)
    throw ConfigError("LossConfig: at least one loss flag must be enabled");
}

BatchView batch_view(const std::vector<Sample>& samples) {
  BatchView view;
  view.reserve(samples.size());
  for (const auto& s : samples) view.push_back(&s);
  return view;
}

ModelParams init_params(Arch arch, int feature_dim, int num_classes,
                        int hidden_width, std::uint64_t seed) {
  if (feature_dim < 1) throw ConfigError("init_params: feature_dim must be >= 1");
  if (num_classes < 1) throw ConfigError("init_params: num_classes must be >= 1");
  if (arch == Arch::kMlp && hidden_width < 1)
    throw ConfigError("init_params: hidden_width must be >= 1 for mlp");

  ModelParams p;
  p.arch = arch;
  p.feature_dim = feature_dim;
  p.num_classes = num_classes;
  p.hidden_width = arch == Arch::kMlp ? hidden_width : 0;
  p.values.assign(param_count(arch, feature_dim, num_classes, p.hidden_width), 0.0);

  Rng rng(seed);
  const auto d = static_cast<std::size_t>(feature_dim);
  const auto c = static_cast<std::size_t>(num_classes);
  if (arch == Arch::kLinear) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < c * d; ++i) p.values[i] = rng.uniform(-bound, bound);
    // biases stay zero
  } else {
    const auto h = static_cast<std::size_t>(hidden_width);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < h * d; ++i) p.values[i] = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    const std::size_t w2_off = h * d + h;
    for (std::size_t i = 0; i < c * h; ++i)
      p.values[w2_off + i] = rng.uniform(-bound2, bound2);
  }
  return p;
}

OptState make_opt_state(const ModelParams& p, double lr, double momentum) {
  if (!(lr > 0.0)) throw ConfigError("OptState.lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("OptState.momentum must be in [0,1)");
  OptState opt;
  opt.lr = lr;
  opt.momentum = momentum;
  opt.velocity.assign(p.values.size(), 0.0);
  return opt;
}

namespace {

struct Offsets {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Offsets offsets_of(const ModelParams& p) {
  const auto d = static_cast<std::size_t>(p.feature_dim);
  const auto c = static_cast<std::size_t>(p.num_classes);
  Offsets o;
  if (p.arch == Arch::kLinear) {
    o.b1 = c * d;
  } else {
    const auto h = static_cast<std::size_t>(p.hidden_width);
    o.b1 = h * d;
    o.w2 = h * d + h;
    o.b2 = h * d + h + c * h;
  }
  return o;
}

void check_row(const ModelParams& p, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(p.feature_dim))
    throw ShapeError("forward: feature row has dim " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(p.feature_dim));
}

// Forward pass keeping the hidden activation for backprop (empty for linear).
void forward_impl(const ModelParams& p, std::span<const double> x,
                  std::vector<double>& hidden, std::vector<double>& logits) {
  check_row(p, x);
  const auto o = offsets_of(p);
  const auto d = static_cast<std::size_t>(p.feature_dim);
  const auto c = static_cast<std::size_t>(p.num_classes);
  logits.assign(c, 0.0);
  if (p.arch == Arch::kLinear) {
    for (std::size_t i = 0; i < c; ++i) {
      double acc = p.values[o.b1 + i];
      const double* w = &p.values[i * d];
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
      logits[i] = acc;
    }
    hidden.clear();
    return;
  }
  const auto h = static_cast<std::size_t>(p.hidden_width);
  hidden.assign(h, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    double acc = p.values[o.b1 + i];
    const double* w = &p.values[i * d];
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
    hidden[i] = std::tanh(acc);
  }
  for (std::size_t i = 0; i < c; ++i) {
    double acc = p.values[o.b2 + i];
    const double* w = &p.values[o.w2 + i * h];
    for (std::size_t j = 0; j < h; ++j) acc += w[j] * hidden[j];
    logits[i] = acc;
  }
}

// Accumulates d(loss)/d(params) given d(loss)/d(logits) for one row.
void backprop_row(const ModelParams& p, std::span<const double> x,
                  const std::vector<double>& hidden,
                  const std::vector<double>& dlogits, GradVec& grads) {
  const auto o = offsets_of(p);
  const auto d = static_cast<std::size_t>(p.feature_dim);
  const auto c = static_cast<std::size_t>(p.num_classes);
  if (p.arch == Arch::kLinear) {
    for (std::size_t i = 0; i < c; ++i) {
      const double g = dlogits[i];
      double* gw = &grads[i * d];
      for (std::size_t j = 0; j < d; ++j) gw[j] += g * x[j];
      grads[o.b1 + i] += g;
    }
    return;
  }
  const auto h = static_cast<std::size_t>(p.hidden_width);
  std::vector<double> dhidden(h, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    const double g = dlogits[i];
    double* gw = &grads[o.w2 + i * h];
    const double* w = &p.values[o.w2 + i * h];
    for (std::size_t j = 0; j < h; ++j) {
      gw[j] += g * hidden[j];
      dhidden[j] += w[j] * g;
    }
    grads[o.b2 + i] += g;
  }
  for (std::size_t i = 0; i < h; ++i) {
    const double dz = dhidden[i] * (1.0 - hidden[i] * hidden[i]);
    double* gw = &grads[i * d];
    for (std::size_t j = 0; j < d; ++j) gw[j] += dz * x[j];
    grads[o.b1 + i] += dz;
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (const double z : v) acc += std::exp(z - m);
  return m + std::log(acc);
}

void check_batch(const ModelParams& p, const BatchView& batch, bool need_labels) {
  if (batch.empty()) throw InputError("loss: batch is empty");
  for (const Sample* s : batch) {
    if (s->features.size() != static_cast<std::size_t>(p.feature_dim))
      throw ShapeError("loss: sample " + std::to_string(s->id) + " has dim " +
                       std::to_string(s->features.size()) + ", model expects " +
                       std::to_string(p.feature_dim));
    if (need_labels && (s->label < 0 || s->label >= p.num_classes))
      throw InputError("loss: sample " + std::to_string(s->id) + " has label " +
                       std::to_string(s->label) + " outside [0," +
                       std::to_string(p.num_classes) + ")");
  }
}

}  // namespace

std::vector<double> forward(const ModelParams& p, std::span<const double> x) {
  std::vector<double> hidden;
  std::vector<double> logits;
  forward_impl(p, x, hidden, logits);
  return logits;
}

std::vector<double> tempered_softmax(std::span<const double> logits, double t) {
  if (!(t > 0.0)) throw ConfigError("tempered_softmax: temperature must be > 0");
  std::vector<double> out(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (const double z : logits) m = std::max(m, z / t);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits[i] / t - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

LossResult class_loss_and_grad(const ModelParams& p, const BatchView& batch) {
  check_batch(p, batch, /*need_labels=*/true);
  LossResult res;
  res.grads.assign(p.values.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> hidden, logits;
  for (const Sample* s : batch) {
    forward_impl(p, s->features, hidden, logits);
    const double lse = log_sum_exp(logits);
    res.loss += (lse - logits[static_cast<std::size_t>(s->label)]) * inv_b;
    std::vector<double> dlogits(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
      dlogits[i] = std::exp(logits[i] - lse) * inv_b;
    dlogits[static_cast<std::size_t>(s->label)] -= inv_b;
    backprop_row(p, s->features, hidden, dlogits, res.grads);
  }
  return res;
}

LossResult kd_loss_and_grad(const ModelParams& p, const ModelParams& p_prev,
                            const BatchView& batch, double t, bool t2_scaling) {
  if (!p.same_shape(p_prev))
    throw ShapeError("kd_loss: teacher and student shapes differ");
  if (!(t > 0.0)) throw ConfigError("kd_loss: temperature must be > 0");
  check_batch(p, batch, /*need_labels=*/false);

  LossResult res;
  res.grads.assign(p.values.size(), 0.0);
  const double scale = t2_scaling ? t * t : 1.0;
  const double inv_b = scale / static_cast<double>(batch.size());
  std::vector<double> hidden, logits, t_hidden, t_logits;
  for (const Sample* s : batch) {
    forward_impl(p_prev, s->features, t_hidden, t_logits);
    const std::vector<double> teacher_probs = tempered_softmax(t_logits, t);
    forward_impl(p, s->features, hidden, logits);

    std::vector<double> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / t;
    const double lse = log_sum_exp(scaled);
    double cross = lse;
    for (std::size_t i = 0; i < logits.size(); ++i)
      cross -= teacher_probs[i] * scaled[i];
    res.loss += cross * inv_b;

    std::vector<double> dlogits(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
      dlogits[i] = (std::exp(scaled[i] - lse) - teacher_probs[i]) * inv_b / t;
    backprop_row(p, s->features, hidden, dlogits, res.grads);
  }
  return res;
}

TotalLossResult total_loss_and_grad(const ModelParams& p,
                                    const ModelParams* teacher,
                                    const BatchView& current,
                                    const BatchView& replay,
                                    const LossConfig& cfg) {
  validate(cfg);
  TotalLossResult res;
  if (cfg.use_class_loss) {
    BatchView unioned;
    unioned.reserve(current.size() + replay.size());
    unioned.insert(unioned.end(), current.begin(), current.end());
    unioned.insert(unioned.end(), replay.begin(), replay.end());
    LossResult cls = class_loss_and_grad(p, unioned);
    res.class_component = cls.loss;
    res.total = cls.loss;
    res.grads = std::move(cls.grads);
  } else {
    res.grads.assign(p.values.size(), 0.0);
  }
  // Skipped, not zero-weighted: a vacuous KD term must leave the class
  // gradients untouched down to the last bit.
  if (cfg.use_kd_loss && cfg.lambda != 0.0 && teacher != nullptr) {
    BatchView kd_batch = current;
    if (cfg.kd_on_replay)
      kd_batch.insert(kd_batch.end(), replay.begin(), replay.end());
    if (!kd_batch.empty()) {
      const LossResult kd = kd_loss_and_grad(p, *teacher, kd_batch,
                                             cfg.temperature, cfg.kd_t2_scaling);
      res.kd_component = kd.loss;
      res.total += cfg.lambda * kd.loss;
      for (std::size_t i = 0; i < res.grads.size(); ++i)
        res.grads[i] += cfg.lambda * kd.grads[i];
    }
  }
  return res;
}

void sgd_update(ModelParams& p, OptState& opt, const GradVec& grads) {
  if (grads.size() != p.values.size() || opt.velocity.size() != p.values.size())
    throw ShapeError("sgd_update: gradient/velocity shape mismatch");
  for (const double g : grads)
    if (!std::isfinite(g)) throw NumericError("sgd_update: non-finite gradient");
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    opt.velocity[i] = opt.momentum * opt.velocity[i] + grads[i];
    p.values[i] -= opt.lr * opt.velocity[i];
  }
}

GradVec fisher_diag(const ModelParams& p, const BatchView& data,
                    std::size_t samples_cap) {
  if (data.empty()) throw InputError("fisher_diag: data is empty");
  if (samples_cap < 1) throw ConfigError("fisher_diag: samples_cap must be >= 1");
  const std::size_t n = std::min(samples_cap, data.size());
  GradVec fisher(p.values.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const BatchView one{data[i]};
    const LossResult r = class_loss_and_grad(p, one);
    for (std::size_t j = 0; j < fisher.size(); ++j)
      fisher[j] += r.grads[j] * r.grads[j];
  }
  for (double& f : fisher) f /= static_cast<double>(n);
  return fisher;
}

LossResult ewc_penalty_and_grad(const ModelParams& p, const ModelParams& anchor,
                                const GradVec& fisher, double lambda_ewc) {
  if (!p.same_shape(anchor)) throw ShapeError("ewc_penalty: anchor shape mismatch");
  if (fisher.size() != p.values.size())
    throw ShapeError("ewc_penalty: fisher shape mismatch");
  for (const double f : fisher)
    if (f < 0.0) throw InputError("ewc_penalty: negative fisher entry");

  LossResult res;
  res.grads.assign(p.values.size(), 0.0);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double diff = p.values[i] - anchor.values[i];
    res.loss += 0.5 * lambda_ewc * fisher[i] * diff * diff;
    res.grads[i] = lambda_ewc * fisher[i] * diff;
  }
  return res;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write("DRFT", 4);
  put_u16_le(out, 1);
  out.put(p.arch == Arch::kLinear ? '\0' : '\1');
  put_u32_le(out, static_cast<std::uint32_t>(p.feature_dim));
  put_u32_le(out, static_cast<std::uint32_t>(p.num_classes));
  put_u32_le(out, static_cast<std::uint32_t>(p.hidden_width));
  for (const double v : p.values) put_f32_le(out, static_cast<float>(v));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "DRFT")
    throw ParseError("checkpoint magic mismatch (expected DRFT)");
  const std::uint16_t version = get_u16_le(in);
  if (version != 1)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const int tag = in.get();
  if (tag != 0 && tag != 1) throw ParseError("unknown architecture tag in checkpoint");
  ModelParams p;
  p.arch = tag == 0 ? Arch::kLinear : Arch::kMlp;
  p.feature_dim = static_cast<int>(get_u32_le(in));
  p.num_classes = static_cast<int>(get_u32_le(in));
  p.hidden_width = static_cast<int>(get_u32_le(in));
  const std::size_t n =
      param_count(p.arch, p.feature_dim, p.num_classes, p.hidden_width);
  p.values.resize(n);
  for (double& v : p.values) v = static_cast<double>(get_f32_le(in));
  return p;
}

}  // namespace drift
