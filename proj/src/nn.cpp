#include "dean/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dean/error.hpp"
#include "dean/random.hpp"

namespace dean::nn {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::selu: return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
    case Activation::identity: return z;
  }
  return z;
}

double activation_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::selu: return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::selu: return "selu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "selu") return Activation::selu;
  if (name == "identity") return Activation::identity;
  throw DataError("unknown activation \"" + std::string(name) + "\"");
}

LossKind parse_loss(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "absolute") return LossKind::absolute;
  throw UsageError("unknown loss \"" + std::string(name) + "\"");
}

std::string_view to_string(LossKind loss) {
  return loss == LossKind::squared ? "squared" : "absolute";
}

// ---------------------------------------------------------------------------
// Mlp

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.values().size() + (l.bias ? l.bias->size() : 0);
  return n;
}

double& Mlp::parameter(std::size_t index) {
  for (auto& l : layers) {
    auto& w = l.weights.values();
    if (index < w.size()) return w[index];
    index -= w.size();
    if (l.bias) {
      if (index < l.bias->size()) return (*l.bias)[index];
      index -= l.bias->size();
    }
  }
  throw std::out_of_range("Mlp::parameter: index out of range");
}

double Mlp::parameter(std::size_t index) const {
  return const_cast<Mlp&>(*this).parameter(index);
}

void Mlp::validate() const {
  if (layers.empty()) throw DataError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.in() == 0 || l.out() == 0) throw DataError("network has a zero-width layer");
    if (k > 0 && layers[k - 1].out() != l.in()) {
      throw DataError("layer " + std::to_string(k) + " input width does not match previous output");
    }
    if (l.bias && l.bias->size() != l.out()) {
      throw DataError("layer " + std::to_string(k) + " bias length does not match output width");
    }
    if (!l.weights.all_finite() ||
        (l.bias && !std::all_of(l.bias->begin(), l.bias->end(),
                                [](double v) { return std::isfinite(v); }))) {
      throw DataError("layer " + std::to_string(k) + " has non-finite parameters");
    }
  }
}

Gradients Gradients::zeros_like(const Mlp& mlp) {
  Gradients g;
  for (const auto& l : mlp.layers) {
    g.weights.emplace_back(l.out(), l.in());
    g.bias.emplace_back(l.bias ? l.out() : 0, 0.0);
  }
  return g;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> flat;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    flat.insert(flat.end(), weights[k].values().begin(), weights[k].values().end());
    flat.insert(flat.end(), bias[k].begin(), bias[k].end());
  }
  return flat;
}

AdamState AdamState::for_model(const Mlp& mlp) {
  return {Gradients::zeros_like(mlp), Gradients::zeros_like(mlp), 0};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning rate must be positive");
  }
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
}

// ---------------------------------------------------------------------------
// Construction and forward pass

Mlp init_mlp(std::span<const std::size_t> layer_sizes, BiasPolicy bias_policy,
             std::span<const Activation> activations, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw UsageError("need at least an input and an output width");
  if (std::find(layer_sizes.begin(), layer_sizes.end(), 0) != layer_sizes.end()) {
    throw UsageError("layer widths must be positive");
  }
  const std::size_t n_layers = layer_sizes.size() - 1;
  if (activations.size() != n_layers) {
    throw UsageError("expected " + std::to_string(n_layers) + " activations, got " +
                     std::to_string(activations.size()));
  }
  Rng rng(seed);
  Mlp mlp;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const std::size_t in = layer_sizes[k];
    const std::size_t out = layer_sizes[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer;
    layer.weights = Matrix(out, in);
    for (auto& w : layer.weights.values()) w = dist(rng);
    const bool last = k + 1 == n_layers;
    const bool with_bias = bias_policy == BiasPolicy::all ||
                           (bias_policy == BiasPolicy::all_but_last && !last);
    if (with_bias) layer.bias = std::vector<double>(out, 0.0);
    layer.activation = activations[k];
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void dense_forward(const Layer& layer, const Matrix& in, Matrix& pre_activation, Matrix& out) {
  const std::size_t n = in.rows();
  const std::size_t n_in = layer.in();
  const std::size_t n_out = layer.out();
  if (in.cols() != n_in) {
    throw DataError("layer expects " + std::to_string(n_in) + " inputs, got " +
                    std::to_string(in.cols()));
  }
  const Matrix wt = layer.weights.transposed();
  pre_activation = Matrix(n, n_out);
  out = Matrix(n, n_out);
  for (std::size_t i = 0; i < n; ++i) {
    double* z = &pre_activation(i, 0);
    if (layer.bias) std::copy(layer.bias->begin(), layer.bias->end(), z);
    const double* x = &in(i, 0);
    for (std::size_t k = 0; k < n_in; ++k) {
      const double xk = x[k];
      if (xk == 0.0) continue;
      const double* w = &wt(k, 0);
      for (std::size_t o = 0; o < n_out; ++o) z[o] += xk * w[o];
    }
    double* a = &out(i, 0);
    for (std::size_t o = 0; o < n_out; ++o) a[o] = activate(layer.activation, z[o]);
  }
}

namespace {

struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activation per layer
  std::vector<Matrix> post;  // activation per layer
};

ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch) {
  ForwardCache cache;
  cache.pre.resize(mlp.layers.size());
  cache.post.resize(mlp.layers.size());
  const Matrix* in = &batch;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    dense_forward(mlp.layers[k], *in, cache.pre[k], cache.post[k]);
    in = &cache.post[k];
  }
  return cache;
}

// Either a constant target vector or one target row per sample.
struct Targets {
  std::span<const double> constant;
  const Matrix* per_row = nullptr;

  double at(std::size_t i, std::size_t j) const {
    return per_row ? (*per_row)(i, j) : constant[j];
  }
};

void check_target(const Mlp& mlp, std::span<const double> target) {
  if (target.size() != mlp.output_width()) {
    throw DataError("target length " + std::to_string(target.size()) +
                    " does not match output width " + std::to_string(mlp.output_width()));
  }
}

void check_targets(const Mlp& mlp, const Matrix& batch, const Matrix& targets) {
  if (targets.cols() != mlp.output_width() || targets.rows() != batch.rows()) {
    throw DataError("target matrix must be rows x output width");
  }
}

// Loss value and d(loss)/d(output) for the primary objective.
double output_loss(const Matrix& out, const Targets& target, LossKind loss,
                   Matrix* d_out) {
  const std::size_t n = out.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double diff = out(i, j) - target.at(i, j);
      if (loss == LossKind::squared) {
        total += diff * diff;
        if (d_out) (*d_out)(i, j) = 2.0 * diff * inv_n;
      } else {
        total += std::abs(diff);
        if (d_out) (*d_out)(i, j) = (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * inv_n;
      }
    }
  }
  return total * inv_n;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

Matrix forward(const Mlp& mlp, const Matrix& batch) {
  if (mlp.layers.empty()) throw DataError("network has no layers");
  Matrix pre;
  Matrix current = batch;
  for (const auto& layer : mlp.layers) {
    Matrix next;
    dense_forward(layer, current, pre, next);
    current = std::move(next);
  }
  return current;
}

namespace {

double evaluate_loss_impl(const Mlp& mlp, const Matrix& batch, const Targets& target,
                          LossKind loss, const OutputPenalty* penalty,
                          std::span<const std::size_t> rows) {
  const Matrix out = forward(mlp, batch);
  double value = output_loss(out, target, loss, nullptr);
  if (penalty && *penalty) {
    std::vector<std::size_t> own;
    if (rows.empty()) {
      own = iota_rows(batch.rows());
      rows = own;
    }
    std::vector<double> scratch(out.values().size(), 0.0);
    value += (*penalty)(out.values(), rows, scratch);
  }
  return value;
}

LossAndGradients loss_and_gradients_impl(const Mlp& mlp, const Matrix& batch,
                                         const Targets& target, LossKind loss,
                                         const OutputPenalty* penalty,
                                         std::span<const std::size_t> rows) {
  if (batch.rows() == 0) throw DataError("empty batch");
  const ForwardCache cache = forward_cached(mlp, batch);
  const Matrix& out = cache.post.back();

  Matrix d_act(out.rows(), out.cols());
  LossAndGradients result;
  result.loss = output_loss(out, target, loss, &d_act);
  if (penalty && *penalty) {
    std::vector<std::size_t> own;
    if (rows.empty()) {
      own = iota_rows(batch.rows());
      rows = own;
    }
    result.loss += (*penalty)(out.values(), rows, d_act.values());
  }
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss during backpropagation");

  result.gradients = Gradients::zeros_like(mlp);
  for (std::size_t k = mlp.layers.size(); k-- > 0;) {
    const Layer& layer = mlp.layers[k];
    const Matrix& z = cache.pre[k];
    const Matrix& a_prev = k == 0 ? batch : cache.post[k - 1];
    const std::size_t n = z.rows();
    const std::size_t n_in = layer.in();
    const std::size_t n_out = layer.out();

    Matrix d_z(n, n_out);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < n_out; ++o) {
        d_z(i, o) = d_act(i, o) * activation_derivative(layer.activation, z(i, o));
      }
    }

    Matrix& d_w = result.gradients.weights[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double* a = &a_prev(i, 0);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d_z(i, o);
        if (g == 0.0) continue;
        double* dw = &d_w(o, 0);
        for (std::size_t c = 0; c < n_in; ++c) dw[c] += g * a[c];
      }
    }
    if (layer.bias) {
      auto& d_b = result.gradients.bias[k];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < n_out; ++o) d_b[o] += d_z(i, o);
      }
    }
    if (k == 0) break;

    Matrix d_prev(n, n_in);
    for (std::size_t i = 0; i < n; ++i) {
      double* dp = &d_prev(i, 0);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d_z(i, o);
        if (g == 0.0) continue;
        const double* w = &layer.weights(o, 0);
        for (std::size_t c = 0; c < n_in; ++c) dp[c] += g * w[c];
      }
    }
    d_act = std::move(d_prev);
  }

  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    if (!result.gradients.weights[k].all_finite()) {
      throw NumericError("non-finite gradient in layer " + std::to_string(k));
    }
  }
  return result;
}

}  // namespace

double evaluate_loss(const Mlp& mlp, const Matrix& batch, std::span<const double> target,
                     LossKind loss, const OutputPenalty* penalty,
                     std::span<const std::size_t> rows) {
  check_target(mlp, target);
  return evaluate_loss_impl(mlp, batch, Targets{target}, loss, penalty, rows);
}

LossAndGradients loss_and_gradients(const Mlp& mlp, const Matrix& batch,
                                    std::span<const double> target, LossKind loss,
                                    const OutputPenalty* penalty,
                                    std::span<const std::size_t> rows) {
  check_target(mlp, target);
  return loss_and_gradients_impl(mlp, batch, Targets{target}, loss, penalty, rows);
}

LossAndGradients loss_and_gradients(const Mlp& mlp, const Matrix& batch, const Matrix& targets,
                                    LossKind loss) {
  check_targets(mlp, batch, targets);
  return loss_and_gradients_impl(mlp, batch, Targets{{}, &targets}, loss, nullptr, {});
}

void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state, double learning_rate) {
  if (grads.weights.size() != mlp.layers.size() ||
      state.first_moment.weights.size() != mlp.layers.size()) {
    throw DataError("gradient/optimizer state shape does not match network");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);

  auto update = [&](std::span<double> params, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    if (params.size() != g.size() || params.size() != m.size() || params.size() != v.size()) {
      throw DataError("gradient/optimizer state shape does not match network");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
      v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  };

  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    auto& layer = mlp.layers[k];
    update(layer.weights.values(), grads.weights[k].values(),
           state.first_moment.weights[k].values(), state.second_moment.weights[k].values());
    if (layer.bias) {
      update(*layer.bias, grads.bias[k], state.first_moment.bias[k], state.second_moment.bias[k]);
    }
  }
}

namespace {

TrainResult train_impl(Mlp mlp, const Matrix& train_data, const Matrix* per_row_targets,
                       std::span<const double> constant_target, const TrainConfig& config,
                       const OutputPenalty* penalty) {
  config.validate();
  mlp.validate();
  const std::size_t n = train_data.rows();
  if (n == 0) throw DataError("empty training data");
  if (train_data.cols() != mlp.input_width()) {
    throw DataError("training data has " + std::to_string(train_data.cols()) +
                    " columns, network expects " + std::to_string(mlp.input_width()));
  }

  const std::size_t batch = std::min(config.batch_size, n);
  const std::vector<std::size_t> all_rows = iota_rows(n);
  AdamState state = AdamState::for_model(mlp);

  TrainResult result{mlp, {}, 0};
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> perm(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(config.seed, epoch));
    std::shuffle(perm.begin(), perm.end(), rng);

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const std::span<const std::size_t> idx(perm.data() + start, end - start);
      const Matrix x = train_data.select_rows(idx);
      Matrix batch_targets;
      Targets targets{constant_target};
      if (per_row_targets) {
        batch_targets = per_row_targets->select_rows(idx);
        targets.per_row = &batch_targets;
      }
      const auto lg = loss_and_gradients_impl(mlp, x, targets, config.loss, penalty, idx);
      adam_step(mlp, lg.gradients, state, config.learning_rate);
    }

    const double loss = evaluate_loss_impl(mlp, train_data, Targets{constant_target, per_row_targets},
                                           config.loss, penalty, all_rows);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(loss);
    if (loss < best) {
      best = loss;
      result.net = mlp;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best > 0 && since_best >= config.patience) break;
  }
  return result;
}

}  // namespace

TrainResult train(Mlp mlp, const Matrix& train_data, std::span<const double> target,
                  const TrainConfig& config, const OutputPenalty* penalty) {
  check_target(mlp, target);
  return train_impl(std::move(mlp), train_data, nullptr, target, config, penalty);
}

TrainResult train_regression(Mlp mlp, const Matrix& inputs, const Matrix& targets,
                             const TrainConfig& config) {
  if (!mlp.layers.empty()) check_targets(mlp, inputs, targets);
  return train_impl(std::move(mlp), inputs, &targets, {}, config, nullptr);
}

// ---------------------------------------------------------------------------
// Gradient checking

namespace {

std::vector<bool> kink_pattern(const Mlp& mlp, const Matrix& batch) {
  const ForwardCache cache = forward_cached(mlp, batch);
  std::vector<bool> pattern;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    if (mlp.layers[k].activation == Activation::identity) continue;
    for (double z : cache.pre[k].values()) pattern.push_back(z > 0.0);
  }
  return pattern;
}

}  // namespace

NumericGradient numeric_gradients(const Mlp& mlp, const Matrix& batch,
                                  std::span<const double> target, double eps) {
  if (!(eps > 0.0)) throw UsageError("finite-difference step must be positive");
  const std::vector<bool> base = kink_pattern(mlp, batch);
  Mlp probe = mlp;
  const std::size_t count = mlp.parameter_count();
  NumericGradient result;
  result.values.resize(count);
  result.crosses_kink.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const double original = probe.parameter(p);
    probe.parameter(p) = original + eps;
    const double plus = evaluate_loss(probe, batch, target, LossKind::squared);
    const bool kink_plus = kink_pattern(probe, batch) != base;
    probe.parameter(p) = original - eps;
    const double minus = evaluate_loss(probe, batch, target, LossKind::squared);
    const bool kink_minus = kink_pattern(probe, batch) != base;
    probe.parameter(p) = original;
    result.values[p] = (plus - minus) / (2.0 * eps);
    result.crosses_kink[p] = kink_plus || kink_minus;
  }
  return result;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          const std::vector<bool>& use) {
  if (analytic.size() != numeric.size() || (!use.empty() && use.size() != analytic.size())) {
    throw DataError("gradient vectors differ in length");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!use.empty() && !use[i]) continue;
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-12});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

GradCheckResult grad_check(const Mlp& mlp, const Matrix& batch, std::span<const double> target,
                           double eps) {
  const auto analytic = loss_and_gradients(mlp, batch, target, LossKind::squared).gradients.flatten();
  const auto numeric = numeric_gradients(mlp, batch, target, eps);
  std::vector<bool> use(numeric.crosses_kink.size());
  GradCheckResult result;
  for (std::size_t i = 0; i < use.size(); ++i) {
    use[i] = !numeric.crosses_kink[i];
    if (use[i]) {
      ++result.checked;
    } else {
      ++result.skipped_at_kinks;
    }
  }
  result.max_relative_error = max_relative_error(analytic, numeric.values, use);
  return result;
}

}  // namespace dean::nn
