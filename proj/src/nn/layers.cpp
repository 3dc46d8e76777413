#include "questcnn/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "questcnn/nn/reference.hpp"

namespace questcnn::nn {

std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw UsageError("unknown activation '" + std::string(name) + "'");
}

double activate(double x, Activation a) {
  return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

double activation_grad_from_output(double y, Activation a) {
  return a == Activation::relu ? (y > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

// ---------------------------------------------------------------------------

MaxPoolResult maxpool_time(std::span<const double> feature_map) {
  if (feature_map.empty()) throw UsageError("maxpool: empty feature map");
  MaxPoolResult r{feature_map[0], 0};
  for (std::size_t i = 1; i < feature_map.size(); ++i)
    if (feature_map[i] > r.value) r = {feature_map[i], i};
  return r;
}

// ---------------------------------------------------------------------------

namespace {

void check_dense(const Array2& x, const Array2& w, const Array2& b) {
  if (x.cols() != w.cols())
    throw UsageError("dense: input width " + std::to_string(x.cols()) + " vs weights " +
                     shape_string(w));
  if (b.rows() != 1 || b.cols() != w.rows()) throw UsageError("dense: bias shape mismatch");
}

}  // namespace

void dense_forward(const Array2& x, const Array2& weights, const Array2& bias, Array2& y) {
  check_dense(x, weights, bias);
  if (y.rows() != x.rows() || y.cols() != weights.rows()) y = Array2(x.rows(), weights.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(x.rows()); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const auto xr = x.row(b);
    for (std::size_t o = 0; o < weights.rows(); ++o) {
      const auto wr = weights.row(o);
      double acc = 0.0;
      for (std::size_t i = 0; i < xr.size(); ++i) acc += wr[i] * xr[i];
      y(b, o) = acc + bias[o];
    }
  }
}

void dense_backward(const Array2& x, const Array2& weights, const Array2& dy, Array2& dweights,
                    Array2& dbias, Array2* dx) {
  if (dy.rows() != x.rows() || dy.cols() != weights.rows())
    throw UsageError("dense backward: dy shape mismatch");
  if (!dweights.same_shape(weights) || dbias.cols() != weights.rows())
    throw UsageError("dense backward: gradient shape mismatch");
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < static_cast<std::ptrdiff_t>(weights.rows()); ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    auto gw = dweights.row(o);
    double gb = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
      const double g = dy(b, o);
      if (g == 0.0) continue;
      gb += g;
      const auto xr = x.row(b);
      for (std::size_t i = 0; i < xr.size(); ++i) gw[i] += g * xr[i];
    }
    dbias[o] += gb;
  }
  if (!dx) return;
  if (!dx->same_shape(x)) *dx = Array2(x.rows(), x.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(x.rows()); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    auto dr = dx->row(b);
    std::fill(dr.begin(), dr.end(), 0.0);
    for (std::size_t o = 0; o < weights.rows(); ++o) {
      const double g = dy(b, o);
      if (g == 0.0) continue;
      const auto wr = weights.row(o);
      for (std::size_t i = 0; i < dr.size(); ++i) dr[i] += g * wr[i];
    }
  }
}

void reference::dense_forward(const Array2& x, const Array2& weights, const Array2& bias,
                              Array2& y) {
  check_dense(x, weights, bias);
  y = Array2(x.rows(), weights.rows());
  for (std::size_t b = 0; b < x.rows(); ++b)
    for (std::size_t o = 0; o < weights.rows(); ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.cols(); ++i) acc += weights(o, i) * x(b, i);
      y(b, o) = acc + bias[o];
    }
}

// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax: no logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(m)) throw NumericError("softmax: non-finite logits");
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax: no logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(m)) throw NumericError("softmax: non-finite logits");
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= s;
  return p;
}

double softmax_xent(std::span<const double> logits, std::size_t label, std::span<double> dlogits) {
  if (label >= logits.size())
    throw UsageError("softmax_xent: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  for (double v : logits)
    if (!std::isfinite(v)) throw NumericError("softmax_xent: non-finite logits");
  const double loss = log_sum_exp(logits) - logits[label];
  if (!dlogits.empty()) {
    if (dlogits.size() != logits.size()) throw UsageError("softmax_xent: gradient size mismatch");
    const auto p = softmax(logits);
    for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i] - (i == label ? 1.0 : 0.0);
  }
  return std::max(loss, 0.0);
}

// ---------------------------------------------------------------------------

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw UsageError("dropout rate must be in [0, 1), got " + std::to_string(rate));
}

Array2 dropout(const Array2& x, double rate, Mode mode, Rng& rng, Array2* mask) {
  check_rate(rate);
  if (mask) *mask = Array2(x.rows(), x.cols(), 1.0);
  if (mode == Mode::eval || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Array2 y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = rng.bernoulli(rate) ? 0.0 : keep_scale;
    y[i] = x[i] * s;
    if (mask) (*mask)[i] = s;
  }
  return y;
}

std::vector<double> embedding_dropout(Channels& channels, double rate, Mode mode, Rng& rng) {
  check_rate(rate);
  const std::size_t n = channels.empty() ? 0 : channels.front().rows();
  std::vector<double> scale(n, 1.0);
  if (mode == Mode::eval || rate == 0.0) return scale;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& s : scale) s = rng.bernoulli(rate) ? 0.0 : keep_scale;
  for (auto& m : channels) {
    if (m.rows() != n) throw UsageError("embedding_dropout: channels differ in length");
    for (std::size_t r = 0; r < n; ++r)
      for (auto& v : m.row(r)) v *= scale[r];
  }
  return scale;
}

// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t features)
    : gamma(1, features, 1.0),
      beta(1, features, 0.0),
      running_mean(1, features, 0.0),
      running_var(1, features, 1.0) {}

namespace {

void update_running(BatchNorm& bn, std::size_t f, double mean, double var, std::size_t count) {
  const double unbiased = count > 1 ? var * static_cast<double>(count) / (count - 1.0) : var;
  bn.running_mean[f] = (1.0 - bn.momentum) * bn.running_mean[f] + bn.momentum * mean;
  bn.running_var[f] = (1.0 - bn.momentum) * bn.running_var[f] + bn.momentum * unbiased;
}

}  // namespace

namespace {

void batchnorm_impl(const Array2& x, const BatchNorm& bn, BatchNorm* running, Mode mode,
                    Array2& y, BatchNormCache* cache) {
  const std::size_t B = x.rows();
  const std::size_t F = x.cols();
  if (bn.features() != F) throw UsageError("batchnorm: feature count mismatch");
  if (mode == Mode::train && B < 2) throw UsageError("batchnorm: training needs a batch of at least 2");
  if (!y.same_shape(x)) y = Array2(B, F);
  Array2 xhat(B, F);
  std::vector<double> inv_std(F);

  for (std::size_t f = 0; f < F; ++f) {
    double mean, var;
    if (mode == Mode::train) {
      mean = 0.0;
      for (std::size_t b = 0; b < B; ++b) mean += x(b, f);
      mean /= static_cast<double>(B);
      var = 0.0;
      for (std::size_t b = 0; b < B; ++b) var += (x(b, f) - mean) * (x(b, f) - mean);
      var /= static_cast<double>(B);
      if (running) update_running(*running, f, mean, var, B);
    } else {
      mean = bn.running_mean[f];
      var = bn.running_var[f];
    }
    inv_std[f] = 1.0 / std::sqrt(var + bn.eps);
    for (std::size_t b = 0; b < B; ++b) {
      xhat(b, f) = (x(b, f) - mean) * inv_std[f];
      y(b, f) = bn.gamma[f] * xhat(b, f) + bn.beta[f];
    }
  }
  if (cache) {
    cache->xhat = {std::move(xhat)};
    cache->inv_std = std::move(inv_std);
    cache->count = B;
    cache->training = mode == Mode::train;
  }
}

}  // namespace

void batchnorm_forward(const Array2& x, BatchNorm& bn, Mode mode, Array2& y,
                       BatchNormCache* cache) {
  batchnorm_impl(x, bn, &bn, mode, y, cache);
}

void batchnorm_forward(const Array2& x, const BatchNorm& bn, Array2& y, BatchNormCache* cache) {
  batchnorm_impl(x, bn, nullptr, Mode::eval, y, cache);
}

void batchnorm_backward(const BatchNormCache& cache, const BatchNorm& bn, const Array2& dy,
                        Array2& dx, Array2& dgamma, Array2& dbeta) {
  const Array2& xhat = cache.xhat.at(0);
  if (!dy.same_shape(xhat)) throw UsageError("batchnorm backward: dy shape mismatch");
  const std::size_t B = xhat.rows();
  const std::size_t F = xhat.cols();
  if (!dx.same_shape(xhat)) dx = Array2(B, F);
  const double n = static_cast<double>(B);
  for (std::size_t f = 0; f < F; ++f) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      sum_dy += dy(b, f);
      sum_dy_xhat += dy(b, f) * xhat(b, f);
    }
    dgamma[f] += sum_dy_xhat;
    dbeta[f] += sum_dy;
    const double g = bn.gamma[f] * cache.inv_std[f];
    for (std::size_t b = 0; b < B; ++b) {
      dx(b, f) = cache.training
                     ? g * (dy(b, f) - sum_dy / n - xhat(b, f) * sum_dy_xhat / n)
                     : g * dy(b, f);
    }
  }
}

namespace {

void spatial_batchnorm_impl(std::span<const Array2> x, const BatchNorm& bn, BatchNorm* running,
                            Mode mode, std::vector<Array2>& y, BatchNormCache* cache) {
  const std::size_t B = x.size();
  if (B == 0) throw UsageError("spatial batchnorm: empty batch");
  const std::size_t F = bn.features();
  for (const auto& m : x)
    if (m.rows() != F) throw UsageError("spatial batchnorm: feature count mismatch");
  if (mode == Mode::train && B < 2)
    throw UsageError("spatial batchnorm: training needs a batch of at least 2");

  y.resize(B);
  std::vector<Array2> xhat(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (!y[b].same_shape(x[b])) y[b] = Array2(x[b].rows(), x[b].cols());
    xhat[b] = Array2(x[b].rows(), x[b].cols());
  }
  std::size_t count = 0;
  for (const auto& m : x) count += m.cols();
  std::vector<double> inv_std(F);

  for (std::size_t f = 0; f < F; ++f) {
    double mean, var;
    if (mode == Mode::train) {
      mean = 0.0;
      for (const auto& m : x)
        for (double v : m.row(f)) mean += v;
      mean /= static_cast<double>(count);
      var = 0.0;
      for (const auto& m : x)
        for (double v : m.row(f)) var += (v - mean) * (v - mean);
      var /= static_cast<double>(count);
      if (running) update_running(*running, f, mean, var, count);
    } else {
      mean = bn.running_mean[f];
      var = bn.running_var[f];
    }
    inv_std[f] = 1.0 / std::sqrt(var + bn.eps);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < x[b].cols(); ++t) {
        xhat[b](f, t) = (x[b](f, t) - mean) * inv_std[f];
        y[b](f, t) = bn.gamma[f] * xhat[b](f, t) + bn.beta[f];
      }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->count = count;
    cache->training = mode == Mode::train;
  }
}

}  // namespace

void spatial_batchnorm_forward(std::span<const Array2> x, BatchNorm& bn, Mode mode,
                               std::vector<Array2>& y, BatchNormCache* cache) {
  spatial_batchnorm_impl(x, bn, &bn, mode, y, cache);
}

void spatial_batchnorm_forward(std::span<const Array2> x, const BatchNorm& bn,
                               std::vector<Array2>& y, BatchNormCache* cache) {
  spatial_batchnorm_impl(x, bn, nullptr, Mode::eval, y, cache);
}

void spatial_batchnorm_backward(const BatchNormCache& cache, const BatchNorm& bn,
                                std::span<const Array2> dy, std::vector<Array2>& dx,
                                Array2& dgamma, Array2& dbeta) {
  const std::size_t B = cache.xhat.size();
  if (dy.size() != B) throw UsageError("spatial batchnorm backward: batch mismatch");
  dx.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (!dy[b].same_shape(cache.xhat[b]))
      throw UsageError("spatial batchnorm backward: dy shape mismatch");
    if (!dx[b].same_shape(dy[b])) dx[b] = Array2(dy[b].rows(), dy[b].cols());
  }
  const double n = static_cast<double>(cache.count);
  for (std::size_t f = 0; f < bn.features(); ++f) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < dy[b].cols(); ++t) {
        sum_dy += dy[b](f, t);
        sum_dy_xhat += dy[b](f, t) * cache.xhat[b](f, t);
      }
    dgamma[f] += sum_dy_xhat;
    dbeta[f] += sum_dy;
    const double g = bn.gamma[f] * cache.inv_std[f];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < dy[b].cols(); ++t)
        dx[b](f, t) = cache.training ? g * (dy[b](f, t) - sum_dy / n -
                                            cache.xhat[b](f, t) * sum_dy_xhat / n)
                                     : g * dy[b](f, t);
  }
}

// ---------------------------------------------------------------------------

void adam_step(std::span<Array2* const> params, std::span<const Array2* const> grads,
               AdamState& state) {
  if (params.size() != grads.size())
    throw UsageError("adam: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->same_shape(*grads[i]))
      throw UsageError("adam: parameter " + std::to_string(i) + " is " +
                       shape_string(*params[i]) + ", gradient is " + shape_string(*grads[i]));
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  } else if (state.first_moment.size() != params.size()) {
    throw UsageError("adam: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!state.first_moment[i].same_shape(*params[i]))
      throw UsageError("adam: moment shape mismatch for parameter " + std::to_string(i));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array2& p = *params[i];
    const Array2& g = *grads[i];
    Array2& m = state.first_moment[i];
    Array2& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckParam> params, double step,
                           double floor) {
  GradCheckResult result;
  auto eval = [&]() {
    const double l = loss();
    if (!std::isfinite(l)) throw NumericError("grad_check: non-finite loss");
    return l;
  };
  eval();
  for (const auto& p : params) {
    if (p.values.size() != p.analytic.size())
      throw UsageError("grad_check: '" + p.name + "' values and gradient differ in size");
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + step;
      const double up = eval();
      p.values[i] = saved - step;
      const double down = eval();
      p.values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p.analytic[i];
      const double err = std::abs(analytic - numeric) /
                         std::max(floor, std::abs(analytic) + std::abs(numeric));
      ++result.checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace questcnn::nn
