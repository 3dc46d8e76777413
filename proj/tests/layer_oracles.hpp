#pragma once

// Scalar re-derivations of each layer straight from its defining formula,
// in long double, with no shared code paths with the library kernels.

#include <cmath>
#include <vector>

#include "questcnn/nn/layers.hpp"

namespace oracle {

using questcnn::nn::Array2;
using questcnn::nn::Channels;
using questcnn::nn::ConvBank;

// z[f][i] = sum_c sum_r sum_j W_f[c][r][j] * X_c[i + r][j] + b_f
inline std::vector<std::vector<long double>> conv(const Channels& x, const ConvBank& bank) {
  const std::size_t n = x[0].rows(), k = x[0].cols(), h = bank.window;
  std::vector<std::vector<long double>> z(bank.maps(), std::vector<long double>(n - h + 1));
  for (std::size_t f = 0; f < bank.maps(); ++f)
    for (std::size_t i = 0; i + h <= n; ++i) {
      long double acc = bank.bias(0, f);
      for (std::size_t c = 0; c < x.size(); ++c)
        for (std::size_t r = 0; r < h; ++r)
          for (std::size_t j = 0; j < k; ++j)
            acc += static_cast<long double>(bank.weights(f, (c * h + r) * k + j)) * x[c](i + r, j);
      z[f][i] = acc;
    }
  return z;
}

struct PoolResult {
  double value;
  std::size_t index;
};

inline PoolResult maxpool(const std::vector<double>& v) {
  PoolResult best{v[0], 0};
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > best.value) best = {v[i], i};
  return best;
}

struct XentResult {
  long double loss;
  std::vector<long double> grad;
};

inline XentResult softmax_xent(const std::vector<double>& logits, std::size_t label) {
  long double m = logits[0];
  for (double l : logits) m = std::max<long double>(m, l);
  long double z = 0;
  for (double l : logits) z += std::exp(static_cast<long double>(l) - m);
  XentResult r;
  r.loss = -(static_cast<long double>(logits[label]) - m - std::log(z));
  for (std::size_t i = 0; i < logits.size(); ++i)
    r.grad.push_back(std::exp(static_cast<long double>(logits[i]) - m) / z - (i == label ? 1 : 0));
  return r;
}

// Training-mode batch norm over columns: biased batch variance.
inline std::vector<std::vector<long double>> batchnorm(const Array2& x, const Array2& gamma,
                                                       const Array2& beta, double eps) {
  const std::size_t B = x.rows(), F = x.cols();
  std::vector<std::vector<long double>> y(B, std::vector<long double>(F));
  for (std::size_t f = 0; f < F; ++f) {
    long double mean = 0;
    for (std::size_t b = 0; b < B; ++b) mean += x(b, f);
    mean /= B;
    long double var = 0;
    for (std::size_t b = 0; b < B; ++b) var += (x(b, f) - mean) * (x(b, f) - mean);
    var /= B;
    for (std::size_t b = 0; b < B; ++b)
      y[b][f] = gamma(0, f) * (x(b, f) - mean) / std::sqrt(var + eps) + beta(0, f);
  }
  return y;
}

// Adam as written in its original algorithm listing, one scalar at a time.
struct ScalarAdam {
  long double m = 0, v = 0;
  int t = 0;
  long double step(long double theta, long double g, long double lr, long double b1 = 0.9L,
                   long double b2 = 0.999L, long double eps = 1e-8L) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const long double mhat = m / (1 - std::pow(b1, t));
    const long double vhat = v / (1 - std::pow(b2, t));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace oracle
