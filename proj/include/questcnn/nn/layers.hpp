#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "questcnn/nn/array.hpp"
#include "questcnn/rng.hpp"

namespace questcnn::nn {

enum class Mode { train, eval };
enum class Activation { relu, tanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

double activate(double x, Activation a);
// Derivative expressed through the activation output y = f(x).
double activation_grad_from_output(double y, Activation a);

// One sentence: C channel matrices, each n x k.
using Channels = std::vector<Array2>;

// ---------------------------------------------------------------------------
// Convolution

// A single filter of window h: one h x k block per channel, responses summed
// across channels, one bias.
struct ConvFilter {
  std::size_t window = 1;
  std::vector<Array2> weights;  // per channel, h x k
  double bias = 0.0;
};

// Pre-activation responses, length n - h + 1.
std::vector<double> conv_preactivation(std::span<const Array2> channels, const ConvFilter& filter);
// c_i = f(sum_ch <weights_ch, window_ch(i)> + bias).
std::vector<double> conv_forward(std::span<const Array2> channels, const ConvFilter& filter,
                                 Activation act = Activation::relu);

// t filters of one window size. Row f of `weights` is the flattened
// (channel, row, column) block of filter f, so the window of channel c at
// position i is the contiguous slice rows i..i+h-1 of the n x k input.
struct ConvBank {
  std::size_t window = 1;
  std::size_t channels = 1;
  std::size_t dim = 1;
  Array2 weights;  // maps x (channels * window * dim)
  Array2 bias;     // 1 x maps

  ConvBank() = default;
  ConvBank(std::size_t window, std::size_t channels, std::size_t dim, std::size_t maps);
  std::size_t maps() const { return weights.rows(); }
  std::size_t fan_in() const { return channels * window * dim; }
  ConvFilter filter(std::size_t f) const;
};

// Batch forward: out[b] is maps x (n - h + 1), pre-activation.
// Parallel over (sentence, filter); every output has a single writer, so
// results do not depend on the thread count.
void conv_bank_forward(std::span<const Channels> batch, const ConvBank& bank,
                       std::vector<Array2>& out);

// dz[b] is maps x (n - h + 1). Accumulates into grad.weights / grad.bias and,
// when dx is non-null, into (*dx)[b][c].
void conv_bank_backward(std::span<const Channels> batch, const ConvBank& bank,
                        std::span<const Array2> dz, ConvBank& grad, std::vector<Channels>* dx);

// ---------------------------------------------------------------------------
// Pooling

struct MaxPoolResult {
  double value = 0.0;
  std::size_t argmax = 0;  // first index on ties
};

MaxPoolResult maxpool_time(std::span<const double> feature_map);

// ---------------------------------------------------------------------------
// Dense

// y = x W^T + b, x is B x in, W is out x in, b is 1 x out.
void dense_forward(const Array2& x, const Array2& weights, const Array2& bias, Array2& y);
// Accumulates dW, db; overwrites dx when non-null.
void dense_backward(const Array2& x, const Array2& weights, const Array2& dy, Array2& dweights,
                    Array2& dbias, Array2* dx);

// ---------------------------------------------------------------------------
// Softmax / cross-entropy

std::vector<double> softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);
// -log softmax(logits)[label]; writes softmax - onehot into dlogits when non-empty.
double softmax_xent(std::span<const double> logits, std::size_t label,
                    std::span<double> dlogits = {});

// ---------------------------------------------------------------------------
// Dropout

void check_rate(double rate);

// Inverted dropout; in eval mode (or rate 0) the mask is all ones.
// mask receives the per-element scale (0 or 1/(1-rate)).
Array2 dropout(const Array2& x, double rate, Mode mode, Rng& rng, Array2* mask = nullptr);

// Zeroes whole token rows jointly across channels, scaling survivors by
// 1/(1-rate). Returns the per-row scale.
std::vector<double> embedding_dropout(Channels& channels, double rate, Mode mode, Rng& rng);

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNorm {
  Array2 gamma;         // 1 x F
  Array2 beta;          // 1 x F
  Array2 running_mean;  // 1 x F
  Array2 running_var;   // 1 x F
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t features);
  std::size_t features() const { return gamma.cols(); }
};

struct BatchNormCache {
  // Normalized inputs laid out like the forward input.
  std::vector<Array2> xhat;
  std::vector<double> inv_std;
  std::size_t count = 0;  // samples per feature
  bool training = true;   // batch statistics (train) or running statistics (eval)
};

// Standard variant: x is B x F, statistics per column. Training mode needs B >= 2.
void batchnorm_forward(const Array2& x, BatchNorm& bn, Mode mode, Array2& y,
                       BatchNormCache* cache = nullptr);
// Eval mode with frozen running statistics.
void batchnorm_forward(const Array2& x, const BatchNorm& bn, Array2& y,
                       BatchNormCache* cache = nullptr);
void batchnorm_backward(const BatchNormCache& cache, const BatchNorm& bn, const Array2& dy,
                        Array2& dx, Array2& dgamma, Array2& dbeta);

// Spatial variant: x[b] is F x L, statistics per feature over batch x time.
void spatial_batchnorm_forward(std::span<const Array2> x, BatchNorm& bn, Mode mode,
                               std::vector<Array2>& y, BatchNormCache* cache = nullptr);
void spatial_batchnorm_forward(std::span<const Array2> x, const BatchNorm& bn,
                               std::vector<Array2>& y, BatchNormCache* cache = nullptr);
void spatial_batchnorm_backward(const BatchNormCache& cache, const BatchNorm& bn,
                                std::span<const Array2> dy, std::vector<Array2>& dx,
                                Array2& dgamma, Array2& dbeta);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Array2> first_moment;
  std::vector<Array2> second_moment;
};

// Bias-corrected update. Moments are allocated on the first call.
void adam_step(std::span<Array2* const> params, std::span<const Array2* const> grads,
               AdamState& state);

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckParam {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passes(double tolerance) const { return max_rel_error <= tolerance; }
};

// Central differences; error = |ga - gn| / max(floor, |ga| + |gn|). The floor
// keeps gradients that are zero up to rounding from reading as 100% errors.
GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckParam> params, double step = 1e-5,
                           double floor = 1e-6);

}  // namespace questcnn::nn
