#include <string>

#include "questcnn/nn/layers.hpp"
#include "questcnn/nn/reference.hpp"

namespace questcnn::nn {

ConvBank::ConvBank(std::size_t window_, std::size_t channels_, std::size_t dim_, std::size_t maps)
    : window(window_),
      channels(channels_),
      dim(dim_),
      weights(maps, channels_ * window_ * dim_),
      bias(1, maps) {
  if (window == 0 || channels == 0 || dim == 0 || maps == 0)
    throw UsageError("ConvBank: window, channels, dim and maps must be positive");
}

ConvFilter ConvBank::filter(std::size_t f) const {
  ConvFilter out;
  out.window = window;
  out.bias = bias[f];
  const double* w = weights.row(f).data();
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> block(w + c * window * dim, w + (c + 1) * window * dim);
    out.weights.emplace_back(window, dim, std::move(block));
  }
  return out;
}

namespace {

void check_batch(std::span<const Channels> batch, const ConvBank& bank) {
  for (const auto& x : batch) {
    if (x.size() != bank.channels)
      throw UsageError("conv: got " + std::to_string(x.size()) + " channels, filter expects " +
                       std::to_string(bank.channels));
    for (const auto& m : x) {
      if (m.cols() != bank.dim || !m.same_shape(x.front()))
        throw UsageError("conv: channel matrices must all be n x " + std::to_string(bank.dim));
      if (bank.window > m.rows())
        throw UsageError("conv: window " + std::to_string(bank.window) +
                         " exceeds sentence length " + std::to_string(m.rows()));
    }
  }
}

// Response of filter f at position i, channels summed in order, bias last.
inline double response(const Channels& x, const ConvBank& bank, std::size_t f, std::size_t i) {
  const std::size_t span = bank.window * bank.dim;
  const double* w = bank.weights.row(f).data();
  double acc = 0.0;
  for (std::size_t c = 0; c < bank.channels; ++c) {
    const double* xs = x[c].data() + i * bank.dim;
    const double* ws = w + c * span;
    double part = 0.0;
    for (std::size_t j = 0; j < span; ++j) part += ws[j] * xs[j];
    acc += part;
  }
  return acc + bank.bias[f];
}

void prepare_dx(std::span<const Channels> batch, std::vector<Channels>* dx) {
  if (!dx) return;
  if (dx->size() != batch.size()) dx->resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& d = (*dx)[b];
    if (d.size() != batch[b].size()) d.resize(batch[b].size());
    for (std::size_t c = 0; c < batch[b].size(); ++c)
      if (!d[c].same_shape(batch[b][c])) d[c] = Array2(batch[b][c].rows(), batch[b][c].cols());
  }
}

void check_grad(const ConvBank& bank, ConvBank& grad) {
  if (!grad.weights.same_shape(bank.weights) || !grad.bias.same_shape(bank.bias))
    throw UsageError("conv backward: gradient bank shape mismatch");
}

}  // namespace

void conv_bank_forward(std::span<const Channels> batch, const ConvBank& bank,
                       std::vector<Array2>& out) {
  check_batch(batch, bank);
  const std::size_t maps = bank.maps();
  out.resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t len = batch[b].front().rows() - bank.window + 1;
    if (out[b].rows() != maps || out[b].cols() != len) out[b] = Array2(maps, len);
  }
  const auto total = static_cast<std::ptrdiff_t>(batch.size() * maps);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < total; ++t) {
    const std::size_t b = static_cast<std::size_t>(t) / maps;
    const std::size_t f = static_cast<std::size_t>(t) % maps;
    auto row = out[b].row(f);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = response(batch[b], bank, f, i);
  }
}

void conv_bank_backward(std::span<const Channels> batch, const ConvBank& bank,
                        std::span<const Array2> dz, ConvBank& grad, std::vector<Channels>* dx) {
  check_batch(batch, bank);
  check_grad(bank, grad);
  if (dz.size() != batch.size()) throw UsageError("conv backward: dz batch size mismatch");
  prepare_dx(batch, dx);

  const std::size_t span = bank.window * bank.dim;
  const std::size_t maps = bank.maps();

  // Weight gradients: one filter per iteration.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(maps); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    double* gw = grad.weights.row(f).data();
    double gb = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto d = dz[b].row(f);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double g = d[i];
        if (g == 0.0) continue;
        gb += g;
        for (std::size_t c = 0; c < bank.channels; ++c) {
          const double* xs = batch[b][c].data() + i * bank.dim;
          double* gs = gw + c * span;
          for (std::size_t j = 0; j < span; ++j) gs[j] += g * xs[j];
        }
      }
    }
    grad.bias[f] += gb;
  }

  if (!dx) return;
  // Input gradients: one sentence per iteration.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(batch.size()); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    auto& out = (*dx)[b];
    for (std::size_t f = 0; f < maps; ++f) {
      const double* w = bank.weights.row(f).data();
      const auto d = dz[b].row(f);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double g = d[i];
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < bank.channels; ++c) {
          double* xs = out[c].data() + i * bank.dim;
          const double* ws = w + c * span;
          for (std::size_t j = 0; j < span; ++j) xs[j] += g * ws[j];
        }
      }
    }
  }
}

std::vector<double> conv_preactivation(std::span<const Array2> channels, const ConvFilter& filter) {
  if (channels.empty()) throw UsageError("conv: no channels");
  if (filter.weights.size() != channels.size())
    throw UsageError("conv: filter has " + std::to_string(filter.weights.size()) +
                     " channel blocks for " + std::to_string(channels.size()) + " channels");
  const std::size_t k = channels.front().cols();
  ConvBank bank(filter.window, channels.size(), k, 1);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (filter.weights[c].rows() != filter.window || filter.weights[c].cols() != k)
      throw UsageError("conv: filter blocks must be h x k");
    std::copy(filter.weights[c].values().begin(), filter.weights[c].values().end(),
              bank.weights.data() + c * filter.window * k);
  }
  bank.bias[0] = filter.bias;
  std::vector<Channels> batch{Channels(channels.begin(), channels.end())};
  std::vector<Array2> out;
  conv_bank_forward(batch, bank, out);
  auto row = out[0].row(0);
  return {row.begin(), row.end()};
}

std::vector<double> conv_forward(std::span<const Array2> channels, const ConvFilter& filter,
                                 Activation act) {
  auto c = conv_preactivation(channels, filter);
  for (auto& v : c) v = activate(v, act);
  return c;
}

// ---------------------------------------------------------------------------

namespace reference {

void conv_bank_forward(std::span<const Channels> batch, const ConvBank& bank,
                       std::vector<Array2>& out) {
  check_batch(batch, bank);
  const std::size_t span = bank.window * bank.dim;
  out.assign(batch.size(), Array2());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t len = batch[b].front().rows() - bank.window + 1;
    out[b] = Array2(bank.maps(), len);
    for (std::size_t f = 0; f < bank.maps(); ++f) {
      for (std::size_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < bank.channels; ++c) {
          double part = 0.0;
          for (std::size_t j = 0; j < span; ++j)
            part += bank.weights(f, c * span + j) * batch[b][c][i * bank.dim + j];
          acc += part;
        }
        out[b](f, i) = acc + bank.bias[f];
      }
    }
  }
}

void conv_bank_backward(std::span<const Channels> batch, const ConvBank& bank,
                        std::span<const Array2> dz, ConvBank& grad, std::vector<Channels>* dx) {
  check_batch(batch, bank);
  check_grad(bank, grad);
  prepare_dx(batch, dx);
  const std::size_t span = bank.window * bank.dim;
  for (std::size_t f = 0; f < bank.maps(); ++f) {
    double gb = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t i = 0; i < dz[b].cols(); ++i) {
        const double g = dz[b](f, i);
        if (g == 0.0) continue;
        gb += g;
        for (std::size_t c = 0; c < bank.channels; ++c)
          for (std::size_t j = 0; j < span; ++j)
            grad.weights(f, c * span + j) += g * batch[b][c][i * bank.dim + j];
      }
    }
    grad.bias[f] += gb;
  }
  if (!dx) return;
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t f = 0; f < bank.maps(); ++f)
      for (std::size_t i = 0; i < dz[b].cols(); ++i) {
        const double g = dz[b](f, i);
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < bank.channels; ++c)
          for (std::size_t j = 0; j < span; ++j)
            (*dx)[b][c][i * bank.dim + j] += g * bank.weights(f, c * span + j);
      }
}

}  // namespace reference

}  // namespace questcnn::nn
