#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "layer_oracles.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/nn/layers.hpp"
#include "questcnn/nn/reference.hpp"

using namespace questcnn;
using namespace questcnn::nn;

TEST_SUITE("layers") {

namespace {

std::vector<Channels> random_batch(std::size_t B, std::size_t C, std::size_t n, std::size_t k,
                                   Rng& rng) {
  std::vector<Channels> batch(B);
  for (auto& s : batch)
    for (std::size_t c = 0; c < C; ++c) s.push_back(testing::random_array(n, k, rng));
  return batch;
}

}  // namespace

TEST_CASE("parallel conv forward matches the serial reference bit for bit") {
  Rng rng(1);
  for (std::size_t h : {1, 2, 4}) {
    ConvBank bank(h, 3, 7, 5);
    bank.weights = testing::random_array(5, 3 * h * 7, rng);
    bank.bias = testing::random_array(1, 5, rng);
    const auto batch = random_batch(6, 3, 9, 7, rng);
    std::vector<Array2> par, ser;
    conv_bank_forward(batch, bank, par);
    reference::conv_bank_forward(batch, bank, ser);
    REQUIRE(par.size() == ser.size());
    for (std::size_t b = 0; b < par.size(); ++b) CHECK(par[b].values() == ser[b].values());
  }
}

TEST_CASE("parallel conv backward matches the serial reference bit for bit") {
  Rng rng(2);
  ConvBank bank(3, 2, 4, 6);
  bank.weights = testing::random_array(6, 2 * 3 * 4, rng);
  const auto batch = random_batch(5, 2, 8, 4, rng);
  std::vector<Array2> dz;
  for (int b = 0; b < 5; ++b) dz.push_back(testing::random_array(6, 6, rng));
  ConvBank g1(3, 2, 4, 6), g2(3, 2, 4, 6);
  auto dx1 = batch, dx2 = batch;
  for (auto* dx : {&dx1, &dx2})
    for (auto& s : *dx)
      for (auto& c : s) c.fill(0.0);
  conv_bank_backward(batch, bank, dz, g1, &dx1);
  reference::conv_bank_backward(batch, bank, dz, g2, &dx2);
  CHECK(g1.weights.values() == g2.weights.values());
  CHECK(g1.bias.values() == g2.bias.values());
  for (std::size_t b = 0; b < dx1.size(); ++b)
    for (std::size_t c = 0; c < 2; ++c) CHECK(dx1[b][c].values() == dx2[b][c].values());
}

TEST_CASE("parallel dense matches the serial reference") {
  Rng rng(3);
  const Array2 x = testing::random_array(7, 11, rng), w = testing::random_array(5, 11, rng),
               b = testing::random_array(1, 5, rng);
  Array2 y1, y2;
  dense_forward(x, w, b, y1);
  reference::dense_forward(x, w, b, y2);
  CHECK(y1.values() == y2.values());
}

TEST_CASE("single-filter conv applies the activation to the oracle pre-activation") {
  Rng rng(4);
  const Channels x = {testing::random_array(6, 3, rng), testing::random_array(6, 3, rng)};
  ConvBank bank(2, 2, 3, 1);
  bank.weights = testing::random_array(1, 12, rng);
  bank.bias[0] = 0.1;
  const auto z = oracle::conv(x, bank);
  const auto relu = conv_forward(x, bank.filter(0), Activation::relu);
  const auto th = conv_forward(x, bank.filter(0), Activation::tanh);
  REQUIRE(relu.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(relu[i] == doctest::Approx(std::max(0.0L, z[0][i])).epsilon(1e-12));
    CHECK(th[i] == doctest::Approx(std::tanh(static_cast<double>(z[0][i]))).epsilon(1e-12));
  }
}

TEST_CASE("conv rejects windows longer than the input") {
  ConvBank bank(5, 1, 2, 1);
  const Channels x = {Array2(4, 2, 0.0)};
  std::vector<Array2> out;
  CHECK_THROWS(conv_bank_forward(std::span<const Channels>(&x, 1), bank, out));
}

TEST_CASE("max pooling picks the first maximum") {
  const std::vector<double> v = {0.1, 0.7, -2.0, 0.7};
  const auto r = maxpool_time(v);
  CHECK(r.value == 0.7);
  CHECK(r.argmax == 1);
  CHECK_THROWS(maxpool_time(std::vector<double>{}));
}

TEST_CASE("softmax is stable for extreme logits") {
  const std::vector<double> logits = {1000.0, 0.0, -1000.0};
  const auto p = softmax(logits);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(log_sum_exp(logits)));
  std::vector<double> g(3);
  const double loss = softmax_xent(logits, 2, g);
  CHECK(loss == doctest::Approx(2000.0));
  CHECK(g[2] == doctest::Approx(-1.0));
}

TEST_CASE("dropout: identity at eval, inverted scaling at train") {
  Rng rng(5);
  const Array2 x(200, 50, 1.0);
  CHECK(dropout(x, 0.5, Mode::eval, rng).values() == x.values());
  Array2 mask;
  const Array2 y = dropout(x, 0.5, Mode::train, rng, &mask);
  double sum = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK((y[i] == 0.0 || y[i] == 2.0));
    sum += y[i];
  }
  CHECK(sum / y.size() == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(check_rate(1.0), UsageError);
  CHECK_THROWS_AS(check_rate(-0.1), UsageError);
}

TEST_CASE("batch norm eval mode uses running statistics") {
  BatchNorm bn(2);
  bn.running_mean[0] = 1.0;
  bn.running_var[0] = 4.0;
  Array2 x(1, 2, 3.0), y;
  batchnorm_forward(x, std::as_const(bn), y);
  CHECK(y(0, 0) == doctest::Approx(2.0 / std::sqrt(4.0 + bn.eps)));
  CHECK(y(0, 1) == doctest::Approx(3.0 / std::sqrt(1.0 + bn.eps)));
}

TEST_CASE("batch norm training updates running statistics") {
  Rng rng(6);
  BatchNorm bn(3);
  const Array2 x = testing::random_array(8, 3, rng);
  Array2 y;
  batchnorm_forward(x, bn, Mode::train, y);
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(bn.running_mean[f] != 0.0);
    CHECK(bn.running_var[f] != 1.0);
  }
}

TEST_CASE("grad_check agrees with a dense layer's analytic gradient") {
  Rng rng(7);
  const Array2 x = testing::random_array(4, 5, rng);
  Array2 w = testing::random_array(3, 5, rng), b = testing::random_array(1, 3, rng);
  const std::size_t labels[] = {0, 2, 1, 2};
  auto loss_and_grad = [&](Array2* dw, Array2* db) {
    Array2 y;
    dense_forward(x, w, b, y);
    Array2 dy(4, 3);
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      std::vector<double> g(3);
      total += softmax_xent(std::span<const double>(&y(i, 0), 3), labels[i], g);
      for (std::size_t j = 0; j < 3; ++j) dy(i, j) = g[j];
    }
    if (dw) {
      Array2 dx;
      dense_backward(x, w, dy, *dw, *db, &dx);
    }
    return total;
  };
  Array2 dw(3, 5), db(1, 3);
  loss_and_grad(&dw, &db);
  std::vector<GradCheckParam> params = {{"w", w.flat(), dw.flat()}, {"b", b.flat(), db.flat()}};
  const auto r = grad_check([&] { return loss_and_grad(nullptr, nullptr); }, params);
  CHECK(r.passes(1e-6));
  CHECK(r.checked == 18);
}

}  // TEST_SUITE
