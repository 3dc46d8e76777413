#pragma once

#include <span>
#include <vector>

#include "questcnn/nn/layers.hpp"

// Serial kernels that define the expected results of the parallel ones.
// They visit elements in the same order, so outputs match bit for bit.
namespace questcnn::nn::reference {

void conv_bank_forward(std::span<const Channels> batch, const ConvBank& bank,
                       std::vector<Array2>& out);

void conv_bank_backward(std::span<const Channels> batch, const ConvBank& bank,
                        std::span<const Array2> dz, ConvBank& grad, std::vector<Channels>* dx);

void dense_forward(const Array2& x, const Array2& weights, const Array2& bias, Array2& y);

}  // namespace questcnn::nn::reference
