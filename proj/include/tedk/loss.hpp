#pragma once

#include <cstdint>

#include "tedk/tensor.hpp"

namespace tedk {

struct SsiLossConfig {
    double alpha = 10.0;
    double eta = 0.85;
};

struct LossBreakdown {
    Tensor loss;  // scalar, differentiable w.r.t. pred
    double g_sq_mean = 0.0;
    double g_mean = 0.0;
    std::int64_t valid_count = 0;
};

// Scale-invariant log loss over the masked pixels:
//   g = ln(pred) - ln(gt),  loss = alpha * sqrt(mean(g^2) - eta * mean(g)^2)
// with the radicand clamped at 0 before the sqrt. The reductions accumulate
// in value-sorted order, so the loss is bitwise invariant under any joint
// permutation of the masked pixels.
LossBreakdown ssi_loss(const Tensor& pred, const Tensor& gt, const Tensor& mask,
                       SsiLossConfig cfg = {});

}  // namespace tedk
