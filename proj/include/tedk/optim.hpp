#pragma once

#include <cstdint>
#include <vector>

#include "tedk/params.hpp"

namespace tedk {

// AdamW with decoupled weight decay and a polynomial learning-rate schedule.
// Moment buffers mirror the parameter set entry for entry.
struct OptimizerState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-6;
    double weight_decay = 0.01;
    double base_lr = 1e-4;
    std::int64_t total_steps = 1;
    double power = 0.9;
};

OptimizerState make_optimizer(const ParameterSet& params, double base_lr,
                              std::int64_t total_steps, double weight_decay = 0.01,
                              double power = 0.9);

// base_lr * (1 - t/T)^power, evaluated at the pre-increment step count, so
// the first step runs at base_lr and the schedule reaches 0 exactly at T.
double poly_lr(const OptimizerState& state);

// One update over every parameter, reading gradients accumulated on the
// tensors. A never-touched gradient buffer counts as zero.
void adamw_step(ParameterSet& params, OptimizerState& state);

}  // namespace tedk
