#include "tedk/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tedk {

OptimizerState make_optimizer(const ParameterSet& params, double base_lr,
                              std::int64_t total_steps, double weight_decay, double power) {
    if (base_lr <= 0.0) throw std::invalid_argument("optimizer: base_lr must be positive");
    if (total_steps < 1) throw std::invalid_argument("optimizer: total_steps must be >= 1");
    if (weight_decay < 0.0) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
    OptimizerState state;
    state.base_lr = base_lr;
    state.total_steps = total_steps;
    state.weight_decay = weight_decay;
    state.power = power;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = params.tensor_at(i).numel();
        state.m.emplace_back(n, 0.0);
        state.v.emplace_back(n, 0.0);
    }
    return state;
}

double poly_lr(const OptimizerState& state) {
    if (state.t >= state.total_steps) return 0.0;
    const double frac = 1.0 - static_cast<double>(state.t) / static_cast<double>(state.total_steps);
    return state.base_lr * std::pow(frac, state.power);
}

void adamw_step(ParameterSet& params, OptimizerState& state) {
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adamw_step: optimizer state does not match parameter set");
    }
    const double lr = poly_lr(state);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& param = params.tensor_at(i);
        std::vector<double>& theta = param.data();
        const std::vector<double>& grad = param.impl()->grad;
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        if (m.size() != theta.size()) {
            throw std::invalid_argument("adamw_step: moment shape mismatch at " + params.name_at(i));
        }
        const bool has_grad = grad.size() == theta.size();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double g = has_grad ? grad[k] : 0.0;
            if (std::isnan(g)) {
                throw std::runtime_error("adamw_step: NaN gradient in parameter " +
                                         params.name_at(i));
            }
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            theta[k] -= lr * (m_hat / (std::sqrt(v_hat) + state.eps_adam) +
                              state.weight_decay * theta[k]);
        }
    }
}

}  // namespace tedk
