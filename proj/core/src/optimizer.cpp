#include "cdimc/optimizer.hpp"

#include <cmath>

namespace cdimc {

Optimizer::Optimizer(OptimizerConfig config, std::vector<Parameter*> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate))
    throw ConfigError("optimizer: learning rate must be positive");
  if (config_.kind == OptimizerKind::Adam) {
    if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
        !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.epsilon > 0.0))
      throw ConfigError("optimizer: Adam betas must lie in [0, 1) and epsilon be positive");
    for (const Parameter* p : params_) {
      first_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      second_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
}

void Optimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Optimizer::step() {
  for (const Parameter* p : params_) require_same_shape(p->value, p->grad, "optimizer_step");
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::Sgd) {
    for (Parameter* p : params_) p->value -= lr * p->grad;
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    first_moment_[i] = b1 * first_moment_[i] + (1.0 - b1) * p.grad;
    second_moment_[i] = b2 * second_moment_[i] + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (first_moment_[i].array() / correction1) /
                       ((second_moment_[i].array() / correction2).sqrt() + config_.epsilon);
  }
}

}  // namespace cdimc
