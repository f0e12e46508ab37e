#pragma once

#include <cstdint>
#include <vector>

#include "cdimc/autodiff.hpp"

namespace cdimc {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Plain SGD (p <- p - lr * g) or bias-corrected Adam over a fixed parameter
// set. The parameters are borrowed and must outlive the optimizer.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<Parameter*> params);

  // Applies one update from the accumulated gradients.
  void step();
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<Parameter*> params_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  std::int64_t steps_ = 0;
};

}  // namespace cdimc
