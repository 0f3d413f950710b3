#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qemine/kernels.hpp"

namespace qemine {

struct AdamConfig {
  double learningRate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment estimation with bias correction. Moment state and the step
// counter are kept per named parameter block.
class Adam {
 public:
  struct BlockState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    bool operator==(const BlockState&) const = default;
  };

  explicit Adam(AdamConfig config = {}, Exec exec = Exec::kParallel) : config_(config), exec_(exec) {}

  // Applies one update. Throws TrainingError naming `block` if any gradient
  // entry is non-finite; parameters are untouched in that case.
  void step(const std::string& block, std::span<float> params, std::span<const double> grads);

  const AdamConfig& config() const { return config_; }
  const std::map<std::string, BlockState>& state() const { return state_; }

 private:
  AdamConfig config_;
  Exec exec_;
  std::map<std::string, BlockState> state_;
};

}  // namespace qemine
