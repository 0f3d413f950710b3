#include "qemine/optimizer.hpp"

#include <cmath>

#include "qemine/error.hpp"

namespace qemine {

void Adam::step(const std::string& block, std::span<float> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw ContractViolation("gradient/parameter size mismatch in block '" + block + "'");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError("non-finite gradient in parameter block '" + block + "' at index " +
                          std::to_string(i));
    }
  }
  auto& s = state_[block];
  if (s.m.empty()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const kernels::AdamStep coeffs{config_.learningRate, config_.beta1, config_.beta2, config_.epsilon, s.step};
  if (exec_ == Exec::kSerial) {
    kernels::adam_update_serial(params, grads, s.m, s.v, coeffs);
  } else {
    kernels::adam_update_omp(params, grads, s.m, s.v, coeffs);
  }
}

}  // namespace qemine
