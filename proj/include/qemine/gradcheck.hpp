#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qemine {

enum class LossKind { kQeMse, kStsMse, kNliCrossEntropy, kContrastive, kAlignment };

std::string_view loss_kind_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

struct GradCheckReport {
  struct Block {
    std::string name;
    double maxRelError = 0.0;
  };
  LossKind kind = LossKind::kQeMse;
  double epsilon = 1e-4;
  std::vector<Block> blocks;
  // Contrastive samples redrawn because they sat too close to the hinge.
  std::size_t excludedSamples = 0;

  double max_error() const;
};

// Builds a small random encoder/head configuration from `seed`, computes the
// analytic gradient of the chosen loss and compares it with central finite
// differences (f(p + eps) - f(p - eps)) / (2 eps) for every parameter.
// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(LossKind kind, std::uint64_t seed, double epsilon = 1e-4);

// CSV `block,max_rel_error` with a header line.
void write_gradcheck_csv(std::ostream& out, const GradCheckReport& report);

}  // namespace qemine
