#include <doctest.h>

#include "qemine/gradcheck.hpp"

using namespace qemine;

TEST_CASE("analytic gradients match finite differences") {
  for (auto kind : {LossKind::kQeMse, LossKind::kStsMse, LossKind::kNliCrossEntropy, LossKind::kContrastive,
                    LossKind::kAlignment}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto r = grad_check(kind, seed, 1e-4);
      INFO(loss_kind_name(kind), " seed ", seed);
      CHECK(r.blocks.size() >= 4);
      CHECK(r.max_error() < 1e-3);
    }
  }
}

TEST_CASE("loss kind names round trip") {
  for (auto kind : {LossKind::kQeMse, LossKind::kStsMse, LossKind::kNliCrossEntropy, LossKind::kContrastive,
                    LossKind::kAlignment}) {
    CHECK(parse_loss_kind(loss_kind_name(kind)) == kind);
  }
  CHECK(!parse_loss_kind("hinge").has_value());
}
