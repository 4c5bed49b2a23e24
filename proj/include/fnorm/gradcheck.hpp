#pragma once

#include <fnorm/regularizers.hpp>

#include <cstdint>
#include <vector>

namespace fnorm {

struct GradCheckOptions {
  double h = 1e-5;
  double tolerance = 1e-4;
  double magnitude_floor = 1e-8;  // coordinates where both gradients are smaller are not compared
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index compared = 0;
  Index below_floor = 0;
  /// Coordinates whose +-h step changes some ReLU activation pattern; the
  /// loss is not differentiable there on the scale of h.
  Index kink_skipped = 0;
  Index total = 0;
  /// Relative gap between the tape loss and the reference evaluation at the
  /// unperturbed point; large values mean the replayed draws are off.
  double reference_mismatch = 0.0;

  bool passed(double tolerance) const { return max_rel_error <= tolerance && reference_mismatch <= 1e-12; }
};

/// Compares backward() of regularized_loss against central differences for
/// every trainable coordinate. The differences are taken on an independent
/// long-double evaluation of the same loss, with dropout masks, Q batch and
/// Sobolev direction replayed from the same rng stream, so roundoff in the
/// difference quotient stays far below the tolerance even for gradients
/// near the magnitude floor.
GradCheckResult check_loss_gradient(const MlpSpec& spec, const Parameters& params, const Tensor& x,
                                    std::span<const int> labels, const RegConfig& reg, const Sampler* sampler,
                                    std::uint64_t rng_seed, const GradCheckOptions& options = {});

struct RandomCheckCase {
  int net = 0;
  RegKind kind = RegKind::None;
  MlpSpec spec;
  GradCheckResult result;
};

/// Random MLPs (1-3 hidden layers, widths 2-32, some with dropout or batch
/// norm), each checked under every penalty kind.
std::vector<RandomCheckCase> random_gradient_checks(int nets, std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace fnorm
