#pragma once

#include <cstdint>

namespace nero {

struct MlpGradcheckResult {
  double max_rel_error = 0.0;
  std::size_t models_checked = 0;
  std::size_t fixtures_resampled = 0;  // rejected for pre-activations near 0
};

/// Finite-difference verification on random 3-layer scaled-relu MLPs
/// (64-bit, central differences). Fixtures whose pre-activations come
/// within `margin` of the relu kink are deterministically resampled, so
/// the difference quotient never straddles the kink — the subgradient
/// convention at 0 makes such comparisons meaningless.
MlpGradcheckResult mlp_gradcheck(std::size_t models, std::uint64_t seed,
                                 double h = 1e-5,
                                 std::size_t coords_per_param = 10,
                                 double margin = 1e-3);

}  // namespace nero
