#pragma once

#include <optional>

#include "tamperloc/mask.hpp"

namespace tamperloc {

inline constexpr double kDefaultPceOverride = 1200.0;

struct FusionInput {
  std::optional<TamperMask> copymove;
  std::optional<TamperMask> prnu;
  std::optional<double> prnu_pce;
  TamperMask splicing;
};

/// Reliability-ordered decision tree. A nonempty copy-move mask wins, joined
/// with the PRNU mask only when prnu_pce > pce_override; otherwise the PRNU
/// mask if present; otherwise the splicing mask.
TamperMask fuse_masks(const FusionInput& input, double pce_override = kDefaultPceOverride);

}  // namespace tamperloc
