#include "tamperloc/fusion.hpp"

#include <stdexcept>

namespace tamperloc {

TamperMask fuse_masks(const FusionInput& input, double pce_override) {
  const TamperMask& base = input.splicing;
  for (const auto* m : {&input.copymove, &input.prnu}) {
    if (*m && !(*m)->same_shape(base)) throw std::invalid_argument("fuse_masks: mask dimensions differ");
  }

  TamperMask out(base.width(), base.height(), MaskSource::kFused);
  if (input.copymove && !input.copymove->none()) {
    out |= *input.copymove;
    if (input.prnu && input.prnu_pce && *input.prnu_pce > pce_override) out |= *input.prnu;
  } else if (input.prnu) {
    out |= *input.prnu;
  } else {
    out |= base;
  }
  return out;
}

}  // namespace tamperloc
