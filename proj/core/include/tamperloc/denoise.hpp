#pragma once

#include "tamperloc/plane.hpp"

namespace tamperloc {

struct NlmParams {
  int patch = 7;          ///< odd patch side
  int search = 21;        ///< odd search window side
  double strength = 1.0;  ///< h = strength * sigma
};

/// Robust noise level from horizontal first differences:
/// 1.4826 * median(|d|) / sqrt(2).
double estimate_noise_sigma(const Plane& image);

/// Nonlocal-means denoiser. Patch distance is the mean squared difference
/// over the patch (reflect-padded at the borders); candidates are limited to
/// the search window clipped to the image. Weights are
/// exp(-max(d2 - 2 sigma^2, 0) / h^2).
Plane nlm_denoise(const Plane& image, const NlmParams& params = {});

}  // namespace tamperloc
