#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tamperloc/denoise.hpp"
#include "tamperloc/mask.hpp"
#include "tamperloc/plane.hpp"

namespace tamperloc {

/// Zero-mean noise residual r = y - f(y) on the luminance grid.
struct NoiseResidual {
  Plane plane;
  int width() const { return plane.width(); }
  int height() const { return plane.height(); }
};

/// Per-channel residual y_c - nlm(y_c), combined with luminance weights and
/// made zero-mean.
NoiseResidual noise_residual(const RgbImage& image, const NlmParams& params = {});

/// Pearson correlation. Throws std::invalid_argument on shape mismatch or a
/// zero-variance argument.
double normalized_corr(const Plane& a, const Plane& b);

/// Mean-removed 2-D spectrum used by the PCE computations. Spectra are linear
/// in their input, so weighted averages of planes map to weighted averages
/// of spectra.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(const Plane& plane);
  /// Wraps precomputed half-spectrum bins (height x (width/2 + 1)).
  Spectrum(int width, int height, std::vector<std::complex<double>> bins);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<std::complex<double>> bins() { return bins_; }
  std::span<const std::complex<double>> bins() const { return bins_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::complex<double>> bins_;
};

/// Circular cross-correlation surface c(lag) = sum_x a(x) b(x + lag) of the
/// mean-removed inputs.
Plane cross_correlation(const Spectrum& a, const Spectrum& b);

inline constexpr int kDefaultPceExclusion = 5;

/// Signed peak-to-correlation-energy ratio. The peak is the lag with the
/// largest |c|; the energy excludes a (2r+1)^2 square around it. Returns 0
/// when both peak and off-peak energy vanish.
double pce(const Spectrum& a, const Spectrum& b, int exclusion_radius = kDefaultPceExclusion);
double pce(const Plane& a, const Plane& b, int exclusion_radius = kDefaultPceExclusion);
double pce(const NoiseResidual& residual, const Plane& fingerprint_times_image,
           int exclusion_radius = kDefaultPceExclusion);

/// Weighted cluster-centre merge: (w1 v1 + w2 v2) / (w1 + w2), weight w1 + w2.
template <typename T>
struct WeightedCenter {
  std::vector<T> center;
  double weight = 1.0;
};

template <typename T>
WeightedCenter<T> merge_centers(const WeightedCenter<T>& a, const WeightedCenter<T>& b) {
  WeightedCenter<T> out;
  out.weight = a.weight + b.weight;
  out.center.resize(a.center.size());
  for (std::size_t i = 0; i < a.center.size(); ++i) {
    out.center[i] = (a.weight * a.center[i] + b.weight * b.center[i]) / out.weight;
  }
  return out;
}

/// Camera PRNU estimate k = sum(y r) / sum(y^2) kept as its two sums.
struct Fingerprint {
  Plane numerator;
  Plane denominator;
  int members = 0;
  int id = 0;

  int width() const { return numerator.width(); }
  int height() const { return numerator.height(); }
  /// Pointwise numerator / denominator, 0 where the denominator is 0.
  Plane estimate() const;
};

/// Accumulates members one at a time.
class FingerprintBuilder {
 public:
  FingerprintBuilder(int width, int height);
  void add(const Plane& luma, const NoiseResidual& residual);
  Fingerprint build(int id = 0) const;
  int members() const { return members_; }

 private:
  Plane numerator_;
  Plane denominator_;
  int members_ = 0;
};

/// Fingerprint from a member list; throws on empty input or shape mismatch.
Fingerprint estimate_fingerprint(std::span<const RgbImage> images,
                                 std::span<const NoiseResidual> residuals, int id = 0);

/// r / max(y, 1) per pixel: a single-image PRNU estimate.
Plane normalized_residual(const NoiseResidual& residual, const Plane& luma);

struct Cluster {
  Fingerprint fingerprint;
  std::vector<int> members;  ///< indices into the input lists
};

struct ClusterSet {
  std::vector<Cluster> clusters;
  std::vector<int> leftovers;
};

struct ClusterParams {
  double pce_threshold = 50.0;
  int min_cluster_size = 5;
  int exclusion_radius = kDefaultPceExclusion;
  std::uint64_t seed = 1;
};

/// Randomized pairwise-nearest-neighbour clustering of normalized residuals
/// with PCE as the similarity. Each cluster is grown to completion before the
/// next one starts; members are merged into the running centre by weighted
/// averaging. Small clusters dissolve into leftovers and surviving clusters
/// get fingerprints rebuilt from their members.
ClusterSet cluster_residuals(std::span<const NoiseResidual> residuals,
                             std::span<const RgbImage> images, const ClusterParams& params = {});

struct Association {
  std::optional<int> cluster;  ///< index into the fingerprint list
  double pce = 0.0;            ///< best PCE over all fingerprints
  int best = -1;               ///< index of the best-scoring fingerprint
};

Association associate_image(const RgbImage& image, const NoiseResidual& residual,
                            std::span<const Fingerprint> fingerprints, double pce_threshold = 100.0,
                            int exclusion_radius = kDefaultPceExclusion);

/// Per-pixel windowed Pearson correlation between two planes. The window of
/// side `window` covers [x - (window-1)/2, x + window/2] and is clipped at the
/// borders. Pixels flagged invalid in `valid` (if given) are left out of all
/// sums. Windows with zero variance in either plane get 0 and are flagged in
/// `degenerate`.
struct WindowedCorrelation {
  Plane rho;
  std::vector<std::uint8_t> degenerate;
};
WindowedCorrelation windowed_correlation(const Plane& a, const Plane& b, int window,
                                         std::span<const std::uint8_t> valid = {});

struct CorrelationField {
  Plane rho;
  std::vector<std::uint8_t> degenerate;
  int window = 129;
  double pce = 0.0;
};

/// Sliding-window correlation between the residual and z = k * luminance.
/// Cost is independent of the window size.
CorrelationField correlation_field(const RgbImage& image, const NoiseResidual& residual,
                                   const Fingerprint& fingerprint, int window, double pce);

struct PrnuMaskParams {
  double base_threshold = 0.7;
  double pce_reference = 500.0;
  double saturation_level = 250.0;
  int morph_radius = 4;
  int min_area = 1000;
};

/// Decision threshold base * clamp(pce_reference / pce, 0.5, 2).
double adaptive_threshold(double pce, const PrnuMaskParams& params);

/// Pixels with rho below the adaptive threshold are tampered, except where the
/// full 3x3 neighbourhood is saturated. Cleaned with morph_clean.
TamperMask prnu_mask(const CorrelationField& field, const RgbImage& image,
                     const PrnuMaskParams& params = {});

/// Fingerprint file: "PRNUFP1\0", u32 width, u32 height, u32 members, then the
/// numerator and denominator planes as little-endian float32, row-major.
void write_fingerprint(const std::filesystem::path& path, const Fingerprint& fp);
Fingerprint read_fingerprint(const std::filesystem::path& path);

}  // namespace tamperloc
