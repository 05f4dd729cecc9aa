#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tamperloc/geometry.hpp"
#include "tamperloc/mask.hpp"
#include "tamperloc/patchmatch.hpp"
#include "tamperloc/prnu.hpp"

namespace tamperloc {

struct TransformSpec {
  double rotation_deg = 0.0;
  double scale = 1.0;
  bool is_identity() const { return rotation_deg == 0.0 && scale == 1.0; }
  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

/// Rotations {0, 90, 180, 270} x scales {0.8, 1.0, 1.25}.
std::vector<TransformSpec> default_transform_sweep();

/// One field of the sweep: the query image matched against a rotated and
/// rescaled copy of itself.
struct SweepField {
  TransformSpec spec;
  PlacedSimilarity to_reference;
  RgbImage reference;
  OffsetField field;
};

/// Runs compute_nnf for every spec (identity first, prepended if missing).
/// Every field uses the same seed.
std::vector<SweepField> sweep_transforms(const RgbImage& image, std::vector<TransformSpec> specs,
                                         const NnfParams& params);

/// Local motion coherence: fraction of valid pixels in the window whose offset
/// lies within `tolerance` (Chebyshev) of the window's componentwise median.
/// Invalid pixels get 0.
Plane filter_offset_field(const OffsetField& field, int window, int tolerance);

enum class CopyRole { kUnknown, kASource, kBSource };

struct CopyRegionPair {
  TamperMask region_a;          ///< matched side (where region_b's content is found)
  TamperMask region_b;          ///< pixels carrying the dominant offset
  Offset offset;                ///< dominant offset of region_b, reference frame
  Offset mirror_offset;         ///< offset region_a carries back; -offset for the identity
  TransformSpec transform;
  double verification_corr = 0.0;
  CopyRole role = CopyRole::kUnknown;
};

struct CopyRegionParams {
  int coherence_window = 9;
  int coherence_tolerance = 2;
  double coherence_threshold = 0.5;
  double corr_threshold = 0.5;
  int corr_window = 16;
  /// Small correlation window used to grow verified regions over the border
  /// band of half a verification window; 0 disables the growth.
  int refine_window = 5;
  double min_displacement = 8.0;
  double flat_variance_floor = 1.0;
  int min_area = 1000;
  int morph_radius = 2;
  int min_seed_pixels = 64;
  /// Pairs whose mean verification correlation falls below this are dropped.
  double min_pair_corr = 0.8;
  /// Pairs whose region correlation at the offset moved by `shift_probe`
  /// pixels (8 directions) exceeds this fraction of the peak are dropped.
  double max_shift_corr = 0.5;
  int shift_probe = 3;
};

/// Turns sweep fields into verified source/target region pairs: coherent,
/// non-flat, far-enough matches are grouped by dominant offset, each offset
/// is verified with a dense windowed correlation between the high-passed
/// luminance and its shifted (transform-compensated) copy, and near-duplicate pairs found by
/// several fields are collapsed.
std::vector<CopyRegionPair> extract_copy_regions(const RgbImage& image, const std::vector<SweepField>& fields,
                                                 const CopyRegionParams& params = {});

struct DisambiguationParams {
  double pce_floor = 150.0;
  std::size_t min_region_area = 5000;
};

/// With a reliable PRNU field, the region with the higher mean correlation is
/// the genuine source. Otherwise the role stays unknown.
CopyRegionPair disambiguate_source(CopyRegionPair pair, const CorrelationField* field,
                                   const DisambiguationParams& params = {});

/// Union of the tampered side of each pair (both sides when the role is unknown).
TamperMask copymove_mask(const std::vector<CopyRegionPair>& pairs, int width, int height);

struct CopyMoveParams {
  NnfParams nnf{};
  std::vector<TransformSpec> transforms = default_transform_sweep();
  CopyRegionParams regions{};
  DisambiguationParams disambiguation{};
};

struct CopyMoveResult {
  std::vector<CopyRegionPair> pairs;
  TamperMask mask;
};

/// Sweep, extraction, optional PRNU disambiguation and mask assembly.
CopyMoveResult detect_copymove(const RgbImage& image, const CopyMoveParams& params,
                               const CorrelationField* prnu_field = nullptr);

/// Debug rendering: R = dx + 128, G = dy + 128, B = cost scaled to [0, 255].
void write_offset_field_png(const std::filesystem::path& path, const OffsetField& field);

}  // namespace tamperloc
