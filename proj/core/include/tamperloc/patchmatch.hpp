#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tamperloc/geometry.hpp"
#include "tamperloc/plane.hpp"

namespace tamperloc {

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Dense nearest-neighbour field: for each query pixel p, the best match
/// q = p + offset in the reference image and its cost. Pixels whose patch
/// does not fit inside the query image are invalid.
class OffsetField {
 public:
  OffsetField() = default;
  OffsetField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  Offset& offset(int x, int y) { return offsets_[index(x, y)]; }
  const Offset& offset(int x, int y) const { return offsets_[index(x, y)]; }
  double& cost(int x, int y) { return costs_[index(x, y)]; }
  double cost(int x, int y) const { return costs_[index(x, y)]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
  void set_valid(int x, int y, bool v) { valid_[index(x, y)] = v ? 1 : 0; }

  const std::vector<Offset>& offsets() const { return offsets_; }
  const std::vector<double>& costs() const { return costs_; }
  const std::vector<std::uint8_t>& validity() const { return valid_; }

  friend bool operator==(const OffsetField&, const OffsetField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Offset> offsets_;
  std::vector<double> costs_;
  std::vector<std::uint8_t> valid_;
};

struct NnfParams {
  int patch = 7;
  int iterations = 5;
  double min_displacement = 8.0;
  std::uint64_t seed = 1;
};

/// Called after initialisation (round -1) and after every round.
using NnfObserver = std::function<void(int round, const OffsetField& field)>;

/// Matching cost between mean-removed RGB patches: per channel
/// sum((a - mean_a) - (b - mean_b))^2, summed over the three channels.
class PatchCost {
 public:
  PatchCost(const RgbImage& query, const RgbImage& reference, int patch);

  int radius() const { return radius_; }
  /// Exact cost; both patches must fit inside their images.
  double operator()(int px, int py, int qx, int qy) const;
  /// Cost if below `bound`, otherwise some value >= bound.
  double bounded(int px, int py, int qx, int qy, double bound) const;

 private:
  static constexpr std::size_t kStride = 4;
  struct Layer {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;     // interleaved, kStride floats per pixel
    std::vector<double> means;  // interleaved per-pixel patch means
  };
  static Layer make_layer(const RgbImage& image, int radius);

  int radius_;
  double area_;
  Layer query_;
  Layer reference_;
};

/// PatchMatch between a query image and itself. Offsets shorter than
/// `min_displacement` are never candidates; with a zero floor the zero offset
/// is tried first at initialisation.
OffsetField compute_nnf(const RgbImage& image, const NnfParams& params, const NnfObserver& observer = {});

/// PatchMatch from `query` into `reference`, where `to_reference` maps query
/// coordinates into the reference frame. The displacement floor is measured
/// in query coordinates: |to_reference.inverse(q) - p| >= min_displacement.
OffsetField compute_nnf(const RgbImage& query, const RgbImage& reference,
                        const PlacedSimilarity& to_reference, const NnfParams& params,
                        const NnfObserver& observer = {});

}  // namespace tamperloc
