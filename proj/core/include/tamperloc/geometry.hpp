#pragma once

#include "tamperloc/plane.hpp"

namespace tamperloc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Rotation (degrees, counter-clockwise in x-right/y-down pixel axes) about a
/// source centre followed by isotropic scaling, landing on a destination
/// centre. Multiples of 90 degrees use exact cos/sin.
class PlacedSimilarity {
 public:
  PlacedSimilarity() = default;
  PlacedSimilarity(double rotation_deg, double scale, Point2 src_center, Point2 dst_center);

  Point2 forward(Point2 p) const;
  Point2 inverse(Point2 p) const;
  bool is_identity() const;

  double rotation_deg() const { return rotation_deg_; }
  double scale() const { return scale_; }

 private:
  double rotation_deg_ = 0.0;
  double scale_ = 1.0;
  double cos_ = 1.0;
  double sin_ = 0.0;
  Point2 src_{};
  Point2 dst_{};
};

/// Bilinear sample with edge clamping.
double sample_bilinear(const Plane& plane, double x, double y);

/// Canvas side lengths of a W x H image after rotation and scaling.
void transformed_extent(int width, int height, double rotation_deg, double scale, int& out_width,
                        int& out_height);

/// Resamples the whole image by the similarity about its centre onto the
/// bounding canvas. `mapping` receives the source-to-canvas transform.
RgbImage transform_image(const RgbImage& image, double rotation_deg, double scale,
                         PlacedSimilarity* mapping = nullptr);

}  // namespace tamperloc
