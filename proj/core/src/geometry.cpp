#include "tamperloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tamperloc {

namespace {

void exact_cos_sin(double deg, double& c, double& s) {
  const double q = deg / 90.0;
  if (std::abs(q - std::round(q)) < 1e-12) {
    const int k = ((static_cast<int>(std::lround(q)) % 4) + 4) % 4;
    constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    c = kCos[k];
    s = kSin[k];
    return;
  }
  const double rad = deg * std::numbers::pi / 180.0;
  c = std::cos(rad);
  s = std::sin(rad);
}

}  // namespace

PlacedSimilarity::PlacedSimilarity(double rotation_deg, double scale, Point2 src_center,
                                   Point2 dst_center)
    : rotation_deg_(rotation_deg), scale_(scale), src_(src_center), dst_(dst_center) {
  if (!(scale > 0.0)) throw std::invalid_argument("similarity scale must be > 0");
  exact_cos_sin(rotation_deg, cos_, sin_);
}

Point2 PlacedSimilarity::forward(Point2 p) const {
  const double x = p.x - src_.x;
  const double y = p.y - src_.y;
  return {dst_.x + scale_ * (cos_ * x - sin_ * y), dst_.y + scale_ * (sin_ * x + cos_ * y)};
}

Point2 PlacedSimilarity::inverse(Point2 p) const {
  const double x = (p.x - dst_.x) / scale_;
  const double y = (p.y - dst_.y) / scale_;
  return {src_.x + cos_ * x + sin_ * y, src_.y - sin_ * x + cos_ * y};
}

bool PlacedSimilarity::is_identity() const {
  return cos_ == 1.0 && sin_ == 0.0 && scale_ == 1.0 && src_.x == dst_.x && src_.y == dst_.y;
}

double sample_bilinear(const Plane& plane, double x, double y) {
  const int w = plane.width();
  const int h = plane.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  if (fx == 0.0 && fy == 0.0) return plane(x0, y0);
  const double top = plane(x0, y0) + fx * (plane(x1, y0) - plane(x0, y0));
  const double bottom = plane(x0, y1) + fx * (plane(x1, y1) - plane(x0, y1));
  return top + fy * (bottom - top);
}

void transformed_extent(int width, int height, double rotation_deg, double scale, int& out_width,
                        int& out_height) {
  double c = 1.0;
  double s = 0.0;
  exact_cos_sin(rotation_deg, c, s);
  const double w = scale * (width * std::abs(c) + height * std::abs(s));
  const double h = scale * (width * std::abs(s) + height * std::abs(c));
  out_width = std::max(1, static_cast<int>(std::lround(w)));
  out_height = std::max(1, static_cast<int>(std::lround(h)));
}

RgbImage transform_image(const RgbImage& image, double rotation_deg, double scale,
                         PlacedSimilarity* mapping) {
  int cw = 0;
  int ch = 0;
  transformed_extent(image.width(), image.height(), rotation_deg, scale, cw, ch);
  const PlacedSimilarity t(rotation_deg, scale,
                           {(image.width() - 1) / 2.0, (image.height() - 1) / 2.0},
                           {(cw - 1) / 2.0, (ch - 1) / 2.0});
  RgbImage out(cw, ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const Point2 src = t.inverse({static_cast<double>(x), static_cast<double>(y)});
      for (int c = 0; c < 3; ++c) out.channel(c)(x, y) = sample_bilinear(image.channel(c), src.x, src.y);
    }
  }
  if (mapping != nullptr) *mapping = t;
  return out;
}

}  // namespace tamperloc
