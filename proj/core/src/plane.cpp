#include "tamperloc/plane.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tamperloc {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("plane dimensions must be positive, got " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
}

}  // namespace

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Plane::Plane(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("plane data length does not match dimensions");
  }
}

bool Plane::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Plane::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

double Plane::variance() const {
  if (data_.empty()) return 0.0;
  const double m = mean();
  double acc = 0.0;
  for (double v : data_) acc += (v - m) * (v - m);
  return acc / static_cast<double>(data_.size());
}

double Plane::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Plane::max() const { return *std::max_element(data_.begin(), data_.end()); }

Plane Plane::crop(int x0, int y0, int w, int h) const {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > width_ || y0 + h > height_) {
    throw std::out_of_range("crop rectangle outside plane");
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    const double* src = &data_[index(x0, y0 + y)];
    std::copy(src, src + w, &out.data_[out.index(0, y)]);
  }
  return out;
}

RgbImage::RgbImage(int width, int height, double fill)
    : channels_{Plane(width, height, fill), Plane(width, height, fill),
                Plane(width, height, fill)} {}

RgbImage::RgbImage(Plane r, Plane g, Plane b)
    : channels_{std::move(r), std::move(g), std::move(b)} {
  if (!channels_[0].same_shape(channels_[1]) || !channels_[0].same_shape(channels_[2])) {
    throw std::invalid_argument("RGB channels must share dimensions");
  }
}

RgbImage::RgbImage(const Plane& gray) : channels_{gray, gray, gray} {}

Plane luminance(const RgbImage& image) {
  Plane out(image.width(), image.height());
  const auto r = image.channel(0).values();
  const auto g = image.channel(1).values();
  const auto b = image.channel(2).values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = kLumaWeights[0] * r[i] + kLumaWeights[1] * g[i] + kLumaWeights[2] * b[i];
  }
  return out;
}

}  // namespace tamperloc
