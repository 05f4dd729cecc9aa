#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace tamperloc {

/// Single-band real-valued image stored row-major.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0);
  Plane(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(const Plane& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool all_finite() const;
  double mean() const;
  double variance() const;
  double min() const;
  double max() const;

  /// Copy of the rectangle [x0, x0 + w) x [y0, y0 + h). Must lie inside.
  Plane crop(int x0, int y0, int w, int h) const;

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Three-channel image with samples nominally in [0, 255].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, double fill = 0.0);
  RgbImage(Plane r, Plane g, Plane b);
  /// Gray image replicated on all channels.
  explicit RgbImage(const Plane& gray);

  int width() const { return channels_[0].width(); }
  int height() const { return channels_[0].height(); }

  Plane& channel(int c) { return channels_[static_cast<std::size_t>(c)]; }
  const Plane& channel(int c) const { return channels_[static_cast<std::size_t>(c)]; }

  bool same_shape(const RgbImage& o) const { return channels_[0].same_shape(o.channels_[0]); }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::array<Plane, 3> channels_;
};

inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

/// Weighted 0.299/0.587/0.114 combination of the three channels.
Plane luminance(const RgbImage& image);

}  // namespace tamperloc
