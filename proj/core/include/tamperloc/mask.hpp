#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace tamperloc {

enum class MaskSource { kPrnu, kCopyMove, kSplicing, kFused };

std::string_view to_string(MaskSource source);

/// Binary per-pixel tamper decision. A set bit means "tampered".
class TamperMask {
 public:
  TamperMask() = default;
  TamperMask(int width, int height, MaskSource source, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  MaskSource source() const { return source_; }
  void set_source(MaskSource s) { source_ = s; }

  bool operator()(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }
  bool at(std::size_t i) const { return bits_[i] != 0; }
  void set_at(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t size() const { return bits_.size(); }
  std::size_t count() const;
  bool none() const { return count() == 0; }
  bool same_shape(const TamperMask& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Pixelwise OR; shapes must match. Keeps this mask's source.
  TamperMask& operator|=(const TamperMask& other);

  /// Equal bits and dimensions; the source label is not compared.
  bool same_bits(const TamperMask& other) const {
    return same_shape(other) && bits_ == other.bits_;
  }
  friend bool operator==(const TamperMask&, const TamperMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  MaskSource source_ = MaskSource::kFused;
  std::vector<std::uint8_t> bits_;
};

// Morphology. The disc element is {(dx, dy) : dx^2 + dy^2 <= radius^2};
// pixels outside the image are ignored rather than padded.
TamperMask dilate(const TamperMask& mask, int radius);
TamperMask erode(const TamperMask& mask, int radius);

/// Closing then opening with a disc of `radius`, then removal of 8-connected
/// components with fewer than `min_area` pixels.
TamperMask morph_clean(const TamperMask& mask, int radius, int min_area);

/// 8-connected component labelling. Unset pixels get label -1, components are
/// numbered 0..n-1 in raster order of their first pixel.
struct Components {
  std::vector<int> labels;
  std::vector<std::size_t> areas;
  std::size_t count() const { return areas.size(); }
};
Components connected_components(const TamperMask& mask);

struct MaskScores {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Pixel-level precision/recall/F over tampered pixels. An empty truth with an
/// empty prediction scores 1; any case with no true positive otherwise scores 0.
MaskScores score_mask(const TamperMask& predicted, const TamperMask& truth);
double f_measure(const TamperMask& predicted, const TamperMask& truth);

}  // namespace tamperloc
