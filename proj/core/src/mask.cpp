#include "tamperloc/mask.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace tamperloc {

std::string_view to_string(MaskSource source) {
  switch (source) {
    case MaskSource::kPrnu: return "prnu";
    case MaskSource::kCopyMove: return "copymove";
    case MaskSource::kSplicing: return "splicing";
    case MaskSource::kFused: return "fused";
  }
  return "unknown";
}

TamperMask::TamperMask(int width, int height, MaskSource source, bool fill)
    : width_(width), height_(height), source_(source) {
  if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t TamperMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

TamperMask& TamperMask::operator|=(const TamperMask& other) {
  if (!same_shape(other)) throw std::invalid_argument("mask union: dimension mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

namespace {

// Horizontal half-extent of the disc for each dy in [-r, r].
std::vector<int> disc_spans(int radius) {
  std::vector<int> spans(static_cast<std::size_t>(2 * radius + 1));
  for (int dy = -radius; dy <= radius; ++dy) {
    int dx = 0;
    while ((dx + 1) * (dx + 1) + dy * dy <= radius * radius) ++dx;
    spans[static_cast<std::size_t>(dy + radius)] = dx;
  }
  return spans;
}

// Dilation when `value` is 1, erosion when it is 0: a pixel takes `value` if
// any in-bounds disc neighbour holds `value`.
TamperMask spread(const TamperMask& mask, int radius, std::uint8_t value) {
  if (radius < 0) throw std::invalid_argument("morphology radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  const auto spans = disc_spans(radius);
  const auto& src = mask.bits();

  // Row prefix counts of `value` make each disc row an O(1) query.
  std::vector<int> prefix(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h), 0);
  for (int y = 0; y < h; ++y) {
    int* row = &prefix[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1)];
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (src[mask.index(x, y)] == value ? 1 : 0);
  }

  TamperMask out = mask;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (src[mask.index(x, y)] == value) continue;
      bool hit = false;
      for (int dy = -radius; dy <= radius && !hit; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const int span = spans[static_cast<std::size_t>(dy + radius)];
        const int x0 = std::max(0, x - span);
        const int x1 = std::min(w - 1, x + span);
        const int* row = &prefix[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w + 1)];
        hit = row[x1 + 1] - row[x0] > 0;
      }
      if (hit) out.set(x, y, value != 0);
    }
  }
  return out;
}

}  // namespace

TamperMask dilate(const TamperMask& mask, int radius) { return spread(mask, radius, 1); }
TamperMask erode(const TamperMask& mask, int radius) { return spread(mask, radius, 0); }

Components connected_components(const TamperMask& mask) {
  Components out;
  out.labels.assign(mask.size(), -1);
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = mask.index(x, y);
      if (!mask.at(i) || out.labels[i] >= 0) continue;
      const int label = static_cast<int>(out.areas.size());
      std::size_t area = 0;
      out.labels[i] = label;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!mask.contains(nx, ny)) continue;
            const std::size_t j = mask.index(nx, ny);
            if (mask.at(j) && out.labels[j] < 0) {
              out.labels[j] = label;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

TamperMask morph_clean(const TamperMask& mask, int radius, int min_area) {
  if (radius < 0) throw std::invalid_argument("morph_clean: radius must be >= 0");
  if (min_area < 0) throw std::invalid_argument("morph_clean: min_area must be >= 0");
  TamperMask closed = erode(dilate(mask, radius), radius);
  TamperMask opened = dilate(erode(closed, radius), radius);
  if (min_area <= 1) return opened;

  const Components cc = connected_components(opened);
  for (std::size_t i = 0; i < opened.size(); ++i) {
    const int label = cc.labels[i];
    if (label >= 0 && cc.areas[static_cast<std::size_t>(label)] < static_cast<std::size_t>(min_area)) {
      opened.set_at(i, false);
    }
  }
  return opened;
}

MaskScores score_mask(const TamperMask& predicted, const TamperMask& truth) {
  if (!predicted.same_shape(truth)) {
    throw std::invalid_argument("score_mask: predicted and truth dimensions differ");
  }
  MaskScores s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted.at(i);
    const bool t = truth.at(i);
    s.true_positives += (p && t) ? 1 : 0;
    s.false_positives += (p && !t) ? 1 : 0;
    s.false_negatives += (!p && t) ? 1 : 0;
  }
  if (s.true_positives + s.false_positives + s.false_negatives == 0) {
    s.precision = s.recall = s.f_measure = 1.0;
    return s;
  }
  if (s.true_positives == 0) return s;
  const auto tp = static_cast<double>(s.true_positives);
  s.precision = tp / static_cast<double>(s.true_positives + s.false_positives);
  s.recall = tp / static_cast<double>(s.true_positives + s.false_negatives);
  s.f_measure = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double f_measure(const TamperMask& predicted, const TamperMask& truth) {
  return score_mask(predicted, truth).f_measure;
}

}  // namespace tamperloc
