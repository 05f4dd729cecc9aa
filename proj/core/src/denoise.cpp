#include "tamperloc/denoise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tamperloc {

namespace {

// exp(-x) on [0, kMaxArg) with linear interpolation; zero beyond.
class NegExpTable {
 public:
  static constexpr double kMaxArg = 30.0;
  static constexpr int kStepsPerUnit = 256;

  NegExpTable() {
    table_.resize(static_cast<std::size_t>(kMaxArg * kStepsPerUnit) + 2);
    for (std::size_t i = 0; i < table_.size(); ++i) {
      table_[i] = std::exp(-static_cast<double>(i) / kStepsPerUnit);
    }
  }

  double operator()(double x) const {
    if (x >= kMaxArg) return 0.0;
    const double t = x * kStepsPerUnit;
    const auto i = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

 private:
  std::vector<double> table_;
};

const NegExpTable& neg_exp() {
  static const NegExpTable table;
  return table;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

double estimate_noise_sigma(const Plane& image) {
  const int w = image.width();
  const int h = image.height();
  std::vector<double> d;
  if (w >= 2) {
    d.reserve(static_cast<std::size_t>(w - 1) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x + 1 < w; ++x) d.push_back(std::abs(image(x + 1, y) - image(x, y)));
    }
  }
  if (d.empty()) return 0.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), mid));
  }
  return 1.4826 * med / std::sqrt(2.0);
}

Plane nlm_denoise(const Plane& image, const NlmParams& params) {
  if (params.patch < 1 || params.patch % 2 == 0 || params.search < 1 || params.search % 2 == 0) {
    throw std::invalid_argument("nlm_denoise: patch and search sizes must be odd and positive");
  }
  if (!(params.strength > 0.0)) throw std::invalid_argument("nlm_denoise: strength must be > 0");
  if (!image.all_finite()) throw std::invalid_argument("nlm_denoise: input contains non-finite values");

  const int w = image.width();
  const int h = image.height();
  const int ph = params.patch / 2;
  const int sh = params.search / 2;
  const double patch_area = static_cast<double>(params.patch) * params.patch;

  const double sigma = estimate_noise_sigma(image);
  const double h2 = params.strength * params.strength * sigma * sigma;
  const double floor2 = 2.0 * sigma * sigma;
  const auto& lut = neg_exp();

  // Reflect-padded copy so every patch is complete.
  const int pw = w + 2 * ph;
  const int phh = h + 2 * ph;
  std::vector<double> padded(static_cast<std::size_t>(pw) * static_cast<std::size_t>(phh));
  for (int y = 0; y < phh; ++y) {
    const int sy = reflect(y - ph, h);
    for (int x = 0; x < pw; ++x) {
      padded[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)] =
          image(reflect(x - ph, w), sy);
    }
  }
  auto P = [&](int x, int y) {
    return padded[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)];
  };

  // The centre pixel always contributes with weight 1.
  std::vector<double> num(image.values().begin(), image.values().end());
  std::vector<double> den(image.size(), 1.0);

  std::vector<double> colsum(static_cast<std::size_t>(pw));
  // Ring of the last `patch` squared-difference rows.
  std::vector<double> ring(static_cast<std::size_t>(params.patch) * static_cast<std::size_t>(pw));
  auto ring_row = [&](int py) {
    return ring.data() + static_cast<std::size_t>(py % params.patch) * static_cast<std::size_t>(pw);
  };

  // Only half of the offsets are visited; each pair (p, p + o) updates both ends.
  for (int dy = 0; dy <= sh; ++dy) {
    for (int dx = -sh; dx <= sh; ++dx) {
      if (dy == 0 && dx <= 0) continue;
      const int x_lo = std::max(0, -dx);
      const int x_hi = std::min(w, w - dx);
      const int y_lo = 0;
      const int y_hi = h - dy;
      if (x_lo >= x_hi || y_lo >= y_hi) continue;

      // Padded columns touched by patches centred in [x_lo, x_hi).
      const int cx0 = x_lo;
      const int cx1 = x_hi + 2 * ph;
      auto add_row = [&](int py) {
        double* r = ring_row(py);
        for (int px = cx0; px < cx1; ++px) {
          const double d = P(px, py) - P(px + dx, py + dy);
          r[px] = d * d;
          colsum[static_cast<std::size_t>(px)] += r[px];
        }
      };

      std::fill(colsum.begin() + cx0, colsum.begin() + cx1, 0.0);
      for (int py = y_lo; py < y_lo + 2 * ph; ++py) add_row(py);

      for (int y = y_lo; y < y_hi; ++y) {
        // Bring padded row y + 2*ph into the vertical window.
        add_row(y + 2 * ph);

        double box = 0.0;
        for (int px = cx0; px < cx0 + params.patch; ++px) box += colsum[static_cast<std::size_t>(px)];
        const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
        const std::size_t row_o = static_cast<std::size_t>(y + dy) * static_cast<std::size_t>(w);
        for (int x = x_lo; x < x_hi; ++x) {
          if (x > x_lo) {
            box += colsum[static_cast<std::size_t>(x + 2 * ph)] - colsum[static_cast<std::size_t>(x - 1)];
          }
          const double d2 = std::max(box, 0.0) / patch_area;
          double wgt;
          if (h2 > 0.0) {
            wgt = lut(std::max(d2 - floor2, 0.0) / h2);
          } else {
            wgt = d2 <= floor2 ? 1.0 : 0.0;
          }
          if (wgt == 0.0) continue;
          const std::size_t p = row + static_cast<std::size_t>(x);
          const std::size_t q = row_o + static_cast<std::size_t>(x + dx);
          num[p] += wgt * image[q];
          den[p] += wgt;
          num[q] += wgt * image[p];
          den[q] += wgt;
        }

        // Drop padded row y from the vertical window.
        const double* old = ring_row(y);
        for (int px = cx0; px < cx1; ++px) colsum[static_cast<std::size_t>(px)] -= old[px];
      }
    }
  }

  Plane out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = num[i] / den[i];
  return out;
}

}  // namespace tamperloc
