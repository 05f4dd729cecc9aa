#include "tamperloc/prnu.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace tamperloc {

namespace {

// FFTW planning is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void require_same_shape(const Plane& a, const Plane& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

}  // namespace

NoiseResidual noise_residual(const RgbImage& image, const NlmParams& params) {
  Plane out(image.width(), image.height());
  for (int c = 0; c < 3; ++c) {
    const Plane& y = image.channel(c);
    const Plane denoised = nlm_denoise(y, params);
    const double wc = kLumaWeights[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += wc * (y[i] - denoised[i]);
  }
  const double m = out.mean();
  for (double& v : out.values()) v -= m;
  return NoiseResidual{std::move(out)};
}

double normalized_corr(const Plane& a, const Plane& b) {
  require_same_shape(a, b, "normalized_corr");
  const double ma = a.mean();
  const double mb = b.mean();
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    throw std::invalid_argument("normalized_corr: zero-variance input, correlation undefined");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Spectrum::Spectrum(const Plane& plane) : width_(plane.width()), height_(plane.height()) {
  const int cw = width_ / 2 + 1;
  bins_.assign(static_cast<std::size_t>(cw) * static_cast<std::size_t>(height_), {});
  std::vector<double> in(plane.values().begin(), plane.values().end());
  const double m = plane.mean();
  for (double& v : in) v -= m;
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_2d(height_, width_, in.data(),
                                reinterpret_cast<fftw_complex*>(bins_.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  bins_[0] = {0.0, 0.0};
}

Spectrum::Spectrum(int width, int height, std::vector<std::complex<double>> bins)
    : width_(width), height_(height), bins_(std::move(bins)) {
  if (bins_.size() != static_cast<std::size_t>(width / 2 + 1) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("Spectrum: bin count does not match dimensions");
  }
}

Plane cross_correlation(const Spectrum& a, const Spectrum& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("cross_correlation: dimension mismatch");
  }
  const auto sa = a.bins();
  const auto sb = b.bins();
  std::vector<std::complex<double>> prod(sa.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = std::conj(sa[i]) * sb[i];
  Plane out(a.width(), a.height());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_2d(a.height(), a.width(), reinterpret_cast<fftw_complex*>(prod.data()),
                                out.values().data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double n = static_cast<double>(out.size());
  for (double& v : out.values()) v /= n;
  return out;
}

double pce(const Spectrum& a, const Spectrum& b, int exclusion_radius) {
  if (exclusion_radius < 0) throw std::invalid_argument("pce: exclusion radius must be >= 0");
  const Plane c = cross_correlation(a, b);
  const int w = c.width();
  const int h = c.height();

  std::size_t peak_index = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c[i]) > std::abs(c[peak_index])) peak_index = i;
  }
  const double peak = c[peak_index];
  const int px = static_cast<int>(peak_index % static_cast<std::size_t>(w));
  const int py = static_cast<int>(peak_index / static_cast<std::size_t>(w));

  std::vector<std::uint8_t> excluded(c.size(), 0);
  std::size_t excluded_count = 0;
  for (int dy = -exclusion_radius; dy <= exclusion_radius; ++dy) {
    const int yy = ((py + dy) % h + h) % h;
    for (int dx = -exclusion_radius; dx <= exclusion_radius; ++dx) {
      const int xx = ((px + dx) % w + w) % w;
      const std::size_t i = c.index(xx, yy);
      if (!excluded[i]) {
        excluded[i] = 1;
        ++excluded_count;
      }
    }
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!excluded[i]) energy += c[i] * c[i];
  }
  if (energy <= 0.0) {
    if (peak == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), peak);
  }
  const double off_peak = static_cast<double>(c.size() - excluded_count);
  return std::copysign(peak * peak, peak) * off_peak / energy;
}

double pce(const Plane& a, const Plane& b, int exclusion_radius) {
  require_same_shape(a, b, "pce");
  return pce(Spectrum(a), Spectrum(b), exclusion_radius);
}

double pce(const NoiseResidual& residual, const Plane& fingerprint_times_image, int exclusion_radius) {
  return pce(residual.plane, fingerprint_times_image, exclusion_radius);
}

Plane Fingerprint::estimate() const {
  Plane out(numerator.width(), numerator.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = denominator[i] > 0.0 ? numerator[i] / denominator[i] : 0.0;
  }
  return out;
}

FingerprintBuilder::FingerprintBuilder(int width, int height)
    : numerator_(width, height), denominator_(width, height) {}

void FingerprintBuilder::add(const Plane& luma, const NoiseResidual& residual) {
  require_same_shape(numerator_, luma, "fingerprint member luminance");
  require_same_shape(numerator_, residual.plane, "fingerprint member residual");
  for (std::size_t i = 0; i < luma.size(); ++i) {
    numerator_[i] += luma[i] * residual.plane[i];
    denominator_[i] += luma[i] * luma[i];
  }
  ++members_;
}

Fingerprint FingerprintBuilder::build(int id) const {
  if (members_ == 0) throw std::invalid_argument("fingerprint: no members");
  return Fingerprint{numerator_, denominator_, members_, id};
}

Fingerprint estimate_fingerprint(std::span<const RgbImage> images,
                                 std::span<const NoiseResidual> residuals, int id) {
  if (images.empty()) throw std::invalid_argument("estimate_fingerprint: empty member list");
  if (images.size() != residuals.size()) {
    throw std::invalid_argument("estimate_fingerprint: image and residual lists differ in length");
  }
  FingerprintBuilder builder(images.front().width(), images.front().height());
  for (std::size_t j = 0; j < images.size(); ++j) builder.add(luminance(images[j]), residuals[j]);
  return builder.build(id);
}

Plane normalized_residual(const NoiseResidual& residual, const Plane& luma) {
  require_same_shape(residual.plane, luma, "normalized_residual");
  Plane out(luma.width(), luma.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = residual.plane[i] / std::max(luma[i], 1.0);
  return out;
}

ClusterSet cluster_residuals(std::span<const NoiseResidual> residuals,
                             std::span<const RgbImage> images, const ClusterParams& params) {
  if (residuals.empty()) throw std::invalid_argument("cluster_residuals: empty input");
  if (residuals.size() != images.size()) {
    throw std::invalid_argument("cluster_residuals: residual and image lists differ in length");
  }
  if (!(params.pce_threshold > 0.0)) throw std::invalid_argument("cluster_residuals: threshold must be > 0");

  const std::size_t n = residuals.size();
  std::vector<Plane> lumas;
  std::vector<WeightedCenter<std::complex<double>>> data;
  lumas.reserve(n);
  data.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    lumas.push_back(luminance(images[j]));
    const Spectrum s(normalized_residual(residuals[j], lumas.back()));
    data.push_back({{s.bins().begin(), s.bins().end()}, 1.0});
  }
  const int w = residuals.front().width();
  const int h = residuals.front().height();

  std::mt19937_64 rng(params.seed);
  std::vector<int> unassigned(n);
  std::iota(unassigned.begin(), unassigned.end(), 0);

  std::vector<std::vector<int>> groups;
  while (!unassigned.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, unassigned.size() - 1);
    const std::size_t at = pick(rng);
    const int seed_index = unassigned[at];
    unassigned.erase(unassigned.begin() + static_cast<std::ptrdiff_t>(at));

    WeightedCenter<std::complex<double>> center = data[static_cast<std::size_t>(seed_index)];
    std::vector<int> members{seed_index};
    bool grew = true;
    while (grew && !unassigned.empty()) {
      grew = false;
      std::vector<int> scan = unassigned;
      std::shuffle(scan.begin(), scan.end(), rng);
      for (int j : scan) {
        const Spectrum center_spec(w, h, center.center);
        const Spectrum cand_spec(w, h, data[static_cast<std::size_t>(j)].center);
        if (pce(center_spec, cand_spec, params.exclusion_radius) > params.pce_threshold) {
          center = merge_centers(center, data[static_cast<std::size_t>(j)]);
          members.push_back(j);
          std::erase(unassigned, j);
          grew = true;
        }
      }
    }
    groups.push_back(std::move(members));
  }

  ClusterSet out;
  for (auto& members : groups) {
    if (static_cast<int>(members.size()) < params.min_cluster_size) {
      out.leftovers.insert(out.leftovers.end(), members.begin(), members.end());
      continue;
    }
    std::sort(members.begin(), members.end());
    FingerprintBuilder builder(w, h);
    for (int j : members) builder.add(lumas[static_cast<std::size_t>(j)], residuals[static_cast<std::size_t>(j)]);
    const int id = static_cast<int>(out.clusters.size());
    out.clusters.push_back(Cluster{builder.build(id), std::move(members)});
  }
  std::sort(out.leftovers.begin(), out.leftovers.end());
  return out;
}

Association associate_image(const RgbImage& image, const NoiseResidual& residual,
                            std::span<const Fingerprint> fingerprints, double pce_threshold,
                            int exclusion_radius) {
  Association out;
  if (fingerprints.empty()) return out;
  const Plane luma = luminance(image);
  const Spectrum rs(residual.plane);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    const Fingerprint& fp = fingerprints[i];
    if (fp.width() != luma.width() || fp.height() != luma.height()) continue;
    Plane z = fp.estimate();
    for (std::size_t p = 0; p < z.size(); ++p) z[p] *= luma[p];
    const double v = pce(rs, Spectrum(z), exclusion_radius);
    if (v > best) {
      best = v;
      out.best = static_cast<int>(i);
    }
  }
  if (out.best < 0) return out;
  out.pce = best;
  if (best > pce_threshold) out.cluster = out.best;
  return out;
}

WindowedCorrelation windowed_correlation(const Plane& a, const Plane& b, int window,
                                         std::span<const std::uint8_t> valid) {
  require_same_shape(a, b, "windowed_correlation");
  if (window < 1) throw std::invalid_argument("windowed_correlation: window must be >= 1");
  if (!valid.empty() && valid.size() != a.size()) {
    throw std::invalid_argument("windowed_correlation: validity mask size mismatch");
  }
  const int w = a.width();
  const int h = a.height();
  auto ok = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };

  // Remove the global means first; it keeps the running sums small.
  double ma = 0.0;
  double mb = 0.0;
  std::size_t nv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!ok(i)) continue;
    ma += a[i];
    mb += b[i];
    ++nv;
  }
  if (nv > 0) {
    ma /= static_cast<double>(nv);
    mb /= static_cast<double>(nv);
  }

  // Six summed-area tables: n, a, b, aa, bb, ab.
  const std::size_t sw = static_cast<std::size_t>(w) + 1;
  const std::size_t area = sw * (static_cast<std::size_t>(h) + 1);
  std::vector<std::array<long double, 6>> sat(area, std::array<long double, 6>{});
  for (int y = 0; y < h; ++y) {
    std::array<long double, 6> row{};
    for (int x = 0; x < w; ++x) {
      const std::size_t i = a.index(x, y);
      if (ok(i)) {
        const long double da = a[i] - ma;
        const long double db = b[i] - mb;
        row[0] += 1;
        row[1] += da;
        row[2] += db;
        row[3] += da * da;
        row[4] += db * db;
        row[5] += da * db;
      }
      const auto& above = sat[static_cast<std::size_t>(y) * sw + static_cast<std::size_t>(x) + 1];
      auto& cell = sat[(static_cast<std::size_t>(y) + 1) * sw + static_cast<std::size_t>(x) + 1];
      for (int k = 0; k < 6; ++k) cell[static_cast<std::size_t>(k)] = above[static_cast<std::size_t>(k)] + row[static_cast<std::size_t>(k)];
    }
  }
  const auto& total = sat[area - 1];
  const long double abs_tol_a = 1e-13L * total[3] + 1e-300L;
  const long double abs_tol_b = 1e-13L * total[4] + 1e-300L;

  WindowedCorrelation out{Plane(w, h), std::vector<std::uint8_t>(a.size(), 0)};
  const int before = (window - 1) / 2;
  const int after = window / 2;
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - before);
    const int y1 = std::min(h, y + after + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - before);
      const int x1 = std::min(w, x + after + 1);
      const auto& s11 = sat[static_cast<std::size_t>(y1) * sw + static_cast<std::size_t>(x1)];
      const auto& s01 = sat[static_cast<std::size_t>(y0) * sw + static_cast<std::size_t>(x1)];
      const auto& s10 = sat[static_cast<std::size_t>(y1) * sw + static_cast<std::size_t>(x0)];
      const auto& s00 = sat[static_cast<std::size_t>(y0) * sw + static_cast<std::size_t>(x0)];
      std::array<long double, 6> s{};
      for (std::size_t k = 0; k < 6; ++k) s[k] = s11[k] - s01[k] - s10[k] + s00[k];
      const std::size_t i = a.index(x, y);
      const long double n = s[0];
      if (n < 2) {
        out.degenerate[i] = 1;
        continue;
      }
      const long double va = s[3] - s[1] * s[1] / n;
      const long double vb = s[4] - s[2] * s[2] / n;
      if (va <= abs_tol_a + 1e-12L * s[3] || vb <= abs_tol_b + 1e-12L * s[4]) {
        out.degenerate[i] = 1;
        continue;
      }
      const long double cov = s[5] - s[1] * s[2] / n;
      out.rho[i] = std::clamp(static_cast<double>(cov / std::sqrt(va * vb)), -1.0, 1.0);
    }
  }
  return out;
}

CorrelationField correlation_field(const RgbImage& image, const NoiseResidual& residual,
                                   const Fingerprint& fingerprint, int window, double pce_value) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("correlation_field: window must be odd and >= 3");
  }
  const Plane luma = luminance(image);
  require_same_shape(luma, residual.plane, "correlation_field residual");
  if (fingerprint.width() != luma.width() || fingerprint.height() != luma.height()) {
    throw std::invalid_argument("correlation_field: fingerprint dimensions differ from the image");
  }
  Plane z = fingerprint.estimate();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= luma[i];
  WindowedCorrelation wc = windowed_correlation(residual.plane, z, window);
  return CorrelationField{std::move(wc.rho), std::move(wc.degenerate), window, pce_value};
}

double adaptive_threshold(double pce_value, const PrnuMaskParams& params) {
  const double ratio = pce_value > 0.0 ? params.pce_reference / pce_value : 2.0;
  return params.base_threshold * std::clamp(ratio, 0.5, 2.0);
}

namespace {

std::vector<std::uint8_t> saturated_neighbourhoods(const Plane& luma, double level) {
  const int w = luma.width();
  const int h = luma.height();
  std::vector<std::uint8_t> out(luma.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1 && all; ++dx) {
          if (luma.contains(x + dx, y + dy) && luma(x + dx, y + dy) < level) all = false;
        }
      }
      out[luma.index(x, y)] = all ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

TamperMask prnu_mask(const CorrelationField& field, const RgbImage& image, const PrnuMaskParams& params) {
  const int w = field.rho.width();
  const int h = field.rho.height();
  if (image.width() != w || image.height() != h) {
    throw std::invalid_argument("prnu_mask: image and field dimensions differ");
  }
  const double t = adaptive_threshold(field.pce, params);
  const auto saturated = saturated_neighbourhoods(luminance(image), params.saturation_level);

  TamperMask raw(w, h, MaskSource::kPrnu);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool flagged = !field.degenerate.empty() && field.degenerate[i];
    raw.set_at(i, !flagged && !saturated[i] && field.rho[i] < t);
  }
  TamperMask cleaned = morph_clean(raw, params.morph_radius, params.min_area);
  // Closing may grow regions back into saturated areas.
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    if (saturated[i]) cleaned.set_at(i, false);
  }
  cleaned.set_source(MaskSource::kPrnu);
  return cleaned;
}

}  // namespace tamperloc
