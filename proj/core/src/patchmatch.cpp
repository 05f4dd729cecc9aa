#include "tamperloc/patchmatch.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tamperloc {

OffsetField::OffsetField(int width, int height) : width_(width), height_(height) {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  offsets_.assign(n, Offset{});
  costs_.assign(n, 0.0);
  valid_.assign(n, 0);
}

PatchCost::Layer PatchCost::make_layer(const RgbImage& image, int radius) {
  Layer layer;
  layer.width = image.width();
  layer.height = image.height();
  const auto n = static_cast<std::size_t>(layer.width) * static_cast<std::size_t>(layer.height);
  layer.rgb.assign(n * kStride, 0.0F);
  layer.means.assign(n * 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      layer.rgb[i * kStride + static_cast<std::size_t>(c)] = static_cast<float>(image.channel(c)[i]);
    }
  }
  const int side = 2 * radius + 1;
  const double area = static_cast<double>(side) * side;
  for (int y = radius; y < layer.height - radius; ++y) {
    for (int x = radius; x < layer.width - radius; ++x) {
      double sum[3] = {0.0, 0.0, 0.0};
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          for (int c = 0; c < 3; ++c) sum[c] += image.channel(c)(x + dx, y + dy);
        }
      }
      const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(layer.width) +
                             static_cast<std::size_t>(x)) * 3;
      for (int c = 0; c < 3; ++c) layer.means[i + static_cast<std::size_t>(c)] = sum[c] / area;
    }
  }
  return layer;
}

PatchCost::PatchCost(const RgbImage& query, const RgbImage& reference, int patch)
    : radius_(patch / 2),
      area_(static_cast<double>(patch) * patch),
      query_(make_layer(query, patch / 2)),
      reference_(make_layer(reference, patch / 2)) {
  if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("patch size must be odd and positive");
}

double PatchCost::operator()(int px, int py, int qx, int qy) const {
  return bounded(px, py, qx, qy, std::numeric_limits<double>::infinity());
}

double PatchCost::bounded(int px, int py, int qx, int qy, double bound) const {
  const std::size_t pi = (static_cast<std::size_t>(py) * static_cast<std::size_t>(query_.width) +
                          static_cast<std::size_t>(px)) * 3;
  const std::size_t qi = (static_cast<std::size_t>(qy) * static_cast<std::size_t>(reference_.width) +
                          static_cast<std::size_t>(qx)) * 3;
  // sum((a - b)^2) - n * (mean_a - mean_b)^2 per channel.
  double correction = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double dm = query_.means[pi + c] - reference_.means[qi + c];
    correction += area_ * dm * dm;
  }
  const double stop = bound + correction;
  const int n = (2 * radius_ + 1) * static_cast<int>(kStride);
  double raw = 0.0;
  for (int dy = -radius_; dy <= radius_; ++dy) {
    const float* a = &query_.rgb[(static_cast<std::size_t>(py + dy) * static_cast<std::size_t>(query_.width) +
                                  static_cast<std::size_t>(px - radius_)) * kStride];
    const float* b = &reference_.rgb[(static_cast<std::size_t>(qy + dy) * static_cast<std::size_t>(reference_.width) +
                                      static_cast<std::size_t>(qx - radius_)) * kStride];
    // One lane per channel (the fourth is padding), so the loop vectorizes.
    float acc[kStride] = {};
    for (int k = 0; k < n; k += static_cast<int>(kStride)) {
      for (std::size_t j = 0; j < kStride; ++j) {
        const float d = a[k + static_cast<int>(j)] - b[k + static_cast<int>(j)];
        acc[j] += d * d;
      }
    }
    raw += static_cast<double>((acc[0] + acc[1]) + (acc[2] + acc[3]));
    if (raw >= stop) return std::max(raw - correction, bound);
  }
  return std::max(raw - correction, 0.0);
}

namespace {

class Matcher {
 public:
  Matcher(const RgbImage& query, const RgbImage& reference, const PlacedSimilarity& to_ref,
          const NnfParams& params)
      : cost_(query, reference, params.patch),
        to_ref_(to_ref),
        identity_(to_ref.is_identity()),
        params_(params),
        r_(params.patch / 2),
        qw_(query.width()),
        qh_(query.height()),
        rw_(reference.width()),
        rh_(reference.height()),
        rng_(params.seed) {}

  OffsetField run(const NnfObserver& observer) {
    OffsetField field(qw_, qh_);
    initialise(field);
    if (observer) observer(-1, field);
    for (int round = 0; round < params_.iterations; ++round) {
      iterate(field, round);
      if (observer) observer(round, field);
    }
    return field;
  }

 private:
  bool legal(int px, int py, int qx, int qy) const {
    if (qx < r_ || qy < r_ || qx >= rw_ - r_ || qy >= rh_ - r_) return false;
    if (params_.min_displacement <= 0.0) return true;
    double dx;
    double dy;
    if (identity_) {
      dx = qx - px;
      dy = qy - py;
    } else {
      const Point2 back = to_ref_.inverse({static_cast<double>(qx), static_cast<double>(qy)});
      dx = back.x - px;
      dy = back.y - py;
    }
    return dx * dx + dy * dy >= params_.min_displacement * params_.min_displacement;
  }

  void initialise(OffsetField& field) {
    if (qw_ <= 2 * r_ || qh_ <= 2 * r_ || rw_ <= 2 * r_ || rh_ <= 2 * r_) {
      throw std::invalid_argument("compute_nnf: image must be larger than the patch");
    }
    std::uniform_int_distribution<int> ux(r_, rw_ - r_ - 1);
    std::uniform_int_distribution<int> uy(r_, rh_ - r_ - 1);
    for (int y = r_; y < qh_ - r_; ++y) {
      for (int x = r_; x < qw_ - r_; ++x) {
        int qx = 0;
        int qy = 0;
        bool found = false;
        for (int attempt = 0; attempt < 4096 && !found; ++attempt) {
          qx = ux(rng_);
          qy = uy(rng_);
          found = legal(x, y, qx, qy);
        }
        if (!found) {
          throw std::invalid_argument("compute_nnf: min_displacement too large for the image");
        }
        double c = cost_(x, y, qx, qy);
        if (params_.min_displacement <= 0.0) {
          const Point2 self = to_ref_.forward({static_cast<double>(x), static_cast<double>(y)});
          const int sx = static_cast<int>(std::lround(self.x));
          const int sy = static_cast<int>(std::lround(self.y));
          if (legal(x, y, sx, sy)) {
            const double c0 = cost_(x, y, sx, sy);
            if (c0 <= c) {
              c = c0;
              qx = sx;
              qy = sy;
            }
          }
        }
        field.offset(x, y) = Offset{qx - x, qy - y};
        field.cost(x, y) = c;
        field.set_valid(x, y, true);
      }
    }
  }

  void try_candidate(OffsetField& field, int x, int y, int qx, int qy) {
    const Offset current = field.offset(x, y);
    if (qx - x == current.dx && qy - y == current.dy) return;
    if (!legal(x, y, qx, qy)) return;
    const double best = field.cost(x, y);
    const double c = cost_.bounded(x, y, qx, qy, best);
    if (c < best) {
      field.cost(x, y) = c;
      field.offset(x, y) = Offset{qx - x, qy - y};
    }
  }

  void iterate(OffsetField& field, int round) {
    const bool forward = round % 2 == 0;
    const int step = forward ? 1 : -1;
    const int y_begin = forward ? r_ : qh_ - r_ - 1;
    const int y_end = forward ? qh_ - r_ : r_ - 1;
    const int x_begin = forward ? r_ : qw_ - r_ - 1;
    const int x_end = forward ? qw_ - r_ : r_ - 1;
    const int max_radius = std::max(rw_, rh_);

    for (int y = y_begin; y != y_end; y += step) {
      for (int x = x_begin; x != x_end; x += step) {
        // Propagation from the already-visited neighbours.
        const int nx = x - step;
        const int ny = y - step;
        if (nx >= r_ && nx < qw_ - r_) {
          const Offset o = field.offset(nx, y);
          try_candidate(field, x, y, x + o.dx, y + o.dy);
        }
        if (ny >= r_ && ny < qh_ - r_) {
          const Offset o = field.offset(x, ny);
          try_candidate(field, x, y, x + o.dx, y + o.dy);
        }
        // Exponentially shrinking random search around the current best.
        for (int radius = max_radius; radius >= 1; radius /= 2) {
          const Offset best = field.offset(x, y);
          std::uniform_int_distribution<int> u(-radius, radius);
          const int qx = x + best.dx + u(rng_);
          const int qy = y + best.dy + u(rng_);
          try_candidate(field, x, y, qx, qy);
        }
      }
    }
  }

  PatchCost cost_;
  PlacedSimilarity to_ref_;
  bool identity_;
  NnfParams params_;
  int r_;
  int qw_;
  int qh_;
  int rw_;
  int rh_;
  std::mt19937_64 rng_;
};

}  // namespace

OffsetField compute_nnf(const RgbImage& query, const RgbImage& reference,
                        const PlacedSimilarity& to_reference, const NnfParams& params,
                        const NnfObserver& observer) {
  if (params.patch < 1 || params.patch % 2 == 0) throw std::invalid_argument("compute_nnf: patch must be odd");
  if (params.iterations < 1) throw std::invalid_argument("compute_nnf: iterations must be >= 1");
  if (params.min_displacement < 0.0) throw std::invalid_argument("compute_nnf: min_displacement must be >= 0");
  Matcher matcher(query, reference, to_reference, params);
  return matcher.run(observer);
}

OffsetField compute_nnf(const RgbImage& image, const NnfParams& params, const NnfObserver& observer) {
  const Point2 c{(image.width() - 1) / 2.0, (image.height() - 1) / 2.0};
  const double reach = std::hypot(image.width() - 1.0, image.height() - 1.0);
  if (params.min_displacement > reach) {
    throw std::invalid_argument("compute_nnf: min_displacement too large for the image");
  }
  return compute_nnf(image, image, PlacedSimilarity(0.0, 1.0, c, c), params, observer);
}

}  // namespace tamperloc
