#include "tamperloc/copymove.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tamperloc/image_io.hpp"

namespace tamperloc {

std::vector<TransformSpec> default_transform_sweep() {
  std::vector<TransformSpec> specs;
  for (double rot : {0.0, 90.0, 180.0, 270.0}) {
    for (double scale : {0.8, 1.0, 1.25}) specs.push_back({rot, scale});
  }
  return specs;
}

std::vector<SweepField> sweep_transforms(const RgbImage& image, std::vector<TransformSpec> specs,
                                         const NnfParams& params) {
  if (specs.empty()) throw std::invalid_argument("sweep_transforms: no transforms given");
  auto identity = std::find_if(specs.begin(), specs.end(), [](const TransformSpec& s) { return s.is_identity(); });
  if (identity == specs.end()) {
    specs.insert(specs.begin(), TransformSpec{});
  } else if (identity != specs.begin()) {
    std::rotate(specs.begin(), identity, identity + 1);
  }

  std::vector<SweepField> out;
  out.reserve(specs.size());
  for (const TransformSpec& spec : specs) {
    SweepField f;
    f.spec = spec;
    if (spec.is_identity()) {
      f.reference = image;
      const Point2 c{(image.width() - 1) / 2.0, (image.height() - 1) / 2.0};
      f.to_reference = PlacedSimilarity(0.0, 1.0, c, c);
      f.field = compute_nnf(image, params);
    } else {
      f.reference = transform_image(image, spec.rotation_deg, spec.scale, &f.to_reference);
      f.field = compute_nnf(image, f.reference, f.to_reference, params);
    }
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

// Histogram over a bounded integer range with an incrementally tracked rank
// query, for sliding-window medians.
class SlidingRank {
 public:
  SlidingRank(int lo, int hi) : lo_(lo), hist_(static_cast<std::size_t>(hi - lo + 1), 0) {}

  void add(int v) {
    ++hist_[slot(v)];
    if (v - lo_ < pos_) ++below_;
  }
  void remove(int v) {
    --hist_[slot(v)];
    if (v - lo_ < pos_) --below_;
  }
  // Value of rank k (0-based) among the current members.
  int select(int k) {
    while (below_ > k) {
      --pos_;
      below_ -= hist_[static_cast<std::size_t>(pos_)];
    }
    while (below_ + hist_[static_cast<std::size_t>(pos_)] <= k) {
      below_ += hist_[static_cast<std::size_t>(pos_)];
      ++pos_;
    }
    return pos_ + lo_;
  }

 private:
  std::size_t slot(int v) const { return static_cast<std::size_t>(v - lo_); }

  int lo_;
  std::vector<int> hist_;
  int pos_ = 0;
  int below_ = 0;
};

}  // namespace

Plane filter_offset_field(const OffsetField& field, int window, int tolerance) {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("filter_offset_field: window must be odd and >= 3");
  if (tolerance < 0) throw std::invalid_argument("filter_offset_field: tolerance must be >= 0");
  const int w = field.width();
  const int h = field.height();
  const int half = window / 2;
  Plane out(w, h);

  int lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  bool any = false;
  for (std::size_t i = 0; i < field.offsets().size(); ++i) {
    if (field.validity()[i] == 0) continue;
    const Offset o = field.offsets()[i];
    if (!any) {
      lo_x = hi_x = o.dx;
      lo_y = hi_y = o.dy;
      any = true;
    }
    lo_x = std::min(lo_x, o.dx);
    hi_x = std::max(hi_x, o.dx);
    lo_y = std::min(lo_y, o.dy);
    hi_y = std::max(hi_y, o.dy);
  }
  if (!any) return out;

  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half);
    const int y1 = std::min(h - 1, y + half);
    SlidingRank rx(lo_x, hi_x);
    SlidingRank ry(lo_y, hi_y);
    int count = 0;
    auto update_column = [&](int xx, bool add) {
      for (int yy = y0; yy <= y1; ++yy) {
        if (!field.valid(xx, yy)) continue;
        const Offset o = field.offset(xx, yy);
        if (add) {
          rx.add(o.dx);
          ry.add(o.dy);
          ++count;
        } else {
          rx.remove(o.dx);
          ry.remove(o.dy);
          --count;
        }
      }
    };
    for (int xx = 0; xx <= std::min(w - 1, half - 1); ++xx) update_column(xx, true);
    for (int x = 0; x < w; ++x) {
      if (x + half < w) update_column(x + half, true);
      if (x - half - 1 >= 0) update_column(x - half - 1, false);
      if (!field.valid(x, y) || count == 0) continue;
      const int mid = (count - 1) / 2;
      const int mx = rx.select(mid);
      const int my = ry.select(mid);
      int close = 0;
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = std::max(0, x - half); xx <= std::min(w - 1, x + half); ++xx) {
          if (!field.valid(xx, yy)) continue;
          const Offset o = field.offset(xx, yy);
          if (std::abs(o.dx - mx) <= tolerance && std::abs(o.dy - my) <= tolerance) ++close;
        }
      }
      out(x, y) = static_cast<double>(close) / static_cast<double>(count);
    }
  }
  return out;
}

namespace {

// Variance over a window of side `window` (clipped at the borders).
Plane local_variance(const Plane& p, int window) {
  const int w = p.width();
  const int h = p.height();
  const double mean = p.mean();
  const std::size_t sw = static_cast<std::size_t>(w) + 1;
  std::vector<double> s1(sw * (static_cast<std::size_t>(h) + 1), 0.0);
  std::vector<double> s2(s1.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    double r1 = 0.0;
    double r2 = 0.0;
    for (int x = 0; x < w; ++x) {
      const double v = p(x, y) - mean;
      r1 += v;
      r2 += v * v;
      const std::size_t i = (static_cast<std::size_t>(y) + 1) * sw + static_cast<std::size_t>(x) + 1;
      s1[i] = s1[i - sw] + r1;
      s2[i] = s2[i - sw] + r2;
    }
  }
  const int half = window / 2;
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto y0 = static_cast<std::size_t>(std::max(0, y - half));
    const auto y1 = static_cast<std::size_t>(std::min(h, y + half + 1));
    for (int x = 0; x < w; ++x) {
      const auto x0 = static_cast<std::size_t>(std::max(0, x - half));
      const auto x1 = static_cast<std::size_t>(std::min(w, x + half + 1));
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      const double a = s1[y1 * sw + x1] - s1[y0 * sw + x1] - s1[y1 * sw + x0] + s1[y0 * sw + x0];
      const double b = s2[y1 * sw + x1] - s2[y0 * sw + x1] - s2[y1 * sw + x0] + s2[y0 * sw + x0];
      out(x, y) = std::max(0.0, b / n - (a / n) * (a / n));
    }
  }
  return out;
}

// Luminance minus its 3x3 box mean (edge-clamped).
Plane high_pass(const Plane& p) {
  const int w = p.width();
  const int h = p.height();
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) sum += p(std::clamp(x + dx, 0, w - 1), yy);
      }
      out(x, y) = p(x, y) - sum / 9.0;
    }
  }
  return out;
}

double displacement_in_query(const SweepField& f, int x, int y, Offset o) {
  if (f.spec.is_identity()) return std::hypot(o.dx, o.dy);
  const Point2 back = f.to_reference.inverse({static_cast<double>(x + o.dx), static_cast<double>(y + o.dy)});
  return std::hypot(back.x - x, back.y - y);
}

struct OffsetLess {
  bool operator()(const Offset& a, const Offset& b) const {
    return a.dx != b.dx ? a.dx < b.dx : a.dy < b.dy;
  }
};

double iou(const TamperMask& a, const TamperMask& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a.at(i) && b.at(i)) ? 1 : 0;
    uni += (a.at(i) || b.at(i)) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void extract_from_field(const SweepField& f, const Plane& luma, const Plane& variance,
                        const CopyRegionParams& params, std::vector<CopyRegionPair>& out) {
  const int w = luma.width();
  const int h = luma.height();
  const OffsetField& field = f.field;
  const Plane coherence = filter_offset_field(field, params.coherence_window, params.coherence_tolerance);

  TamperMask seeds(w, h, MaskSource::kCopyMove);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!field.valid(x, y) || coherence(x, y) < params.coherence_threshold) continue;
      if (variance(x, y) < params.flat_variance_floor) continue;
      if (displacement_in_query(f, x, y, field.offset(x, y)) < params.min_displacement) continue;
      seeds.set(x, y, true);
    }
  }
  const Components cc = connected_components(seeds);

  // Dominant offset per component, then components grouped by offset.
  std::vector<std::map<Offset, std::size_t, OffsetLess>> votes(cc.count());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const int label = cc.labels[i];
    if (label < 0 || cc.areas[static_cast<std::size_t>(label)] < static_cast<std::size_t>(params.min_seed_pixels)) continue;
    ++votes[static_cast<std::size_t>(label)][field.offsets()[i]];
  }
  std::map<Offset, std::vector<int>, OffsetLess> groups;
  for (std::size_t label = 0; label < votes.size(); ++label) {
    if (votes[label].empty()) continue;
    const auto best = std::max_element(votes[label].begin(), votes[label].end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    groups[best->first].push_back(static_cast<int>(label));
  }

  const Plane ref_luma = high_pass(luminance(f.reference));
  for (const auto& [d, labels] : groups) {
    TamperMask group_seeds(w, h, MaskSource::kCopyMove);
    std::size_t anchor = seeds.size();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (cc.labels[i] >= 0 && std::find(labels.begin(), labels.end(), cc.labels[i]) != labels.end()) {
        group_seeds.set_at(i, true);
        if (anchor == seeds.size()) anchor = i;
      }
    }
    const int ax = static_cast<int>(anchor % static_cast<std::size_t>(w));
    const int ay = static_cast<int>(anchor / static_cast<std::size_t>(w));
    if (displacement_in_query(f, ax, ay, d) < params.min_displacement) continue;

    // Transform-compensated image shifted by the offset.
    Plane shifted(w, h);
    std::vector<std::uint8_t> valid(luma.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int qx = x + d.dx;
        const int qy = y + d.dy;
        if (ref_luma.contains(qx, qy)) {
          shifted(x, y) = ref_luma(qx, qy);
          valid[luma.index(x, y)] = 1;
        }
      }
    }
    const WindowedCorrelation wc = windowed_correlation(luma, shifted, params.corr_window, valid);
    TamperMask raw(w, h, MaskSource::kCopyMove);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw.set_at(i, valid[i] && !wc.degenerate[i] && wc.rho[i] >= params.corr_threshold &&
                        variance[i] >= params.flat_variance_floor);
    }
    const TamperMask cleaned = morph_clean(raw, params.morph_radius, params.min_area);

    // Keep only verified components that contain seeds of this offset.
    const Components rc = connected_components(cleaned);
    std::vector<std::uint8_t> keep(rc.count(), 0);
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
      if (rc.labels[i] >= 0 && group_seeds.at(i)) keep[static_cast<std::size_t>(rc.labels[i])] = 1;
    }
    CopyRegionPair pair;
    pair.region_b = TamperMask(w, h, MaskSource::kCopyMove);
    double corr_sum = 0.0;
    std::size_t area_b = 0;
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
      if (rc.labels[i] >= 0 && keep[static_cast<std::size_t>(rc.labels[i])]) {
        pair.region_b.set_at(i, true);
        corr_sum += wc.rho[i];
        ++area_b;
      }
    }
    if (area_b == 0) continue;

    // The verification window straddling a region border scores about half;
    // recover that band with a small window.
    if (params.refine_window > 1) {
      const WindowedCorrelation fine = windowed_correlation(luma, shifted, params.refine_window, valid);
      const TamperMask band = dilate(pair.region_b, params.corr_window / 2);
      TamperMask grown = pair.region_b;
      for (std::size_t i = 0; i < grown.size(); ++i) {
        if (band.at(i) && !grown.at(i) && valid[i] && !fine.degenerate[i] && fine.rho[i] >= params.corr_threshold) {
          grown.set_at(i, true);
        }
      }
      grown = morph_clean(grown, params.morph_radius, params.min_area);
      for (std::size_t i = 0; i < grown.size(); ++i) {
        if (grown.at(i)) pair.region_b.set_at(i, true);
      }
    }

    // Self-similar structure (straight edges, periodic texture) also matches
    // at neighbouring offsets; a copied region matches at one offset only.
    auto region_corr = [&](int ox, int oy) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      std::size_t n = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!pair.region_b(x, y) || !ref_luma.contains(x + ox, y + oy)) continue;
          const double a = luma(x, y);
          const double b = ref_luma(x + ox, y + oy);
          sa += a;
          sb += b;
          saa += a * a;
          sbb += b * b;
          sab += a * b;
          ++n;
        }
      }
      if (n < 2) return 0.0;
      const double dn = static_cast<double>(n);
      const double va = saa - sa * sa / dn;
      const double vb = sbb - sb * sb / dn;
      return va > 0.0 && vb > 0.0 ? (sab - sa * sb / dn) / std::sqrt(va * vb) : 0.0;
    };
    const double peak = region_corr(d.dx, d.dy);
    double side = -1.0;
    for (int sy = -1; sy <= 1; ++sy) {
      for (int sx = -1; sx <= 1; ++sx) {
        if (sx == 0 && sy == 0) continue;
        side = std::max(side, region_corr(d.dx + sx * params.shift_probe, d.dy + sy * params.shift_probe));
      }
    }
    if (!(peak > 0.0) || side > params.max_shift_corr * peak) continue;

    // Mirror region: query pixels whose transformed position, moved back by
    // the offset, lands in region_b.
    pair.region_a = TamperMask(w, h, MaskSource::kCopyMove);
    std::size_t area_a = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int px;
        int py;
        if (f.spec.is_identity()) {
          px = x - d.dx;
          py = y - d.dy;
        } else {
          const Point2 q = f.to_reference.forward({static_cast<double>(x), static_cast<double>(y)});
          px = static_cast<int>(std::lround(q.x)) - d.dx;
          py = static_cast<int>(std::lround(q.y)) - d.dy;
        }
        if (pair.region_b.contains(px, py) && pair.region_b(px, py) && !pair.region_b(x, y)) {
          pair.region_a.set(x, y, true);
          ++area_a;
        }
      }
    }
    if (area_a == 0) continue;
    pair.offset = d;
    pair.mirror_offset = f.spec.is_identity() ? Offset{-d.dx, -d.dy} : Offset{};
    if (!f.spec.is_identity()) {
      const Point2 back = f.to_reference.inverse({static_cast<double>(ax + d.dx), static_cast<double>(ay + d.dy)});
      pair.mirror_offset = Offset{static_cast<int>(std::lround(ax - back.x)), static_cast<int>(std::lround(ay - back.y))};
    }
    pair.transform = f.spec;
    pair.verification_corr = corr_sum / static_cast<double>(area_b);
    if (pair.verification_corr < params.min_pair_corr) continue;
    out.push_back(std::move(pair));
  }
}

}  // namespace

std::vector<CopyRegionPair> extract_copy_regions(const RgbImage& image, const std::vector<SweepField>& fields,
                                                 const CopyRegionParams& params) {
  if (!(params.coherence_threshold > 0.0 && params.coherence_threshold <= 1.0) ||
      !(params.corr_threshold > 0.0 && params.corr_threshold <= 1.0)) {
    throw std::invalid_argument("extract_copy_regions: thresholds must lie in (0, 1]");
  }
  if (params.min_area <= 0) throw std::invalid_argument("extract_copy_regions: min_area must be > 0");
  const Plane luma = luminance(image);
  const Plane variance = local_variance(luma, 7);
  const Plane detail = high_pass(luma);

  std::vector<CopyRegionPair> candidates;
  for (const SweepField& f : fields) {
    if (f.field.width() != image.width() || f.field.height() != image.height()) {
      throw std::invalid_argument("extract_copy_regions: field dimensions differ from the image");
    }
    extract_from_field(f, detail, variance, params, candidates);
  }

  // Collapse pairs that cover the same pixels (mirror offsets, sibling transforms).
  std::stable_sort(candidates.begin(), candidates.end(), [](const CopyRegionPair& a, const CopyRegionPair& b) {
    return a.verification_corr > b.verification_corr;
  });
  std::vector<CopyRegionPair> kept;
  std::vector<TamperMask> kept_union;
  for (auto& c : candidates) {
    TamperMask u = c.region_a;
    u |= c.region_b;
    const bool duplicate = std::any_of(kept_union.begin(), kept_union.end(),
                                       [&](const TamperMask& k) { return iou(k, u) > 0.5; });
    if (duplicate) continue;
    kept_union.push_back(std::move(u));
    kept.push_back(std::move(c));
  }
  return kept;
}

CopyRegionPair disambiguate_source(CopyRegionPair pair, const CorrelationField* field,
                                   const DisambiguationParams& params) {
  pair.role = CopyRole::kUnknown;
  if (field == nullptr || !(field->pce > params.pce_floor)) return pair;
  if (pair.region_a.count() < params.min_region_area || pair.region_b.count() < params.min_region_area) return pair;
  if (!pair.region_a.same_shape(pair.region_b) || pair.region_a.width() != field->rho.width() ||
      pair.region_a.height() != field->rho.height()) {
    return pair;
  }
  auto mean_rho = [&](const TamperMask& region) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (!region.at(i) || (!field->degenerate.empty() && field->degenerate[i])) continue;
      sum += field->rho[i];
      ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  };
  const double a = mean_rho(pair.region_a);
  const double b = mean_rho(pair.region_b);
  if (a > b) pair.role = CopyRole::kASource;
  if (b > a) pair.role = CopyRole::kBSource;
  return pair;
}

TamperMask copymove_mask(const std::vector<CopyRegionPair>& pairs, int width, int height) {
  TamperMask out(width, height, MaskSource::kCopyMove);
  for (const auto& p : pairs) {
    if (p.role != CopyRole::kBSource) out |= p.region_b;
    if (p.role != CopyRole::kASource) out |= p.region_a;
  }
  out.set_source(MaskSource::kCopyMove);
  return out;
}

CopyMoveResult detect_copymove(const RgbImage& image, const CopyMoveParams& params,
                               const CorrelationField* prnu_field) {
  CopyRegionParams regions = params.regions;
  regions.min_displacement = params.nnf.min_displacement;
  const auto fields = sweep_transforms(image, params.transforms, params.nnf);
  CopyMoveResult out;
  for (auto& pair : extract_copy_regions(image, fields, regions)) {
    out.pairs.push_back(disambiguate_source(std::move(pair), prnu_field, params.disambiguation));
  }
  out.mask = copymove_mask(out.pairs, image.width(), image.height());
  return out;
}

void write_offset_field_png(const std::filesystem::path& path, const OffsetField& field) {
  double max_cost = 0.0;
  for (std::size_t i = 0; i < field.costs().size(); ++i) {
    if (field.validity()[i]) max_cost = std::max(max_cost, field.costs()[i]);
  }
  RgbImage img(field.width(), field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      if (!field.valid(x, y)) continue;
      const Offset o = field.offset(x, y);
      img.channel(0)(x, y) = std::clamp(o.dx + 128, 0, 255);
      img.channel(1)(x, y) = std::clamp(o.dy + 128, 0, 255);
      img.channel(2)(x, y) = max_cost > 0.0 ? 255.0 * field.cost(x, y) / max_cost : 0.0;
    }
  }
  write_png(path, img);
}

}  // namespace tamperloc
