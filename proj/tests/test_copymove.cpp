#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "tamperloc/copymove.hpp"
#include "tamperloc/patchmatch.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/synth.hpp"

namespace tamperloc {
namespace {

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  RgbImage img(w, h);
  for (int c = 0; c < 3; ++c) {
    for (double& v : img.channel(c).values()) v = u(rng);
  }
  return img;
}

double direct_cost(const RgbImage& a, const RgbImage& b, int r, int px, int py, int qx, int qy) {
  const double n = (2.0 * r + 1) * (2.0 * r + 1);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double ma = 0.0, mb = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        ma += a.channel(c)(px + dx, py + dy);
        mb += b.channel(c)(qx + dx, qy + dy);
      }
    }
    ma /= n;
    mb /= n;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double d = (a.channel(c)(px + dx, py + dy) - ma) - (b.channel(c)(qx + dx, qy + dy) - mb);
        total += d * d;
      }
    }
  }
  return total;
}

// Exact NNF cost under the displacement floor.
std::vector<double> brute_force_costs(const RgbImage& img, int patch, double floor) {
  const int r = patch / 2, w = img.width(), h = img.height();
  std::vector<double> out(static_cast<std::size_t>(w * h), 0.0);
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int qy = r; qy < h - r; ++qy) {
        for (int qx = r; qx < w - r; ++qx) {
          const double dx = qx - x, dy = qy - y;
          if (floor > 0.0 && dx * dx + dy * dy < floor * floor) continue;
          best = std::min(best, direct_cost(img, img, r, x, y, qx, qy));
        }
      }
      out[static_cast<std::size_t>(y * w + x)] = best;
    }
  }
  return out;
}

TEST(PatchCost, MatchesDirectSsd) {
  const RgbImage a = noise_image(30, 25, 1);
  const RgbImage b = noise_image(30, 25, 2);
  const PatchCost cost(a, b, 7);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ux(3, 26), uy(3, 21);
  for (int t = 0; t < 200; ++t) {
    const int px = ux(rng), py = uy(rng), qx = ux(rng), qy = uy(rng);
    const double want = direct_cost(a, b, 3, px, py, qx, qy);
    EXPECT_NEAR(cost(px, py, qx, qy), want, 1e-6 * want + 1e-3);
    const double bound = want * 0.5;
    EXPECT_GE(cost.bounded(px, py, qx, qy, bound), bound * (1 - 1e-6));
    const double loose = cost.bounded(px, py, qx, qy, want * 2 + 1);
    EXPECT_NEAR(loose, want, 1e-6 * want + 1e-3);
  }
}

TEST(PatchCost, InvariantToPerChannelOffset) {
  const RgbImage a = noise_image(20, 20, 4);
  RgbImage b = a;
  for (int c = 0; c < 3; ++c) {
    for (double& v : b.channel(c).values()) v += 10.0 * (c + 1);
  }
  const PatchCost cost(a, b, 7);
  EXPECT_NEAR(cost(8, 8, 8, 8), 0.0, 1e-6);
}

TEST(Nnf, SelfMatchWithoutFloorIsZero) {
  const RgbImage img = noise_image(40, 40, 5);
  NnfParams p;
  p.min_displacement = 0.0;
  p.iterations = 1;
  const OffsetField f = compute_nnf(img, p);
  for (int y = 3; y < 37; ++y) {
    for (int x = 3; x < 37; ++x) {
      EXPECT_EQ(f.offset(x, y), (Offset{0, 0}));
      EXPECT_NEAR(f.cost(x, y), 0.0, 1e-6);
    }
  }
}

TEST(Nnf, FindsExactCopy) {
  RgbImage img = noise_image(128, 80, 6);
  for (int c = 0; c < 3; ++c) {
    for (int y = 20; y < 60; ++y) {
      for (int x = 10; x < 50; ++x) img.channel(c)(x + 60, y) = img.channel(c)(x, y);
    }
  }
  NnfParams p;
  p.iterations = 5;
  const OffsetField f = compute_nnf(img, p);
  int hit = 0, total = 0;
  for (int y = 23; y < 57; ++y) {
    for (int x = 13; x < 47; ++x) {
      ++total;
      hit += f.offset(x, y) == Offset{60, 0};
      ++total;
      hit += f.offset(x + 60, y) == Offset{-60, 0};
    }
  }
  EXPECT_GE(hit, total * 9 / 10);
}

TEST(Nnf, NearBruteForceOptimum) {
  double ratio_sum = 0.0;
  const int seeds = 3;
  for (int s = 0; s < seeds; ++s) {
    const RgbImage img = noise_image(48, 48, 100 + static_cast<std::uint64_t>(s));
    NnfParams p;
    p.seed = static_cast<std::uint64_t>(s);
    const OffsetField f = compute_nnf(img, p);
    const auto exact = brute_force_costs(img, 7, p.min_displacement);
    double a = 0.0, b = 0.0;
    for (int y = 3; y < 45; ++y) {
      for (int x = 3; x < 45; ++x) {
        a += f.cost(x, y);
        b += exact[static_cast<std::size_t>(y * 48 + x)];
        EXPECT_GE(f.cost(x, y), exact[static_cast<std::size_t>(y * 48 + x)] - 1e-3);
      }
    }
    ratio_sum += a / b;
  }
  EXPECT_LE(ratio_sum / seeds, 1.10);
}

TEST(Nnf, SmallImageReachesOptimumWithoutFloor) {
  const RgbImage img = noise_image(32, 32, 8);
  NnfParams p;
  p.min_displacement = 0.0;
  p.iterations = 12;
  const OffsetField f = compute_nnf(img, p);
  const auto exact = brute_force_costs(img, 7, 0.0);
  int optimal = 0, total = 0;
  for (int y = 3; y < 29; ++y) {
    for (int x = 3; x < 29; ++x) {
      const double e = exact[static_cast<std::size_t>(y * 32 + x)];
      ++total;
      optimal += f.cost(x, y) <= e + 1e-6;
      EXPECT_LE(f.cost(x, y), 1.05 * e + 1e-6);
    }
  }
  EXPECT_GE(optimal, total * 95 / 100);
}

TEST(Nnf, CostsNeverIncreaseAndFloorHolds) {
  const RgbImage img = noise_image(64, 48, 9);
  NnfParams p;
  p.iterations = 6;
  std::vector<double> previous;
  int rounds = 0;
  const OffsetField f = compute_nnf(img, p, [&](int round, const OffsetField& field) {
    if (!previous.empty()) {
      for (std::size_t i = 0; i < previous.size(); ++i) {
        if (field.validity()[i]) { ASSERT_LE(field.costs()[i], previous[i]) << "round " << round << " pixel " << i; }
      }
    }
    previous = field.costs();
    ++rounds;
  });
  EXPECT_EQ(rounds, 7);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!f.valid(x, y)) {
        EXPECT_TRUE(x < 3 || y < 3 || x >= 61 || y >= 45);
        continue;
      }
      const Offset o = f.offset(x, y);
      EXPECT_GE(o.dx * o.dx + o.dy * o.dy, 64);
      EXPECT_TRUE(x + o.dx >= 3 && x + o.dx < 61 && y + o.dy >= 3 && y + o.dy < 45);
      EXPECT_GE(f.cost(x, y), 0.0);
    }
  }
}

TEST(Nnf, Deterministic) {
  const RgbImage img = noise_image(50, 40, 10);
  NnfParams p;
  p.seed = 77;
  EXPECT_EQ(compute_nnf(img, p), compute_nnf(img, p));
}

TEST(Nnf, RejectsBadParameters) {
  const RgbImage img = noise_image(20, 20, 1);
  NnfParams p;
  p.min_displacement = 40.0;
  EXPECT_THROW(compute_nnf(img, p), std::invalid_argument);
  p = NnfParams{};
  p.patch = 6;
  EXPECT_THROW(compute_nnf(img, p), std::invalid_argument);
  EXPECT_THROW(compute_nnf(noise_image(6, 6, 1), NnfParams{}), std::invalid_argument);
}

TEST(Sweep, IdentityPrependedAndEqualToPlainNnf) {
  const RgbImage img = noise_image(48, 48, 11);
  NnfParams p;
  const auto single = sweep_transforms(img, {TransformSpec{}}, p);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].field, compute_nnf(img, p));
  const auto two = sweep_transforms(img, {TransformSpec{90.0, 1.0}}, p);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_TRUE(two[0].spec.is_identity());
  EXPECT_EQ(two[1].spec, (TransformSpec{90.0, 1.0}));
  EXPECT_EQ(default_transform_sweep().size(), 12u);
}

// Lower median via nth_element; the reference for the sliding histogram.
Plane coherence_oracle(const OffsetField& f, int window, int tol) {
  const int half = window / 2;
  Plane out(f.width(), f.height());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (!f.valid(x, y)) continue;
      std::vector<int> xs, ys;
      std::vector<Offset> members;
      for (int v = std::max(0, y - half); v <= std::min(f.height() - 1, y + half); ++v) {
        for (int u = std::max(0, x - half); u <= std::min(f.width() - 1, x + half); ++u) {
          if (!f.valid(u, v)) continue;
          xs.push_back(f.offset(u, v).dx);
          ys.push_back(f.offset(u, v).dy);
          members.push_back(f.offset(u, v));
        }
      }
      const auto mid = static_cast<std::ptrdiff_t>((xs.size() - 1) / 2);
      std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
      std::nth_element(ys.begin(), ys.begin() + mid, ys.end());
      int close = 0;
      for (const Offset& o : members) close += std::abs(o.dx - xs[mid]) <= tol && std::abs(o.dy - ys[mid]) <= tol;
      out(x, y) = static_cast<double>(close) / static_cast<double>(members.size());
    }
  }
  return out;
}

OffsetField random_field(int w, int h, std::uint64_t seed, int range, double invalid_share = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-range / 2, range / 2);
  std::bernoulli_distribution drop(invalid_share);
  OffsetField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.offset(x, y) = Offset{u(rng), u(rng)};
      f.set_valid(x, y, !drop(rng));
    }
  }
  return f;
}

TEST(Coherence, MatchesMedianOracle) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const OffsetField f = random_field(37, 29, s, s < 2 ? 10 : 200, 0.2);
    for (int window : {3, 9}) {
      const Plane got = filter_offset_field(f, window, 2);
      const Plane want = coherence_oracle(f, window, 2);
      for (std::size_t i = 0; i < got.size(); ++i) ASSERT_DOUBLE_EQ(got[i], want[i]) << s << " " << window << " " << i;
    }
  }
}

TEST(Coherence, ConstantFieldIsOne) {
  OffsetField f(30, 20);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) {
      f.offset(x, y) = Offset{12, -5};
      f.set_valid(x, y, true);
    }
  }
  const Plane coherence = filter_offset_field(f, 9, 2);
  for (double v : coherence.values()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Coherence, RandomFieldIsIncoherent) {
  const OffsetField f = random_field(100, 100, 3, 200);
  EXPECT_LT(filter_offset_field(f, 9, 2).mean(), 0.1);
}

TEST(Coherence, TwoHalvesOnlyDropNearBoundary) {
  OffsetField f(40, 20);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 40; ++x) {
      f.offset(x, y) = x < 20 ? Offset{30, 0} : Offset{-30, 4};
      f.set_valid(x, y, true);
    }
  }
  const Plane c = filter_offset_field(f, 9, 2);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (x < 16 || x >= 24) { EXPECT_DOUBLE_EQ(c(x, y), 1.0) << x; }
    }
  }
  EXPECT_LT(c(19, 10), 1.0);
}

RgbImage camera_image(int n, std::uint64_t seed) {
  return shoot(make_camera(n, n, 0, seed), make_scene(n, n, seed + 1), seed + 2);
}

CopyMoveParams identity_only() {
  CopyMoveParams p;
  p.transforms = {TransformSpec{}};
  return p;
}

TEST(CopyRegions, FlatImageIsEmpty) {
  const RgbImage flat(96, 96, 128.0);
  EXPECT_TRUE(detect_copymove(flat, identity_only()).pairs.empty());
}

TEST(CopyRegions, RigidCopyGivesOnePair) {
  const RgbImage host = camera_image(256, 20);
  ForgerySpec spec;
  spec.source = Rect{30, 40, 64, 64};
  spec.target_x = 150;
  spec.target_y = 140;
  const Forgery f = forge(host, nullptr, spec, 1);
  const CopyMoveResult r = detect_copymove(f.image, identity_only());
  ASSERT_EQ(r.pairs.size(), 1u);
  const CopyRegionPair& p = r.pairs[0];
  EXPECT_EQ(p.mirror_offset, (Offset{-p.offset.dx, -p.offset.dy}));
  TamperMask source(256, 256, MaskSource::kCopyMove);
  for (int y = 40; y < 104; ++y) {
    for (int x = 30; x < 94; ++x) source.set(x, y, true);
  }
  auto sym = [](const TamperMask& a, const TamperMask& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a.at(i) != b.at(i);
    return static_cast<double>(n);
  };
  const double limit = 0.2 * static_cast<double>(f.truth.count());
  const bool a_is_target = sym(p.region_a, f.truth) < sym(p.region_b, f.truth);
  EXPECT_LE(sym(a_is_target ? p.region_a : p.region_b, f.truth), limit);
  EXPECT_LE(sym(a_is_target ? p.region_b : p.region_a, source), limit);
  for (std::size_t i = 0; i < p.region_a.size(); ++i) EXPECT_FALSE(p.region_a.at(i) && p.region_b.at(i));
}

TEST(CopyRegions, ClosePasteIsSuppressed) {
  const RgbImage host = camera_image(160, 30);
  ForgerySpec spec;
  spec.source = Rect{40, 40, 64, 64};
  spec.target_x = 44;
  spec.target_y = 40;
  const Forgery f = forge(host, nullptr, spec, 1);
  EXPECT_TRUE(detect_copymove(f.image, identity_only()).pairs.empty());
}

CopyRegionPair square_pair(int w, int h) {
  CopyRegionPair p;
  p.region_a = TamperMask(w, h, MaskSource::kCopyMove);
  p.region_b = TamperMask(w, h, MaskSource::kCopyMove);
  for (int y = 10; y < 90; ++y) {
    for (int x = 10; x < 90; ++x) {
      p.region_a.set(x, y, true);
      p.region_b.set(x + 100, y, true);
    }
  }
  return p;
}

TEST(Disambiguation, Rules) {
  const CopyRegionPair pair = square_pair(200, 100);
  CorrelationField field{Plane(200, 100, 0.6), std::vector<std::uint8_t>(200 * 100, 0), 129, 500.0};
  for (int y = 0; y < 100; ++y) {
    for (int x = 100; x < 200; ++x) field.rho(x, y) = 0.05;
  }
  EXPECT_EQ(disambiguate_source(pair, nullptr).role, CopyRole::kUnknown);
  EXPECT_EQ(disambiguate_source(pair, &field).role, CopyRole::kASource);
  field.pce = 100.0;
  EXPECT_EQ(disambiguate_source(pair, &field).role, CopyRole::kUnknown);
  field.pce = 500.0;
  DisambiguationParams big;
  big.min_region_area = 10000;
  EXPECT_EQ(disambiguate_source(pair, &field, big).role, CopyRole::kUnknown);
}

TEST(Disambiguation, OverwrittenSensorPatternIsTarget) {
  const int n = 256;
  const SyntheticCamera cam = make_camera(n, n, 0, 40);
  std::vector<RgbImage> imgs;
  std::vector<NoiseResidual> res;
  for (std::uint64_t s = 0; s < 8; ++s) {
    imgs.push_back(shoot(cam, make_scene(n, n, 600 + s), 700 + s));
    res.push_back(noise_residual(imgs.back()));
  }
  const Fingerprint fp = estimate_fingerprint(imgs, res);
  int correct = 0;
  const int trials = 6;
  for (int t = 0; t < trials; ++t) {
    const auto seed = static_cast<std::uint64_t>(t);
    const RgbImage host = shoot(cam, make_scene(n, n, 800 + seed), 900 + seed);
    ForgerySpec spec;
    spec.source = Rect{16 + 4 * t, 20, 90, 90};
    spec.target_x = 140;
    spec.target_y = 130 - 4 * t;
    const Forgery f = forge(host, nullptr, spec, seed);
    const NoiseResidual r = noise_residual(f.image);
    const Association a = associate_image(f.image, r, std::span(&fp, 1));
    const CorrelationField field = correlation_field(f.image, r, fp, 129, a.pce);
    CopyRegionPair pair;
    pair.region_b = f.truth;
    pair.region_a = TamperMask(n, n, MaskSource::kCopyMove);
    for (int y = 0; y < 90; ++y) {
      for (int x = 0; x < 90; ++x) pair.region_a.set(spec.source.x + x, spec.source.y + y, true);
    }
    correct += disambiguate_source(pair, &field).role == CopyRole::kASource;
  }
  EXPECT_GE(correct, trials - 1);
}

TEST(CopyMoveMask, RoleSelectsRegions) {
  EXPECT_TRUE(copymove_mask({}, 50, 40).none());
  CopyRegionPair p = square_pair(200, 100);
  const TamperMask both = copymove_mask({p}, 200, 100);
  EXPECT_EQ(both.count(), p.region_a.count() + p.region_b.count());
  EXPECT_EQ(both.source(), MaskSource::kCopyMove);
  p.role = CopyRole::kASource;
  EXPECT_TRUE(copymove_mask({p}, 200, 100).same_bits(p.region_b));
  p.role = CopyRole::kBSource;
  EXPECT_TRUE(copymove_mask({p}, 200, 100).same_bits(p.region_a));
}

}  // namespace
}  // namespace tamperloc
