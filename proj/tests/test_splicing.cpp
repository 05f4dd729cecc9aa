#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <vector>

#include "tamperloc/errors.hpp"
#include "tamperloc/splicing.hpp"

namespace tamperloc {
namespace {

Plane noise_block(std::uint64_t seed, double lo = 0.0, double hi = 4.0, int size = kFeatureBlock) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Plane p(size, size);
  for (double& v : p.values()) v = u(rng);
  return p;
}

// Independent recount: collect quantized residual lines, count 4-tuples in a
// map keyed by the canonical (sign-merged) tuple, then place into the layout.
std::array<double, kFeatureDim> brute_force_histogram(const Plane& b) {
  auto q = [](double r) { return std::max(-2.0, std::min(2.0, std::round(r))); };
  std::vector<std::vector<int>> lines;
  for (int y = 0; y < b.height(); ++y) {
    std::vector<int> line;
    for (int x = 3; x < b.width(); ++x) {
      line.push_back(static_cast<int>(q(b(x, y) - 3 * b(x - 1, y) + 3 * b(x - 2, y) - b(x - 3, y))));
    }
    lines.push_back(line);
  }
  for (int x = 0; x < b.width(); ++x) {
    std::vector<int> line;
    for (int y = 3; y < b.height(); ++y) {
      line.push_back(static_cast<int>(q(b(x, y) - 3 * b(x, y - 1) + 3 * b(x, y - 2) - b(x, y - 3))));
    }
    lines.push_back(line);
  }
  std::map<std::array<int, 4>, long> counts;
  long total = 0;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i + 3 < line.size(); ++i) {
      std::array<int, 4> t{line[i], line[i + 1], line[i + 2], line[i + 3]};
      std::array<int, 4> neg{-t[0], -t[1], -t[2], -t[3]};
      ++counts[std::min(t, neg)];
      ++total;
    }
  }
  std::array<double, kFeatureDim> h{};
  for (const auto& [t, c] : counts) {
    const int idx = ((t[0] + 2) * 125) + ((t[1] + 2) * 25) + ((t[2] + 2) * 5) + (t[3] + 2);
    h[static_cast<std::size_t>(idx)] = static_cast<double>(c) / static_cast<double>(total);
  }
  return h;
}

TEST(SplicingFeatures, GramIndexLayout) {
  EXPECT_EQ(gram_index(-2, -2, -2, -2), 0);
  EXPECT_EQ(gram_index(2, 2, 2, 2), 624);
  EXPECT_EQ(gram_index(0, 0, 0, 0), 312);
  EXPECT_EQ(gram_index(-2, -1, 0, 1), 0 * 125 + 1 * 25 + 2 * 5 + 3);
  for (int a = -2; a <= 2; ++a) {
    for (int b = -2; b <= 2; ++b) {
      EXPECT_EQ(gram_index(a, b, 1, -1) + gram_index(-a, -b, -1, 1), 624);
    }
  }
}

TEST(SplicingFeatures, MatchesBruteForceCounterOnHundredBlocks) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Plane b = noise_block(seed, 0.0, 1.0 + static_cast<double>(seed % 7));
    const FeatureVector f = residual_features(b);
    const auto h = brute_force_histogram(b);
    for (int i = 0; i < kFeatureDim; ++i) {
      ASSERT_EQ(f.bins[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(i)]) << "seed " << seed << " bin " << i;
    }
  }
}

TEST(SplicingFeatures, HistogramIsNormalizedAndSignMerged) {
  const FeatureVector f = residual_features(noise_block(7));
  double sum = 0.0;
  for (int b = 0; b < kFeatureDim; ++b) {
    const double v = f.bins[static_cast<std::size_t>(b)];
    EXPECT_GE(v, 0.0);
    sum += v;
    if (b > kFeatureDim - 1 - b) { EXPECT_EQ(v, 0.0) << b; }
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_FALSE(f.zero_residual);
}

TEST(SplicingFeatures, LowDegreePolynomialsMapToZeroBin) {
  const int zero = gram_index(0, 0, 0, 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-0.05, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = 100 * (1 + coef(rng)), cx = coef(rng) * 10, cy = coef(rng) * 10;
    const double cxx = coef(rng) * 0.01, cxy = coef(rng) * 0.01, cyy = coef(rng) * 0.01;
    Plane p(kFeatureBlock, kFeatureBlock);
    for (int y = 0; y < kFeatureBlock; ++y) {
      for (int x = 0; x < kFeatureBlock; ++x) {
        p(x, y) = c0 + cx * x + cy * y + cxx * x * x + cxy * x * y + cyy * y * y;
      }
    }
    const FeatureVector f = residual_features(p);
    EXPECT_TRUE(f.zero_residual) << trial;
    EXPECT_DOUBLE_EQ(f.bins[static_cast<std::size_t>(zero)], 1.0) << trial;
  }
}

TEST(SplicingFeatures, InvariantToIntegerConstantAndLinearTrend) {
  const Plane base = noise_block(11);
  const FeatureVector f0 = residual_features(base);
  Plane shifted = base;
  for (int y = 0; y < kFeatureBlock; ++y) {
    for (int x = 0; x < kFeatureBlock; ++x) shifted(x, y) += 17.0 + 0.5 * x - 0.25 * y;
  }
  const FeatureVector f1 = residual_features(shifted);
  for (int b = 0; b < kFeatureDim; ++b) {
    EXPECT_EQ(f0.bins[static_cast<std::size_t>(b)], f1.bins[static_cast<std::size_t>(b)]) << b;
  }
}

TEST(SplicingFeatures, WrongBlockSizeThrows) {
  EXPECT_THROW(residual_features(Plane(127, 128)), std::invalid_argument);
  EXPECT_THROW(residual_features(Plane(128, 64)), std::invalid_argument);
}

TEST(BlockLabels, OriginsCoverEveryPixel) {
  EXPECT_EQ(block_origins(128, 128, 16), (std::vector<int>{0}));
  EXPECT_EQ(block_origins(160, 128, 16), (std::vector<int>{0, 16, 32}));
  EXPECT_EQ(block_origins(170, 128, 16), (std::vector<int>{0, 16, 32, 42}));
  EXPECT_TRUE(block_origins(100, 128, 16).empty());
}

TEST(BlockLabels, FractionRules) {
  TamperMask genuine(256, 256, MaskSource::kSplicing);
  for (const LabeledBlock& b : label_blocks(genuine, 128, 16)) EXPECT_EQ(b.label, BlockLabel::kPristine);

  TamperMask half(128, 128, MaskSource::kSplicing);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 64; ++x) half.set(x, y, true);
  }
  auto l = label_blocks(half, 128, 16);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].label, BlockLabel::kFake);
  EXPECT_DOUBLE_EQ(l[0].forged_fraction, 0.5);

  TamperMask full(128, 128, MaskSource::kSplicing, true);
  EXPECT_EQ(label_blocks(full, 128, 16)[0].label, BlockLabel::kSkip);

  // Forged fraction sweep against a direct count.
  for (int cols : {1, 25, 26, 102, 103, 127}) {
    TamperMask m(128, 128, MaskSource::kSplicing);
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < cols; ++x) m.set(x, y, true);
    }
    const double frac = cols / 128.0;
    const BlockLabel want = frac >= 0.2 && frac <= 0.8 ? BlockLabel::kFake : BlockLabel::kSkip;
    EXPECT_EQ(label_blocks(m, 128, 16)[0].label, want) << cols;
  }
}

// Two well separated clusters in a handful of feature dimensions.
void toy_data(std::uint64_t seed, int n, std::vector<FeatureVector>& f, std::vector<std::uint8_t>& y,
              double separation = 1.0, bool random_labels = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  std::bernoulli_distribution coin(0.5);
  f.clear();
  y.clear();
  for (int i = 0; i < n; ++i) {
    const bool fake = random_labels ? coin(rng) : (i % 2 == 1);
    FeatureVector v;
    for (int j = 0; j < 8; ++j) v.bins[static_cast<std::size_t>(j)] = g(rng);
    if (!random_labels) v.bins[0] += fake ? separation : -separation;
    f.push_back(v);
    y.push_back(fake ? 1 : 0);
  }
}

TEST(Classifier, TwoPointsSeparated) {
  std::vector<FeatureVector> f(2);
  f[0].bins[0] = 0.1;
  f[1].bins[0] = 0.9;
  const std::vector<std::uint8_t> y{0, 1};
  const LinearModel m = train_model(f, y);
  EXPECT_LT(m.distance(f[0]), 0.0);
  EXPECT_GT(m.distance(f[1]), 0.0);
}

TEST(Classifier, DeterministicPerSeed) {
  std::vector<FeatureVector> f;
  std::vector<std::uint8_t> y;
  toy_data(5, 60, f, y, 0.2);
  TrainParams p;
  p.seed = 42;
  const LinearModel a = train_model(f, y, p);
  const LinearModel b = train_model(f, y, p);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.margin_scale, b.margin_scale);
  p.seed = 43;
  const LinearModel c = train_model(f, y, p);
  EXPECT_NE(a.weights, c.weights);
}

TEST(Classifier, SeparableToyDataFullTrainingAccuracy) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<FeatureVector> f;
    std::vector<std::uint8_t> y;
    toy_data(seed, 80, f, y);
    TrainParams p;
    p.seed = seed;
    const LinearModel m = train_model(f, y, p);
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_EQ(m.distance(f[i]) > 0.0, y[i] != 0) << "seed " << seed << " sample " << i;
    }
  }
}

TEST(Classifier, ObjectiveNonIncreasingAfterEpochThree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<FeatureVector> f;
    std::vector<std::uint8_t> y;
    toy_data(100 + seed, 60, f, y, 0.3);
    TrainParams p;
    p.seed = seed;
    p.lambda = 0.05;
    double previous = 0.0;
    for (int e = 3; e <= 12; ++e) {
      p.epochs = e;
      const double obj = svm_objective(train_model(f, y, p), f, y, p.lambda);
      if (e > 3) { EXPECT_LE(obj, previous + 1e-12) << "seed " << seed << " epoch " << e; }
      previous = obj;
    }
  }
}

TEST(Classifier, RandomLabelsGiveChanceHeldOutAccuracy) {
  int correct = 0;
  int total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<FeatureVector> train;
    std::vector<std::uint8_t> ytrain;
    toy_data(1000 + seed, 100, train, ytrain, 0.0, true);
    if (std::all_of(ytrain.begin(), ytrain.end(), [&](auto v) { return v == ytrain[0]; })) continue;
    std::vector<FeatureVector> test;
    std::vector<std::uint8_t> ytest;
    toy_data(5000 + seed, 100, test, ytest, 0.0, true);
    TrainParams p;
    p.seed = seed;
    const LinearModel m = train_model(train, ytrain, p);
    for (std::size_t i = 0; i < test.size(); ++i) {
      correct += (m.distance(test[i]) > 0.0) == (ytest[i] != 0);
      ++total;
    }
  }
  const double acc = static_cast<double>(correct) / total;
  EXPECT_GE(acc, 0.4);
  EXPECT_LE(acc, 0.6);
}

TEST(Classifier, SignInvariantToPositiveRescale) {
  std::vector<FeatureVector> f;
  std::vector<std::uint8_t> y;
  toy_data(9, 40, f, y, 0.1);
  LinearModel m = train_model(f, y);
  LinearModel scaled = m;
  for (double& w : scaled.weights) w *= 3.5;
  scaled.bias *= 3.5;
  for (const FeatureVector& v : f) EXPECT_EQ(m.raw_score(v) > 0.0, scaled.raw_score(v) > 0.0);
}

TEST(Classifier, RejectsBadInput) {
  std::vector<FeatureVector> f(3);
  EXPECT_THROW(train_model(f, std::vector<std::uint8_t>{1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(train_model(f, std::vector<std::uint8_t>{0, 0, 0}), std::invalid_argument);
  TrainParams p;
  p.lambda = 0.0;
  EXPECT_THROW(train_model(f, std::vector<std::uint8_t>{0, 1, 0}, p), std::invalid_argument);
}

LinearModel random_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  LinearModel m;
  m.weights.resize(kFeatureDim);
  m.feature_mean.resize(kFeatureDim);
  m.feature_scale.resize(kFeatureDim);
  for (int j = 0; j < kFeatureDim; ++j) {
    m.weights[static_cast<std::size_t>(j)] = g(rng);
    m.feature_mean[static_cast<std::size_t>(j)] = 0.001 * g(rng);
    m.feature_scale[static_cast<std::size_t>(j)] = 0.5 + std::abs(g(rng));
  }
  m.bias = 0.3;
  m.margin_scale = 0.7;
  return m;
}

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  RgbImage img(w, h);
  for (int c = 0; c < 3; ++c) {
    for (double& v : img.channel(c).values()) v = std::round(u(rng));
  }
  return img;
}

TEST(Sdh, MatchesBruteForcePerBlock) {
  const RgbImage img = noise_image(200, 170, 4);
  const LinearModel m = random_model(8);
  const SdhMap map = sdh_map(img, m, 128, 16);
  const Plane luma = luminance(img);
  Plane expect(200, 170);
  std::vector<int> coverage(expect.size(), 0);
  std::vector<int> ys = block_origins(170, 128, 16);
  std::vector<int> xs = block_origins(200, 128, 16);
  for (int by : ys) {
    for (int bx : xs) {
      const double d = m.distance(residual_features(luma.crop(bx, by, 128, 128)));
      for (int y = by; y < by + 128; ++y) {
        for (int x = bx; x < bx + 128; ++x) {
          expect(x, y) += d;
          ++coverage[expect.index(x, y)];
        }
      }
    }
  }
  ASSERT_TRUE(map.plane.same_shape(expect));
  for (std::size_t i = 0; i < expect.size(); ++i) {
    ASSERT_NEAR(map.plane[i], expect[i], 1e-9) << i;
    ASSERT_EQ(map.coverage[i], coverage[i]) << i;
  }
}

TEST(Sdh, SingleBlockImageIsConstant) {
  const RgbImage img = noise_image(128, 128, 2);
  const LinearModel m = random_model(3);
  const SdhMap map = sdh_map(img, m);
  const double d = m.distance(residual_features(luminance(img)));
  for (std::size_t i = 0; i < map.plane.size(); ++i) {
    EXPECT_DOUBLE_EQ(map.plane[i], d);
    EXPECT_EQ(map.coverage[i], 1);
  }
}

TEST(Sdh, InteriorCoverageAndZeroWeights) {
  const RgbImage img = noise_image(384, 384, 6);
  LinearModel m = random_model(1);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  m.bias = -0.5;
  m.margin_scale = 2.0;
  const SdhMap map = sdh_map(img, m);
  EXPECT_EQ(map.coverage[map.plane.index(192, 192)], 64);
  for (std::size_t i = 0; i < map.plane.size(); ++i) {
    EXPECT_DOUBLE_EQ(map.plane[i], -1.0 * map.coverage[i]);
  }
  for (int y = 64; y < 384 - 64; ++y) {
    for (int x = 64; x < 384 - 64; ++x) EXPECT_GE(map.coverage[map.plane.index(x, y)], 1);
  }
}

TEST(Sdh, RejectsSmallImage) {
  EXPECT_THROW(sdh_map(noise_image(127, 200, 1), random_model(1)), std::invalid_argument);
}

SdhMap plateau_map(double background, double peak) {
  SdhMap map{Plane(120, 120, background), std::vector<int>(120 * 120, 1)};
  for (int y = 30; y < 80; ++y) {
    for (int x = 40; x < 100; ++x) map.plane(x, y) = peak;
  }
  return map;
}

TEST(SplicingMask, AllNegativeIsGenuine) {
  const SdhMap map = plateau_map(-3.0, -1.0);
  EXPECT_TRUE(splicing_mask(map).none());
}

TEST(SplicingMask, PlateauMarkedExactly) {
  const SdhMap map = plateau_map(0.1 * 8.0, 8.0);
  SplicingMaskParams p;
  p.morph_radius = 0;
  p.min_area = 0;
  const TamperMask m = splicing_mask(map, p);
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 120; ++x) EXPECT_EQ(m(x, y), y >= 30 && y < 80 && x >= 40 && x < 100);
  }
  EXPECT_EQ(m.source(), MaskSource::kSplicing);
  // Default cleaning only rounds the rectangle's corners.
  const TamperMask cleaned = splicing_mask(map);
  const int r = SplicingMaskParams{}.morph_radius;
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 120; ++x) {
      if (!m(x, y)) {
        EXPECT_FALSE(cleaned(x, y));
        continue;
      }
      const int cx = std::min(x - 40, 99 - x), cy = std::min(y - 30, 79 - y);
      if (cx >= r || cy >= r) { EXPECT_TRUE(cleaned(x, y)) << x << "," << y; }
    }
  }
}

TEST(SplicingMask, RejectsBadFraction) {
  SplicingMaskParams p;
  p.fraction = 1.0;
  EXPECT_THROW(splicing_mask(plateau_map(0, 1), p), std::invalid_argument);
}

TEST(ModelFile, RoundTripAndCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / "tamperloc_model_test";
  std::filesystem::create_directories(dir);
  const LinearModel m = random_model(12);
  write_model(dir / "m.bin", m);
  const LinearModel r = read_model(dir / "m.bin");
  EXPECT_EQ(r.weights, m.weights);
  EXPECT_EQ(r.bias, m.bias);
  EXPECT_EQ(r.feature_mean, m.feature_mean);
  EXPECT_EQ(r.feature_scale, m.feature_scale);
  EXPECT_EQ(r.margin_scale, m.margin_scale);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.bin"), 8u + 4u + 8u * (3 * 625 + 2));

  std::ofstream(dir / "bad.bin", std::ios::binary) << "NOTAMODEL";
  EXPECT_THROW(read_model(dir / "bad.bin"), DataError);
  std::filesystem::resize_file(dir / "m.bin", 100);
  EXPECT_THROW(read_model(dir / "m.bin"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(TrainingSet, BalancedClasses) {
  const RgbImage img = noise_image(256, 256, 21);
  TamperMask truth(256, 256, MaskSource::kSplicing);
  for (int y = 64; y < 192; ++y) {
    for (int x = 64; x < 192; ++x) truth.set(x, y, true);
  }
  TrainingSet set;
  add_training_blocks(set, img, truth, 16, 10, 1);
  const auto fakes = std::count(set.fake.begin(), set.fake.end(), 1);
  EXPECT_GT(fakes, 0);
  EXPECT_LE(fakes, 10);
  balance_training_set(set, 2);
  EXPECT_EQ(std::count(set.fake.begin(), set.fake.end(), 1) * 2, static_cast<long>(set.fake.size()));
}

}  // namespace
}  // namespace tamperloc
