#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "tamperloc/image_io.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/synth.hpp"

namespace tamperloc {
namespace {

TEST(Camera, PatternStatistics) {
  const SyntheticCamera cam = make_camera(128, 128, 3, 1, 0.02);
  EXPECT_NEAR(cam.k.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(cam.k.variance()), 0.02, 0.001);
  EXPECT_EQ(cam.id, 3);
  EXPECT_THROW(make_camera(8, 8, 0, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(make_camera(8, 8, 0, 1, 0.2), std::invalid_argument);
}

TEST(Shoot, DegenerateCameraIsIdentity) {
  SyntheticCamera cam = make_camera(32, 32, 0, 1);
  for (double& v : cam.k.values()) v = 0.0;
  cam.noise_std = 0.0;
  const RgbImage scene = make_scene(32, 32, 5);
  EXPECT_EQ(shoot(cam, scene, 9), scene);
}

TEST(Shoot, ConstantSceneRecoversPattern) {
  SyntheticCamera cam = make_camera(32, 32, 0, 2);
  cam.noise_std = 0.0;
  const RgbImage y = shoot(cam, RgbImage(32, 32, 100.0), 1);
  for (std::size_t i = 0; i < cam.k.size(); ++i) {
    EXPECT_NEAR((y.channel(1)[i] - 100.0) / 100.0, cam.k[i], 1e-12);
  }
}

TEST(Shoot, ImagingModelHoldsBeforeClamping) {
  SyntheticCamera cam = make_camera(24, 24, 0, 3);
  cam.noise_std = 0.0;
  const RgbImage scene = make_scene(24, 24, 4);
  const RgbImage y = shoot_unclamped(cam, scene, 5);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < cam.k.size(); ++i) {
      const double x = scene.channel(c)[i];
      if (x > 0) { EXPECT_NEAR((y.channel(c)[i] - x) / x, cam.k[i], 1e-12); }
    }
  }
}

TEST(Shoot, NoiseMomentsMatchModel) {
  const double sigma_k = 0.02, noise = 2.0, x = 120.0;
  // Pool y - x over fresh cameras and seeds; k varies across cameras.
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const SyntheticCamera cam = make_camera(64, 64, 0, 100 + s, sigma_k, noise);
    const RgbImage y = shoot_unclamped(cam, RgbImage(64, 64, x), s);
    for (double v : y.channel(0).values()) {
      s2 += (v - x) * (v - x);
      ++n;
    }
  }
  const double want = std::sqrt(noise * noise + (sigma_k * x) * (sigma_k * x));
  EXPECT_NEAR(std::sqrt(s2 / static_cast<double>(n)), want, 0.05 * want);
}

TEST(Shoot, SeededDeterminism) {
  const SyntheticCamera cam = make_camera(40, 30, 0, 11);
  const RgbImage scene = make_scene(40, 30, 12);
  EXPECT_EQ(shoot(cam, scene, 13), shoot(cam, scene, 13));
  EXPECT_FALSE(shoot(cam, scene, 13) == shoot(cam, scene, 14));
  EXPECT_EQ(make_scene(40, 30, 12), scene);
}

TEST(Scene, SamplesInRange) {
  const RgbImage s = make_scene(100, 80, 3);
  for (int c = 0; c < 3; ++c) {
    EXPECT_GE(s.channel(c).min(), 0.0);
    EXPECT_LE(s.channel(c).max(), 255.0);
    EXPECT_GT(s.channel(c).variance(), 10.0);
  }
}

TEST(Forge, IdentityCopyIsVerbatim) {
  const RgbImage host = make_scene(128, 128, 1);
  ForgerySpec spec;
  spec.source = Rect{10, 12, 30, 20};
  spec.target_x = 70;
  spec.target_y = 80;
  const Forgery f = forge(host, nullptr, spec, 1);
  EXPECT_EQ(static_cast<long long>(f.truth.count()), spec.source.area());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 30; ++x) {
        EXPECT_EQ(f.image.channel(c)(70 + x, 80 + y), host.channel(c)(10 + x, 12 + y));
        EXPECT_TRUE(f.truth(70 + x, 80 + y));
      }
    }
  }
  EXPECT_EQ(f.image.channel(0)(0, 0), host.channel(0)(0, 0));
}

TEST(Forge, TruthAreaMatchesGeometry) {
  const RgbImage host = make_scene(160, 160, 2);
  ForgerySpec rot;
  rot.source = Rect{5, 5, 40, 24};
  rot.rotation_deg = 90.0;
  rot.target_x = 100;
  rot.target_y = 90;
  const Rect box = target_box(rot);
  EXPECT_EQ(box.width, 24);
  EXPECT_EQ(box.height, 40);
  EXPECT_EQ(static_cast<long long>(forge(host, nullptr, rot, 1).truth.count()), rot.source.area());

  ForgerySpec inpaint;
  inpaint.kind = ForgeryKind::kInpaintLike;
  inpaint.target_area = Rect{40, 50, 60, 50};
  inpaint.tile = 16;
  EXPECT_EQ(static_cast<long long>(forge(host, nullptr, inpaint, 3).truth.count()), inpaint.target_area.area());
}

TEST(Forge, RejectsBadGeometry) {
  const RgbImage host = make_scene(64, 64, 2);
  ForgerySpec spec;
  spec.source = Rect{40, 40, 30, 30};
  EXPECT_THROW(forge(host, nullptr, spec, 1), std::invalid_argument);
  spec.source = Rect{0, 0, 20, 20};
  spec.target_x = 50;
  EXPECT_THROW(forge(host, nullptr, spec, 1), std::invalid_argument);
  spec.kind = ForgeryKind::kSplice;
  spec.target_x = 10;
  EXPECT_THROW(forge(host, nullptr, spec, 1), std::invalid_argument);
}

TEST(Forge, SpliceDecorrelatesFromHostPattern) {
  const int n = 256;
  int wins = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SyntheticCamera host_cam = make_camera(n, n, 0, 10 + s);
    const SyntheticCamera donor_cam = make_camera(n, n, 1, 20 + s);
    const RgbImage host = shoot(host_cam, make_scene(n, n, 30 + s), 1);
    const RgbImage donor = shoot(donor_cam, make_scene(n, n, 40 + s), 2);
    ForgerySpec spec;
    spec.kind = ForgeryKind::kSplice;
    spec.source = Rect{20, 20, 100, 100};
    spec.target_x = 120;
    spec.target_y = 120;
    const Forgery f = forge(host, &donor, spec, s);
    const NoiseResidual r = noise_residual(f.image);
    Fingerprint fp{host_cam.k, Plane(n, n, 1.0), 1, 0};
    const CorrelationField field = correlation_field(f.image, r, fp, 33, 0.0);
    double in = 0.0, out = 0.0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t i = 0; i < field.rho.size(); ++i) {
      (f.truth.at(i) ? in : out) += field.rho[i];
      ++(f.truth.at(i) ? nin : nout);
    }
    wins += in / static_cast<double>(nin) < out / static_cast<double>(nout);
  }
  EXPECT_EQ(wins, 5);
}

TEST(Corpus, DeterministicAndMixed) {
  CorpusParams p;
  p.count = 6;
  p.cameras = 2;
  p.size = 192;
  const auto a = make_corpus(p);
  const auto b = make_corpus(p);
  ASSERT_EQ(a.size(), 6u);
  int kinds[3] = {0, 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_TRUE(a[i].truth.same_bits(b[i].truth));
    EXPECT_FALSE(a[i].truth.none());
    EXPECT_EQ(a[i].camera, static_cast<int>(i % 2));
    ++kinds[static_cast<int>(a[i].kind)];
  }
  EXPECT_EQ(kinds[0], 2);
  EXPECT_EQ(kinds[1], 2);
  EXPECT_EQ(kinds[2], 2);
}

TEST(Corpus, WritesFilesAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "tamperloc_corpus_test";
  std::filesystem::remove_all(dir);
  CorpusParams p;
  p.count = 3;
  p.cameras = 1;
  p.size = 192;
  const auto entries = write_corpus(dir, p);
  ASSERT_EQ(entries.size(), 3u);
  std::ifstream manifest(dir / "manifest.csv");
  std::string line;
  std::getline(manifest, line);
  EXPECT_EQ(line, "image,truth");
  std::getline(manifest, line);
  EXPECT_EQ(line, "images/img000.png,truth/img000.png");
  const auto corpus = make_corpus(p);
  EXPECT_EQ(read_image(entries[1].image), corpus[1].image);
  EXPECT_TRUE(read_mask(entries[1].truth).same_bits(corpus[1].truth));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tamperloc
