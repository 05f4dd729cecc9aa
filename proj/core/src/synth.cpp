#include "tamperloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "tamperloc/errors.hpp"
#include "tamperloc/geometry.hpp"
#include "tamperloc/image_io.hpp"

namespace tamperloc {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// One octave of lattice value noise in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(int width, int height, int cell, std::mt19937_64& rng) : cell_(cell) {
    gw_ = width / cell + 2;
    gh_ = height / cell + 2;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    lattice_.resize(static_cast<std::size_t>(gw_) * static_cast<std::size_t>(gh_));
    for (double& v : lattice_) v = u(rng);
  }

  double operator()(int x, int y) const {
    const double fx = static_cast<double>(x) / cell_;
    const double fy = static_cast<double>(y) / cell_;
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const double tx = smoothstep(fx - ix);
    const double ty = smoothstep(fy - iy);
    const double a = at(ix, iy) + tx * (at(ix + 1, iy) - at(ix, iy));
    const double b = at(ix, iy + 1) + tx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
    return a + ty * (b - a);
  }

 private:
  double at(int x, int y) const {
    return lattice_[static_cast<std::size_t>(y) * static_cast<std::size_t>(gw_) + static_cast<std::size_t>(x)];
  }
  int cell_;
  int gw_ = 0;
  int gh_ = 0;
  std::vector<double> lattice_;
};

void check_inside(const Rect& r, int w, int h, const char* what) {
  if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 || r.x + r.width > w || r.y + r.height > h) {
    throw std::invalid_argument(std::string("forge: ") + what + " rectangle outside the image");
  }
}

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height && b.y < a.y + a.height;
}

RgbImage rounded(RgbImage img) {
  for (int c = 0; c < 3; ++c) {
    for (double& v : img.channel(c).values()) v = std::round(v);
  }
  return img;
}

// Pastes `src` (possibly rotated/scaled) into `dst` and marks the truth.
void paste_transformed(const RgbImage& src, const ForgerySpec& spec, RgbImage& dst, TamperMask& truth) {
  const Rect box = target_box(spec);
  check_inside(box, dst.width(), dst.height(), "target");
  const Rect& s = spec.source;
  const PlacedSimilarity t(spec.rotation_deg, spec.scale,
                           {s.x + (s.width - 1) / 2.0, s.y + (s.height - 1) / 2.0},
                           {box.x + (box.width - 1) / 2.0, box.y + (box.height - 1) / 2.0});
  constexpr double kEps = 1e-9;
  for (int y = box.y; y < box.y + box.height; ++y) {
    for (int x = box.x; x < box.x + box.width; ++x) {
      const Point2 p = t.inverse({static_cast<double>(x), static_cast<double>(y)});
      if (p.x < s.x - kEps || p.y < s.y - kEps || p.x > s.x + s.width - 1 + kEps ||
          p.y > s.y + s.height - 1 + kEps) {
        continue;
      }
      for (int c = 0; c < 3; ++c) dst.channel(c)(x, y) = sample_bilinear(src.channel(c), p.x, p.y);
      truth.set(x, y, true);
    }
  }
}

}  // namespace

std::string_view to_string(ForgeryKind kind) {
  switch (kind) {
    case ForgeryKind::kCopyMove: return "copy_move";
    case ForgeryKind::kSplice: return "splice";
    case ForgeryKind::kInpaintLike: return "inpaint_like";
  }
  return "unknown";
}

SyntheticCamera make_camera(int width, int height, int id, std::uint64_t seed, double sigma_k,
                            double noise_std) {
  if (!(sigma_k > 0.0) || sigma_k > 0.1) throw std::invalid_argument("make_camera: sigma_k must be in (0, 0.1]");
  if (noise_std < 0.0) throw std::invalid_argument("make_camera: noise_std must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma_k);
  Plane k(width, height);
  for (double& v : k.values()) v = n(rng);
  const double m = k.mean();
  for (double& v : k.values()) v -= m;
  return SyntheticCamera{std::move(k), noise_std, id};
}

RgbImage make_scene(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  struct Octave {
    int cell;
    double amp;
  };
  constexpr Octave kOctaves[] = {{64, 42.0}, {32, 26.0}, {16, 16.0}, {8, 11.0}, {4, 8.0}, {2, 5.0}};
  std::vector<ValueNoise> luma_noise;
  for (const auto& o : kOctaves) luma_noise.emplace_back(width, height, o.cell, rng);
  std::vector<ValueNoise> tint;
  for (int c = 0; c < 3; ++c) tint.emplace_back(width, height, 48, rng);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::array<double, 3> gain{};
  for (double& g : gain) g = 0.8 + 0.4 * u01(rng);

  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double l = 128.0;
      for (std::size_t o = 0; o < luma_noise.size(); ++o) l += kOctaves[o].amp * luma_noise[o](x, y);
      for (int c = 0; c < 3; ++c) {
        out.channel(c)(x, y) = gain[static_cast<std::size_t>(c)] * (l - 128.0) + 128.0 +
                               18.0 * tint[static_cast<std::size_t>(c)](x, y);
      }
    }
  }

  // A few textured shapes with sharp borders.
  const ValueNoise fine(width, height, 3, rng);
  std::uniform_int_distribution<int> nshapes(3, 7);
  const int shapes = nshapes(rng);
  for (int s = 0; s < shapes; ++s) {
    const double cx = u01(rng) * width;
    const double cy = u01(rng) * height;
    const double rad = (0.05 + 0.12 * u01(rng)) * std::min(width, height);
    const bool disc = u01(rng) < 0.5;
    std::array<double, 3> colour{};
    for (double& v : colour) v = 40.0 + 180.0 * u01(rng);
    for (int y = std::max(0, static_cast<int>(cy - rad)); y < std::min(height, static_cast<int>(cy + rad) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(cx - rad)); x < std::min(width, static_cast<int>(cx + rad) + 1); ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        if (disc && dx * dx + dy * dy > rad * rad) continue;
        const double tex = 14.0 * fine(x, y);
        for (int c = 0; c < 3; ++c) out.channel(c)(x, y) = colour[static_cast<std::size_t>(c)] + tex;
      }
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (double& v : out.channel(c).values()) v = std::clamp(v, 0.0, 255.0);
  }
  return out;
}

RgbImage shoot_unclamped(const SyntheticCamera& camera, const RgbImage& scene, std::uint64_t seed) {
  if (camera.k.width() != scene.width() || camera.k.height() != scene.height()) {
    throw std::invalid_argument("shoot: camera and scene dimensions differ");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> theta(0.0, 1.0);
  RgbImage out = scene;
  for (int c = 0; c < 3; ++c) {
    auto dst = out.channel(c).values();
    const auto x = scene.channel(c).values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double noise = camera.noise_std > 0.0 ? camera.noise_std * theta(rng) : 0.0;
      dst[i] = (1.0 + camera.k[i]) * x[i] + noise;
    }
  }
  return out;
}

RgbImage shoot(const SyntheticCamera& camera, const RgbImage& scene, std::uint64_t seed) {
  RgbImage out = shoot_unclamped(camera, scene, seed);
  for (int c = 0; c < 3; ++c) {
    for (double& v : out.channel(c).values()) v = std::clamp(v, 0.0, 255.0);
  }
  return out;
}

Rect target_box(const ForgerySpec& spec) {
  int w = 0;
  int h = 0;
  transformed_extent(spec.source.width, spec.source.height, spec.rotation_deg, spec.scale, w, h);
  return Rect{spec.target_x, spec.target_y, w, h};
}

Forgery forge(const RgbImage& image, const RgbImage* donor, const ForgerySpec& spec, std::uint64_t seed) {
  Forgery out{image, TamperMask(image.width(), image.height(), MaskSource::kFused)};
  switch (spec.kind) {
    case ForgeryKind::kCopyMove: {
      check_inside(spec.source, image.width(), image.height(), "source");
      paste_transformed(image, spec, out.image, out.truth);
      break;
    }
    case ForgeryKind::kSplice: {
      if (donor == nullptr) throw std::invalid_argument("forge: splice requires a donor image");
      check_inside(spec.source, donor->width(), donor->height(), "source");
      paste_transformed(*donor, spec, out.image, out.truth);
      break;
    }
    case ForgeryKind::kInpaintLike: {
      const Rect& t = spec.target_area;
      check_inside(t, image.width(), image.height(), "target");
      if (spec.tile < 2) throw std::invalid_argument("forge: inpaint tile must be >= 2");
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> ux(0, image.width() - spec.tile);
      std::uniform_int_distribution<int> uy(0, image.height() - spec.tile);
      for (int ty = t.y; ty < t.y + t.height; ty += spec.tile) {
        for (int tx = t.x; tx < t.x + t.width; tx += spec.tile) {
          const int tw = std::min(spec.tile, t.x + t.width - tx);
          const int th = std::min(spec.tile, t.y + t.height - ty);
          Rect src{};
          bool found = false;
          for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
            src = Rect{ux(rng), uy(rng), tw, th};
            found = !overlaps(src, t);
          }
          if (!found) throw std::invalid_argument("forge: no room for inpaint source tiles");
          for (int y = 0; y < th; ++y) {
            for (int x = 0; x < tw; ++x) {
              for (int c = 0; c < 3; ++c) {
                out.image.channel(c)(tx + x, ty + y) = image.channel(c)(src.x + x, src.y + y);
              }
              out.truth.set(tx + x, ty + y, true);
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

std::vector<CorpusImage> make_corpus(const CorpusParams& params) {
  if (params.count < 1 || params.cameras < 1) throw std::invalid_argument("corpus: count and cameras must be >= 1");
  if (params.size < 192) throw std::invalid_argument("corpus: image size must be >= 192");
  const int n = params.size;
  std::vector<SyntheticCamera> cams;
  for (int c = 0; c < params.cameras; ++c) {
    cams.push_back(make_camera(n, n, c, params.seed * 1000003ULL + static_cast<std::uint64_t>(c), params.sigma_k,
                               params.noise_std));
  }
  std::mt19937_64 rng(params.seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<CorpusImage> out;
  for (int i = 0; i < params.count; ++i) {
    const int cam = i % params.cameras;
    const auto kind = static_cast<ForgeryKind>((i / params.cameras) % 3);
    const std::uint64_t base = params.seed * 7919ULL + static_cast<std::uint64_t>(i) * 31ULL;
    const RgbImage host = rounded(shoot(cams[static_cast<std::size_t>(cam)], make_scene(n, n, base + 1), base + 2));

    ForgerySpec spec;
    spec.kind = kind;
    std::optional<RgbImage> donor;
    if (kind == ForgeryKind::kCopyMove) {
      const int side = uniform_int(n / 5, n / 4);
      const double r = u01(rng);
      spec.rotation_deg = r < 0.15 ? 90.0 : 0.0;
      spec.scale = (r >= 0.15 && r < 0.3) ? 1.25 : 1.0;
      // Source and target sit in opposite halves so they never overlap.
      spec.source = Rect{0, 0, side, side};
      const Rect box = target_box(spec);
      const bool horizontal = u01(rng) < 0.5;
      const bool source_first = u01(rng) < 0.5;
      const int span = n / 2;
      auto place = [&](int len, bool second_half) {
        return second_half ? uniform_int(span + 4, n - len - 4) : uniform_int(4, span - len - 4);
      };
      if (horizontal) {
        spec.source.x = place(side, !source_first);
        spec.source.y = uniform_int(4, n - side - 4);
        spec.target_x = place(box.width, source_first);
        spec.target_y = uniform_int(4, n - box.height - 4);
      } else {
        spec.source.x = uniform_int(4, n - side - 4);
        spec.source.y = place(side, !source_first);
        spec.target_x = uniform_int(4, n - box.width - 4);
        spec.target_y = place(box.height, source_first);
      }
    } else if (kind == ForgeryKind::kSplice) {
      const int dcam = (cam + 1) % params.cameras;
      donor = rounded(shoot(cams[static_cast<std::size_t>(dcam)], make_scene(n, n, base + 3), base + 4));
      spec.scale = 1.2 + 0.3 * u01(rng);
      const int side = uniform_int(n / 4, n / 3);
      spec.source = Rect{uniform_int(0, n - side), uniform_int(0, n - side), side, side};
      const Rect box = target_box(spec);
      spec.target_x = uniform_int(8, n - box.width - 8);
      spec.target_y = uniform_int(8, n - box.height - 8);
    } else {
      const int side = 2 * 48;
      spec.tile = 48;
      spec.target_area = Rect{uniform_int(8, n - side - 8), uniform_int(8, n - side - 8), side, side};
    }
    Forgery f = forge(host, donor ? &*donor : nullptr, spec, base + 5);
    CorpusImage entry;
    char id[32];
    std::snprintf(id, sizeof(id), "img%03d", i);
    entry.image_id = id;
    entry.image = rounded(std::move(f.image));
    entry.truth = std::move(f.truth);
    entry.camera = cam;
    entry.kind = kind;
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<CorpusEntry> write_corpus(const std::filesystem::path& dir, const CorpusParams& params) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "truth");
  const auto corpus = make_corpus(params);
  std::vector<CorpusEntry> entries;
  std::ofstream manifest(dir / "manifest.csv");
  std::ofstream cameras(dir / "cameras.csv");
  if (!manifest || !cameras) throw IoError(dir.string(), "cannot create corpus manifests");
  manifest << "image,truth\n";
  cameras << "image_id,camera,kind\n";
  for (const auto& c : corpus) {
    CorpusEntry e{c.image_id, dir / "images" / (c.image_id + ".png"), dir / "truth" / (c.image_id + ".png"),
                  c.camera, c.kind};
    write_png(e.image, c.image);
    write_mask(e.truth, c.truth);
    manifest << "images/" << c.image_id << ".png,truth/" << c.image_id << ".png\n";
    cameras << c.image_id << ',' << c.camera << ',' << to_string(c.kind) << '\n';
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace tamperloc
