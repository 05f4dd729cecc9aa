#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tamperloc/mask.hpp"
#include "tamperloc/plane.hpp"

namespace tamperloc {

/// Camera model y = (1 + k) x + theta with a fixed PRNU pattern k.
struct SyntheticCamera {
  Plane k;
  double noise_std = 2.0;
  int id = 0;
};

/// Zero-mean white Gaussian PRNU with standard deviation `sigma_k`.
SyntheticCamera make_camera(int width, int height, int id, std::uint64_t seed, double sigma_k = 0.02,
                            double noise_std = 2.0);

/// Procedural RGB scene: multi-octave value noise with a few textured
/// rectangles and discs, samples in [0, 255].
RgbImage make_scene(int width, int height, std::uint64_t seed);

/// y = clamp((1 + k) x + theta, 0, 255) per channel, theta ~ N(0, noise_std).
RgbImage shoot(const SyntheticCamera& camera, const RgbImage& scene, std::uint64_t seed);
/// Same as above without clamping, for checking the imaging model itself.
RgbImage shoot_unclamped(const SyntheticCamera& camera, const RgbImage& scene, std::uint64_t seed);

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  long long area() const { return static_cast<long long>(width) * height; }
};

enum class ForgeryKind { kCopyMove, kSplice, kInpaintLike };
std::string_view to_string(ForgeryKind kind);

struct ForgerySpec {
  ForgeryKind kind = ForgeryKind::kCopyMove;
  Rect source;             ///< region copied (from the donor for splices)
  int target_x = 0;        ///< top-left of the transformed region's bounding box
  int target_y = 0;
  double rotation_deg = 0.0;
  double scale = 1.0;
  Rect target_area;        ///< inpaint-like only: region overwritten by tiles
  int tile = 48;           ///< inpaint-like tile side
};

struct Forgery {
  RgbImage image;
  TamperMask truth;        ///< pixels whose content was replaced
};

/// Applies a forgery. Pasted content is copied verbatim (it keeps whatever
/// sensor pattern it had at its origin). Throws std::invalid_argument when the
/// geometry leaves the image or a splice has no donor.
Forgery forge(const RgbImage& image, const RgbImage* donor, const ForgerySpec& spec,
              std::uint64_t seed);

/// Bounding box of the pasted region for copy-move and splice specs.
Rect target_box(const ForgerySpec& spec);

struct CorpusParams {
  int count = 60;
  int cameras = 4;
  int size = 384;
  std::uint64_t seed = 7;
  double sigma_k = 0.02;
  double noise_std = 2.0;
};

struct CorpusEntry {
  std::string image_id;
  std::filesystem::path image;
  std::filesystem::path truth;
  int camera = -1;
  ForgeryKind kind = ForgeryKind::kCopyMove;
};

/// Writes a mixed forged corpus (PNG images + truth masks), `manifest.csv`
/// (image,truth) and `cameras.csv` (image_id,camera,kind).
std::vector<CorpusEntry> write_corpus(const std::filesystem::path& dir, const CorpusParams& params);

/// In-memory variant used by the tests; entries keep their images.
struct CorpusImage {
  std::string image_id;
  RgbImage image;
  TamperMask truth;
  int camera = -1;
  ForgeryKind kind = ForgeryKind::kCopyMove;
};
std::vector<CorpusImage> make_corpus(const CorpusParams& params);

}  // namespace tamperloc
