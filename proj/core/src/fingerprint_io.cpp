#include <cmath>
#include <cstring>
#include <fstream>

#include "tamperloc/binary_io.hpp"
#include "tamperloc/errors.hpp"
#include "tamperloc/prnu.hpp"

namespace tamperloc {

namespace {
constexpr char kMagic[8] = {'P', 'R', 'N', 'U', 'F', 'P', '1', '\0'};
constexpr std::uint32_t kMaxSide = 1u << 16;
}  // namespace

void write_fingerprint(const std::filesystem::path& path, const Fingerprint& fp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  binary::put_u32(out, static_cast<std::uint32_t>(fp.width()));
  binary::put_u32(out, static_cast<std::uint32_t>(fp.height()));
  binary::put_u32(out, static_cast<std::uint32_t>(fp.members));
  for (double v : fp.numerator.values()) binary::put_f32(out, static_cast<float>(v));
  for (double v : fp.denominator.values()) binary::put_f32(out, static_cast<float>(v));
  if (!out) throw IoError(path.string(), "write failed");
}

Fingerprint read_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");
  char magic[8] = {};
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string(), "not a fingerprint file (bad magic)");
  }
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  std::uint32_t members = 0;
  if (!binary::get_u32(in, w) || !binary::get_u32(in, h) || !binary::get_u32(in, members)) {
    throw IoError(path.string(), "truncated fingerprint header");
  }
  if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide) {
    throw IoError(path.string(), "implausible fingerprint dimensions");
  }
  Fingerprint fp{Plane(static_cast<int>(w), static_cast<int>(h)),
                 Plane(static_cast<int>(w), static_cast<int>(h)), static_cast<int>(members), 0};
  for (Plane* plane : {&fp.numerator, &fp.denominator}) {
    for (double& v : plane->values()) {
      float f = 0.0f;
      if (!binary::get_f32(in, f)) throw IoError(path.string(), "truncated fingerprint data");
      if (!std::isfinite(f)) throw IoError(path.string(), "non-finite fingerprint sample");
      v = f;
    }
  }
  return fp;
}

}  // namespace tamperloc
