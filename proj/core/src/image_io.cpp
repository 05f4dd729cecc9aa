#include "tamperloc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tamperloc/errors.hpp"

namespace tamperloc {

namespace {

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

struct PngReader {
  png_image image{};
  PngReader() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

RgbImage read_png(const std::filesystem::path& path) {
  PngReader reader;
  const std::string name = path.string();
  if (!png_image_begin_read_from_file(&reader.image, name.c_str())) {
    throw IoError(name, std::string("cannot read PNG: ") + reader.image.message);
  }
  const bool color = (reader.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (reader.image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  // Keep alpha in the decode and drop it ourselves so nothing is composited.
  if (color) {
    reader.image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  } else {
    reader.image.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
  }
  const int w = static_cast<int>(reader.image.width);
  const int h = static_cast<int>(reader.image.height);
  const int stride_px = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(reader.image.format));
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(reader.image));
  if (!png_image_finish_read(&reader.image, nullptr, buf.data(), 0, nullptr)) {
    throw IoError(name, std::string("PNG decode failed: ") + reader.image.message);
  }
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t base =
          (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) *
          static_cast<std::size_t>(stride_px);
      for (int c = 0; c < 3; ++c) {
        out.channel(c)(x, y) = color ? buf[base + static_cast<std::size_t>(c)] : buf[base];
      }
    }
  }
  return out;
}

void write_png_raw(const std::filesystem::path& path, int w, int h, bool color,
                   const std::vector<std::uint8_t>& buf) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::string name = path.string();
  if (!png_image_write_to_file(&image, name.c_str(), 0, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(name, "cannot write PNG: " + msg);
  }
}

int read_pnm_int(std::istream& in, const std::string& name) {
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int v = 0;
  if (!(in >> v)) throw IoError(name, "malformed PNM header");
  return v;
}

RgbImage read_pnm(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(name, "cannot open");
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw IoError(name, "unsupported image format (expected PNG, P5 or P6)");
  }
  const bool color = magic[1] == '6';
  const int w = read_pnm_int(in, name);
  const int h = read_pnm_int(in, name);
  const int maxval = read_pnm_int(in, name);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw IoError(name, "unsupported PNM dimensions or maxval");
  }
  in.get();  // single whitespace byte before the raster
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw IoError(name, "truncated PNM raster");
  const double scale = 255.0 / maxval;
  RgbImage out(w, h);
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * static_cast<std::size_t>(h); ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t v = color ? buf[i * 3 + static_cast<std::size_t>(c)] : buf[i];
      out.channel(c)[i] = maxval == 255 ? v : std::round(v * scale);
    }
  }
  return out;
}

void write_pnm_raw(const std::filesystem::path& path, int w, int h, bool color,
                   const std::vector<std::uint8_t>& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << (color ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<std::uint8_t> interleave(const RgbImage& image) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(image.width()) *
                                static_cast<std::size_t>(image.height()) * 3);
  for (std::size_t i = 0; i < buf.size() / 3; ++i) {
    for (int c = 0; c < 3; ++c) buf[i * 3 + static_cast<std::size_t>(c)] = to_byte(image.channel(c)[i]);
  }
  return buf;
}

std::vector<std::uint8_t> to_bytes(const Plane& gray) {
  std::vector<std::uint8_t> buf(gray.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(gray[i]);
  return buf;
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "no such file");
  if (has_png_signature(path)) return read_png(path);
  return read_pnm(path);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_png_raw(path, image.width(), image.height(), true, interleave(image));
}

void write_png(const std::filesystem::path& path, const Plane& gray) {
  write_png_raw(path, gray.width(), gray.height(), false, to_bytes(gray));
}

void write_pnm(const std::filesystem::path& path, const Plane& gray) {
  write_pnm_raw(path, gray.width(), gray.height(), false, to_bytes(gray));
}

void write_pnm(const std::filesystem::path& path, const RgbImage& image) {
  write_pnm_raw(path, image.width(), image.height(), true, interleave(image));
}

void write_mask(const std::filesystem::path& path, const TamperMask& mask) {
  std::vector<std::uint8_t> buf(mask.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.at(i) ? 255 : 0;
  write_png_raw(path, mask.width(), mask.height(), false, buf);
}

TamperMask read_mask(const std::filesystem::path& path, MaskSource source) {
  const RgbImage img = read_image(path);
  TamperMask mask(img.width(), img.height(), source);
  const Plane& g = img.channel(0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.set_at(i, g[i] > 127.0);
  return mask;
}

TamperMask mask_roundtrip(const TamperMask& mask, const std::filesystem::path& scratch) {
  write_mask(scratch, mask);
  return read_mask(scratch, mask.source());
}

}  // namespace tamperloc
