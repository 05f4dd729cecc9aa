#pragma once

#include <filesystem>

#include "tamperloc/mask.hpp"
#include "tamperloc/plane.hpp"

namespace tamperloc {

/// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a binary
/// PGM/PPM (P5/P6, maxval <= 255). Gray inputs are replicated to three
/// channels. Throws IoError on failure.
RgbImage read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; samples are rounded and clamped to [0, 255].
void write_png(const std::filesystem::path& path, const RgbImage& image);
/// Writes an 8-bit single-channel PNG; samples rounded and clamped.
void write_png(const std::filesystem::path& path, const Plane& gray);

/// Writes a binary PGM (P5) or PPM (P6).
void write_pnm(const std::filesystem::path& path, const Plane& gray);
void write_pnm(const std::filesystem::path& path, const RgbImage& image);

/// Mask files are single-channel PNGs, 0 = genuine and 255 = tampered.
/// On read, any sample above 127 counts as tampered.
void write_mask(const std::filesystem::path& path, const TamperMask& mask);
TamperMask read_mask(const std::filesystem::path& path, MaskSource source = MaskSource::kFused);

/// Writes the mask then reads it back.
TamperMask mask_roundtrip(const TamperMask& mask, const std::filesystem::path& scratch);

}  // namespace tamperloc
