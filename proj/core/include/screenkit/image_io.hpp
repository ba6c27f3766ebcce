#pragma once

#include <string>

#include "screenkit/image.hpp"

namespace screenkit {

// Decodes PNG or binary PGM/PPM (P5/P6, maxval 255). PNG input is normalized
// to 8 bits; alpha is dropped and palettes are expanded, so the result has
// 1 or 3 channels. Throws FormatError on undecodable input.
RawImage read_image(const std::string& path);

// Writes an 8-bit single-channel PNG. Output bytes depend only on pixels.
void write_png(const std::string& path, const GrayImage& image);
void write_png(const std::string& path, const RawImage& image);

void write_pnm(const std::string& path, const RawImage& image);

}  // namespace screenkit
