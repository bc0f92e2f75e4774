#pragma once

#include <filesystem>
#include <iosfwd>

#include "spda/image.hpp"

namespace spda {

/// Reads a PGM (P2 ascii or P5 binary, 8- or 16-bit) and returns the raw gray levels.
Image read_pgm(const std::filesystem::path& path);

/// Writes a PGM. Pixels are rounded and clamped to [0, maxval]; maxval > 255 selects 16-bit samples.
void write_pgm(const Image& img, const std::filesystem::path& path, unsigned maxval = 255,
               bool binary = true);

/// Lossless text grid: "rows cols\n" followed by whitespace separated decimals.
Image read_float_grid(const std::filesystem::path& path);
void write_float_grid(const Image& img, const std::filesystem::path& path);
Image parse_float_grid(std::istream& in, const std::string& source_name);
void format_float_grid(const Image& img, std::ostream& out);

/// Dispatches on the file's magic bytes ("P2"/"P5" or a numeric grid header).
Image read_image(const std::filesystem::path& path);

/// Dispatches on the extension: ".pgm" writes 8-bit (or 16-bit when any pixel exceeds 255),
/// anything else writes the float grid.
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace spda
