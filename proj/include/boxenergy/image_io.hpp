#pragma once

#include <filesystem>
#include <stdexcept>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"

namespace boxenergy {

class ImageIoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Decodes PNG or JPEG (sniffed from the file signature) into 8-bit sRGB.
RgbImage read_image(const std::filesystem::path& path);

/// 8-bit grayscale PNG; reads back any PNG as gray (RGB is averaged).
Grid2D<std::uint8_t> read_png_gray(const std::filesystem::path& path);
void write_png_gray(const Grid2D<std::uint8_t>& gray, const std::filesystem::path& path);
void write_png_rgb(const RgbImage& rgb, const std::filesystem::path& path);

}  // namespace boxenergy
