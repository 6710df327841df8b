#pragma once

#include <array>
#include <cstdint>

#include "boxenergy/core_types.hpp"

namespace boxenergy {

using Rgb8 = std::array<std::uint8_t, 3>;
/// (L*, a*, b*)
using Lab = std::array<double, 3>;

using RgbImage = Grid2D<Rgb8>;
using LabImage = Grid2D<Lab>;

/// sRGB (D65, 2 degree observer) to CIELAB for a single pixel.
Lab srgb_to_lab(const Rgb8& rgb);
LabImage srgb_to_lab(const RgbImage& img);

double lab_distance(const Lab& a, const Lab& b);

/// exp(-||c_p - c_q|| / theta), the color affinity of two pixels.
double color_similarity(const Lab& a, const Lab& b, double theta);
double color_similarity(const LabImage& lab, std::size_t p, std::size_t q, double theta);

/// Mean-pools stride x stride blocks; partial blocks at the right/bottom edges average what they cover.
LabImage downsample_lab(const LabImage& lab, int stride);

}  // namespace boxenergy
