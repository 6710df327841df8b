#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"
#include "boxenergy/dataset_io.hpp"

namespace boxenergy::synthetic {

enum class Shape { Rectangle, Ellipse, LShape };
enum class Fill { Solid, Gradient };

const char* to_string(Shape s);

struct SceneSpec {
  int height = 64;
  int width = 64;
  Shape shape = Shape::Ellipse;
  Fill fill = Fill::Solid;
  /// Adds low-amplitude sinusoidal texture to object and background.
  bool textured = false;
  /// Gaussian pixel noise in 8-bit units.
  double noise_sigma = 4.0;
  std::uint64_t seed = 0;
};

struct Scene {
  SceneSpec spec;
  RgbImage image;
  BitGrid gt;
  BoundingBox box;  // tightest box of gt
};

Scene generate(const SceneSpec& spec);

/// The 50-scene mix: rectangles, ellipses and L-shapes, alternating solid and gradient fills.
std::vector<SceneSpec> standard_suite(std::uint64_t seed, int count = 50);
/// Textured variants of the same shapes.
std::vector<SceneSpec> textured_suite(std::uint64_t seed, int count);

/// Writes scenes as PNGs plus a COCO-instances file with RLE gt; several objects per image when
/// `objects_per_image` > 1 (placed left to right without overlap).
void write_dataset(const std::filesystem::path& dir, std::uint64_t seed, int images,
                   int objects_per_image);

}  // namespace boxenergy::synthetic
