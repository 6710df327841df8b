#include "boxenergy/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "boxenergy/image_io.hpp"

namespace boxenergy::synthetic {
namespace {

using Color = std::array<double, 3>;

// Linear color ramp along a direction; constant when start == end.
struct Paint {
  Color start{};
  Color end{};
  double dir_x = 1.0;
  double dir_y = 0.0;
  double texture_amplitude = 0.0;
  double texture_period = 8.0;
  double texture_angle = 0.0;
  double texture_phase = 0.0;

  // (x, y) are normalized to [0, 1] over the painted region.
  Color at(double x, double y, double px, double py) const {
    const double t = std::clamp(x * dir_x + y * dir_y, 0.0, 1.0);
    Color c;
    for (int k = 0; k < 3; ++k) c[k] = start[k] + t * (end[k] - start[k]);
    if (texture_amplitude > 0.0) {
      const double u = px * std::cos(texture_angle) + py * std::sin(texture_angle);
      const double v = texture_amplitude *
                       std::sin(2.0 * std::numbers::pi * u / texture_period + texture_phase);
      for (double& ch : c) ch += v;
    }
    return c;
  }
};

struct ObjectPlan {
  Shape shape = Shape::Ellipse;
  BoundingBox box;
  Paint paint;
  // L-shape notch: which corner and its fractional size.
  int notch_corner = 0;
  double notch_w = 0.5;
  double notch_h = 0.5;
};

double contrast(const Color& a, const Color& b) {
  auto to8 = [](const Color& c) {
    return Rgb8{static_cast<std::uint8_t>(std::clamp(std::lround(c[0]), 0L, 255L)),
                static_cast<std::uint8_t>(std::clamp(std::lround(c[1]), 0L, 255L)),
                static_cast<std::uint8_t>(std::clamp(std::lround(c[2]), 0L, 255L))};
  };
  return lab_distance(srgb_to_lab(to8(a)), srgb_to_lab(to8(b)));
}

Color random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(30.0, 225.0);
  return {u(rng), u(rng), u(rng)};
}

Paint random_paint(std::mt19937_64& rng, Fill fill, bool textured) {
  Paint p;
  p.start = random_color(rng);
  p.end = p.start;
  if (fill == Fill::Gradient) {
    std::uniform_real_distribution<double> delta(-35.0, 35.0);
    for (int k = 0; k < 3; ++k) p.end[k] = std::clamp(p.start[k] + delta(rng), 0.0, 255.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double a = angle(rng);
    p.dir_x = std::cos(a);
    p.dir_y = std::sin(a);
    // Keep t in [0, 1] for either sign of the direction.
    if (p.dir_x < 0) std::swap(p.start, p.end), p.dir_x = -p.dir_x;
    p.dir_y = std::abs(p.dir_y);
  }
  if (textured) {
    std::uniform_real_distribution<double> amp(3.0, 5.0);
    std::uniform_real_distribution<double> period(9.0, 14.0);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    p.texture_amplitude = amp(rng);
    p.texture_period = period(rng);
    p.texture_angle = angle(rng);
    p.texture_phase = angle(rng);
  }
  return p;
}

bool separated(const Paint& a, const Paint& b) {
  constexpr double kMinContrast = 40.0;
  for (const Color& x : {a.start, a.end}) {
    for (const Color& y : {b.start, b.end}) {
      if (contrast(x, y) < kMinContrast) return false;
    }
  }
  return true;
}

bool inside_shape(const ObjectPlan& obj, int i, int j) {
  const BoundingBox& b = obj.box;
  if (!b.contains(i, j)) return false;
  switch (obj.shape) {
    case Shape::Rectangle:
      return true;
    case Shape::Ellipse: {
      const double cx = 0.5 * (b.x0 + b.x1);
      const double cy = 0.5 * (b.y0 + b.y1);
      const double dx = (j + 0.5 - cx) / (0.5 * b.width());
      const double dy = (i + 0.5 - cy) / (0.5 * b.height());
      return dx * dx + dy * dy <= 1.0;
    }
    case Shape::LShape: {
      const int nw = static_cast<int>(std::lround(obj.notch_w * b.width()));
      const int nh = static_cast<int>(std::lround(obj.notch_h * b.height()));
      const bool right = obj.notch_corner & 1;
      const bool bottom = obj.notch_corner & 2;
      const bool in_x = right ? j >= b.x1 - nw : j < b.x0 + nw;
      const bool in_y = bottom ? i >= b.y1 - nh : i < b.y0 + nh;
      return !(in_x && in_y);
    }
  }
  return false;
}

ObjectPlan plan_object(std::mt19937_64& rng, Shape shape, Fill fill, bool textured,
                       const BoundingBox& cell, const Paint& background) {
  ObjectPlan obj;
  obj.shape = shape;
  constexpr int kMargin = 6;
  const int max_w = cell.width() - 2 * kMargin;
  const int max_h = cell.height() - 2 * kMargin;
  std::uniform_int_distribution<int> wdist(std::max(8, max_w * 5 / 10), max_w);
  std::uniform_int_distribution<int> hdist(std::max(8, max_h * 5 / 10), max_h);
  const int w = wdist(rng);
  const int h = hdist(rng);
  std::uniform_int_distribution<int> xdist(cell.x0 + kMargin, cell.x1 - kMargin - w);
  std::uniform_int_distribution<int> ydist(cell.y0 + kMargin, cell.y1 - kMargin - h);
  const int x0 = xdist(rng);
  const int y0 = ydist(rng);
  obj.box = {x0, y0, x0 + w, y0 + h};
  std::uniform_int_distribution<int> corner(0, 3);
  std::uniform_real_distribution<double> frac(0.4, 0.6);
  obj.notch_corner = corner(rng);
  obj.notch_w = frac(rng);
  obj.notch_h = frac(rng);
  do {
    obj.paint = random_paint(rng, fill, textured);
  } while (!separated(obj.paint, background));
  return obj;
}

struct Rendered {
  RgbImage image;
  std::vector<BitGrid> masks;
};

Rendered render(int height, int width, const Paint& background, const std::vector<ObjectPlan>& objects,
                double noise_sigma, std::mt19937_64& rng) {
  Rendered out{RgbImage(height, width), {}};
  for (std::size_t o = 0; o < objects.size(); ++o) out.masks.emplace_back(height, width, 0);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      Color c = background.at((j + 0.5) / width, (i + 0.5) / height, j, i);
      for (std::size_t o = 0; o < objects.size(); ++o) {
        const ObjectPlan& obj = objects[o];
        if (!inside_shape(obj, i, j)) continue;
        out.masks[o](i, j) = 1;
        c = obj.paint.at((j + 0.5 - obj.box.x0) / obj.box.width(),
                         (i + 0.5 - obj.box.y0) / obj.box.height(), j, i);
      }
      Rgb8& px = out.image(i, j);
      for (int k = 0; k < 3; ++k) {
        const double v = c[k] + (noise_sigma > 0.0 ? noise(rng) : 0.0);
        px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

const char* to_string(Shape s) {
  switch (s) {
    case Shape::Rectangle:
      return "rectangle";
    case Shape::Ellipse:
      return "ellipse";
    case Shape::LShape:
      return "l_shape";
  }
  return "unknown";
}

Scene generate(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const Paint background = random_paint(rng, spec.fill, spec.textured);
  const BoundingBox cell{0, 0, spec.width, spec.height};
  const ObjectPlan obj = plan_object(rng, spec.shape, spec.fill, spec.textured, cell, background);
  Rendered r = render(spec.height, spec.width, background, {obj}, spec.noise_sigma, rng);
  Scene scene{spec, std::move(r.image), std::move(r.masks.front()), {}};
  scene.box = tightest_box(scene.gt);
  return scene;
}

std::vector<SceneSpec> standard_suite(std::uint64_t seed, int count) {
  std::vector<SceneSpec> out;
  for (int i = 0; i < count; ++i) {
    SceneSpec s;
    s.shape = static_cast<Shape>(i % 3);
    s.fill = (i / 3) % 2 == 0 ? Fill::Solid : Fill::Gradient;
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    out.push_back(s);
  }
  return out;
}

std::vector<SceneSpec> textured_suite(std::uint64_t seed, int count) {
  std::vector<SceneSpec> out = standard_suite(seed ^ 0x7e57u, count);
  for (SceneSpec& s : out) s.textured = true;
  return out;
}

void write_dataset(const std::filesystem::path& dir, std::uint64_t seed, int images,
                   int objects_per_image) {
  std::filesystem::create_directories(dir / "images");
  constexpr int kCell = 64;
  std::vector<AnnotationRecord> records;
  std::int64_t ann_id = 1;
  for (int n = 0; n < images; ++n) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
    const bool textured = n % 2 == 1;
    const Fill fill = (n / 2) % 2 == 0 ? Fill::Solid : Fill::Gradient;
    const Paint background = random_paint(rng, fill, textured);
    std::vector<ObjectPlan> objects;
    for (int o = 0; o < objects_per_image; ++o) {
      const BoundingBox cell{o * kCell, 0, (o + 1) * kCell, kCell};
      const auto shape = static_cast<Shape>((n + o) % 3);
      objects.push_back(plan_object(rng, shape, fill, textured, cell, background));
    }
    Rendered r = render(kCell, kCell * objects_per_image, background, objects, 4.0, rng);

    AnnotationRecord rec;
    rec.image_id = n + 1;
    char name[32];
    std::snprintf(name, sizeof name, "%06d.png", n + 1);
    rec.file_name = name;
    rec.height = r.image.height();
    rec.width = r.image.width();
    write_png_rgb(r.image, dir / "images" / rec.file_name);
    for (std::size_t o = 0; o < objects.size(); ++o) {
      InstanceAnnotation inst;
      inst.annotation_id = ann_id++;
      inst.category_id = static_cast<std::int64_t>(objects[o].shape) + 1;
      inst.box = tightest_box(r.masks[o]);
      inst.gt = std::move(r.masks[o]);
      rec.instances.push_back(std::move(inst));
    }
    records.push_back(std::move(rec));
  }
  std::ofstream out(dir / "annotations.json");
  out << annotations_to_json(records).dump(1) << '\n';
  if (!out) throw DatasetError("failed writing " + (dir / "annotations.json").string());
}

}  // namespace boxenergy::synthetic
