#include "boxenergy/color.hpp"

#include <cmath>
#include <stdexcept>

namespace boxenergy {
namespace {

// IEC 61966-2-1 transfer function.
double srgb_to_linear(std::uint8_t v) {
  const double c = v / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// D65 white taken as the image of linear (1, 1, 1) so that every neutral gray has zero chroma.
constexpr double kXn = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kYn = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kZn = kM[2][0] + kM[2][1] + kM[2][2];

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  if (t > delta * delta * delta) return std::cbrt(t);
  return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab srgb_to_lab(const Rgb8& rgb) {
  const double r = srgb_to_linear(rgb[0]);
  const double g = srgb_to_linear(rgb[1]);
  const double b = srgb_to_linear(rgb[2]);

  const double x = kM[0][0] * r + kM[0][1] * g + kM[0][2] * b;
  const double y = kM[1][0] * r + kM[1][1] * g + kM[1][2] * b;
  const double z = kM[2][0] * r + kM[2][1] * g + kM[2][2] * b;

  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);

  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage srgb_to_lab(const RgbImage& img) {
  LabImage out(img.height(), img.width());
  for (std::size_t k = 0; k < img.size(); ++k) out[k] = srgb_to_lab(img[k]);
  return out;
}

double lab_distance(const Lab& a, const Lab& b) {
  const double d0 = a[0] - b[0];
  const double d1 = a[1] - b[1];
  const double d2 = a[2] - b[2];
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

double color_similarity(const Lab& a, const Lab& b, double theta) {
  return std::exp(-lab_distance(a, b) / theta);
}

double color_similarity(const LabImage& lab, std::size_t p, std::size_t q, double theta) {
  return color_similarity(lab[p], lab[q], theta);
}

LabImage downsample_lab(const LabImage& lab, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (stride == 1) return lab;
  const int h = (lab.height() + stride - 1) / stride;
  const int w = (lab.width() + stride - 1) / stride;
  LabImage out(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      Lab acc{0.0, 0.0, 0.0};
      int n = 0;
      for (int si = i * stride; si < std::min((i + 1) * stride, lab.height()); ++si) {
        for (int sj = j * stride; sj < std::min((j + 1) * stride, lab.width()); ++sj) {
          const Lab& c = lab(si, sj);
          acc[0] += c[0];
          acc[1] += c[1];
          acc[2] += c[2];
          ++n;
        }
      }
      out(i, j) = {acc[0] / n, acc[1] / n, acc[2] / n};
    }
  }
  return out;
}

}  // namespace boxenergy
