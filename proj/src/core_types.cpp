#include "boxenergy/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace boxenergy {

BoundingBox BoundingBox::clipped(int h, int w) const {
  return {std::clamp(x0, 0, w), std::clamp(y0, 0, h), std::clamp(x1, 0, w), std::clamp(y1, 0, h)};
}

BoundingBox BoundingBox::from_corners(double x0, double y0, double x1, double y1) {
  auto lo = [](double v) { return static_cast<int>(std::floor(v)); };
  auto hi = [](double v) { return static_cast<int>(std::ceil(v)); };
  return {lo(x0), lo(y0), hi(x1), hi(y1)};
}

BoundingBox BoundingBox::from_xywh(double x, double y, double w, double h) {
  return from_corners(x, y, x + w, y + h);
}

BoxIndicatorMask make_box_indicator(const BoundingBox& box, int h, int w) {
  const BoundingBox clipped = box.clipped(h, w);
  if (clipped.empty()) {
    throw InvalidAnnotation("box (" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
                            std::to_string(box.x1) + "," + std::to_string(box.y1) +
                            ") is empty inside a " + std::to_string(h) + "x" + std::to_string(w) +
                            " image");
  }
  BitGrid grid(h, w, 0);
  for (int i = clipped.y0; i < clipped.y1; ++i) {
    std::fill_n(grid.data().begin() + static_cast<std::ptrdiff_t>(grid.flatten(i, clipped.x0)),
                clipped.width(), std::uint8_t{1});
  }
  return {std::move(grid), clipped};
}

BoundingBox tightest_box(const BitGrid& mask) {
  BoundingBox box{mask.width(), mask.height(), 0, 0};
  bool any = false;
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (mask(i, j) == 0) continue;
      any = true;
      box.x0 = std::min(box.x0, j);
      box.y0 = std::min(box.y0, i);
      box.x1 = std::max(box.x1, j + 1);
      box.y1 = std::max(box.y1, i + 1);
    }
  }
  return any ? box : BoundingBox{};
}

double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RealGrid MaskField::probabilities() const {
  RealGrid out(height(), width());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sigmoid(logits_[k]);
  return out;
}

RealGrid MaskField::complements() const {
  RealGrid out(height(), width());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sigmoid(-logits_[k]);
  return out;
}

void NeighborhoodSpec::validate() const {
  if (size < 3 || size % 2 == 0) {
    throw std::invalid_argument("neighborhood size must be an odd integer >= 3, got " +
                                std::to_string(size));
  }
  if (dilation < 1) {
    throw std::invalid_argument("dilation must be >= 1, got " + std::to_string(dilation));
  }
}

std::vector<std::pair<int, int>> NeighborhoodSpec::offsets() const {
  validate();
  const int r = (size - 1) / 2;
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(size * size - 1));
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) {
      if (a == 0 && b == 0) continue;
      out.emplace_back(a * dilation, b * dilation);
    }
  }
  return out;
}

std::vector<std::pair<int, int>> NeighborhoodSpec::half_offsets() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& [dy, dx] : offsets()) {
    if (dy > 0 || (dy == 0 && dx > 0)) out.emplace_back(dy, dx);
  }
  return out;
}

void EnergyConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(tau) || tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("tau must lie in [0, 1]");
  }
  if (!finite(theta) || theta <= 0.0) {
    throw std::invalid_argument("theta must be positive");
  }
  if (!finite(pairwise_weight) || pairwise_weight < 0.0) {
    throw std::invalid_argument("pairwise_weight must be nonnegative");
  }
  if (!finite(epsilon_dice) || epsilon_dice <= 0.0) {
    throw std::invalid_argument("epsilon_dice must be positive");
  }
  neighborhood.validate();
}

const char* to_string(PairwiseNormalization n) {
  switch (n) {
    case PairwiseNormalization::ConfidentEdges:
      return "confident";
    case PairwiseNormalization::AllEdgesInBox:
      return "in_box";
  }
  return "unknown";
}

BoundingBox downsample_box(const BoundingBox& box, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  auto floor_div = [stride](int v) { return v >= 0 ? v / stride : -((-v + stride - 1) / stride); };
  auto ceil_div = [stride](int v) { return v >= 0 ? (v + stride - 1) / stride : -((-v) / stride); };
  return {floor_div(box.x0), floor_div(box.y0), ceil_div(box.x1), ceil_div(box.y1)};
}

}  // namespace boxenergy
