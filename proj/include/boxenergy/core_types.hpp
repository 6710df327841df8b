#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boxenergy {

/// Raised when an annotation cannot describe a non-empty region of the image.
class InvalidAnnotation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when two grids that must share a shape do not.
class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major H x W grid.
template <typename V>
class Grid2D {
public:
  Grid2D() = default;

  Grid2D(int height, int width, V fill = V{}) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("grid dimensions must be positive, got " +
                                  std::to_string(height) + "x" + std::to_string(width));
    }
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  Grid2D(int height, int width, std::vector<V> data) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("grid dimensions must be positive");
    }
    if (data.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw DimensionMismatch("grid data length does not equal height * width");
    }
    data_ = std::move(data);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int i, int j) const { return i >= 0 && i < height_ && j >= 0 && j < width_; }

  std::size_t flatten(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j);
  }
  std::pair<int, int> unflatten(std::size_t k) const {
    return {static_cast<int>(k / static_cast<std::size_t>(width_)),
            static_cast<int>(k % static_cast<std::size_t>(width_))};
  }

  V& operator()(int i, int j) { return data_[flatten(i, j)]; }
  const V& operator()(int i, int j) const { return data_[flatten(i, j)]; }
  V& operator[](std::size_t k) { return data_[k]; }
  const V& operator[](std::size_t k) const { return data_[k]; }

  std::vector<V>& data() { return data_; }
  const std::vector<V>& data() const { return data_; }

  template <typename U>
  bool same_shape(const Grid2D<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid2D&) const = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<V> data_;
};

using BitGrid = Grid2D<std::uint8_t>;
using RealGrid = Grid2D<double>;

template <typename A, typename B>
void require_same_shape(const Grid2D<A>& a, const Grid2D<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                            std::to_string(b.width()));
  }
}

/// Half-open pixel rectangle [x0, x1) x [y0, y1); x is the column axis.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int i, int j) const { return i >= y0 && i < y1 && j >= x0 && j < x1; }

  /// Intersection with the h x w image.
  BoundingBox clipped(int h, int w) const;

  /// Fractional corners rounded outward (floor mins, ceil maxes).
  static BoundingBox from_corners(double x0, double y0, double x1, double y1);
  /// COCO [x, y, width, height].
  static BoundingBox from_xywh(double x, double y, double w, double h);

  bool operator==(const BoundingBox&) const = default;
};

struct BoxIndicatorMask {
  BitGrid grid;
  BoundingBox box;
};

/// Throws InvalidAnnotation when the clipped box is empty.
BoxIndicatorMask make_box_indicator(const BoundingBox& box, int h, int w);

/// Tightest box around the nonzero cells; an empty box (all zeros) when there are none.
BoundingBox tightest_box(const BitGrid& mask);

/// Maps an image-space box onto a stride grid, rounding outward.
BoundingBox downsample_box(const BoundingBox& box, int stride);

/// Nearest-neighbor upsampling of a stride grid back to h x w.
template <typename V>
Grid2D<V> upsample_nearest(const Grid2D<V>& grid, int stride, int h, int w) {
  if (stride == 1 && grid.height() == h && grid.width() == w) return grid;
  Grid2D<V> out(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      out(i, j) = grid(std::min(i / stride, grid.height() - 1), std::min(j / stride, grid.width() - 1));
    }
  }
  return out;
}

double sigmoid(double x);

/// Optimizable logit grid. Probabilities are sigmoid(logit).
class MaskField {
public:
  MaskField() = default;
  explicit MaskField(RealGrid logits) : logits_(std::move(logits)) {}
  MaskField(int h, int w, double fill = 0.0) : logits_(h, w, fill) {}

  int height() const { return logits_.height(); }
  int width() const { return logits_.width(); }

  RealGrid& logits() { return logits_; }
  const RealGrid& logits() const { return logits_; }

  double probability(std::size_t k) const { return sigmoid(logits_[k]); }
  RealGrid probabilities() const;
  /// 1 - sigmoid(logit), computed as sigmoid(-logit) to keep precision near saturation.
  RealGrid complements() const;

private:
  RealGrid logits_;
};

/// K x K neighborhood with dilation d.
struct NeighborhoodSpec {
  int size = 3;
  int dilation = 2;

  void validate() const;
  /// All K^2 - 1 nonzero offsets (dy, dx).
  std::vector<std::pair<int, int>> offsets() const;
  /// One representative per +/- pair: dy > 0, or dy == 0 and dx > 0.
  std::vector<std::pair<int, int>> half_offsets() const;
  /// Largest |offset| component, (K - 1) / 2 * d.
  int reach() const { return (size - 1) / 2 * dilation; }

  bool operator==(const NeighborhoodSpec&) const = default;
};

enum class PairwiseNormalization {
  ConfidentEdges,  // divide by the number of edges with S_e >= tau
  AllEdgesInBox,   // divide by |E_in|
};

struct EnergyConfig {
  double tau = 0.1;
  double theta = 2.0;
  NeighborhoodSpec neighborhood{};
  double pairwise_weight = 1.0;
  double epsilon_dice = 1e-5;
  PairwiseNormalization normalization = PairwiseNormalization::ConfidentEdges;

  void validate() const;
  bool is_default_weight() const { return pairwise_weight == 1.0; }
};

const char* to_string(PairwiseNormalization n);

}  // namespace boxenergy
