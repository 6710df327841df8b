#pragma once

#include <span>
#include <vector>

#include "boxenergy/core_types.hpp"
#include "boxenergy/edge_graph.hpp"

namespace boxenergy {

enum class Axis { X, Y };

/// Axis-wise max of a probability grid. X: one value per column (max over rows); Y: one per row.
struct AxisProjection {
  Axis axis = Axis::X;
  std::vector<double> values;
  /// Flat index of the first (smallest-index) maximizer for each value.
  std::vector<std::size_t> argmax;
};

template <typename V>
AxisProjection project(const Grid2D<V>& grid, Axis axis) {
  const int n = axis == Axis::X ? grid.width() : grid.height();
  const int m = axis == Axis::X ? grid.height() : grid.width();
  AxisProjection out{axis, std::vector<double>(static_cast<std::size_t>(n)),
                     std::vector<std::size_t>(static_cast<std::size_t>(n))};
  for (int k = 0; k < n; ++k) {
    std::size_t best = axis == Axis::X ? grid.flatten(0, k) : grid.flatten(k, 0);
    double best_value = static_cast<double>(grid[best]);
    for (int t = 1; t < m; ++t) {
      const std::size_t idx = axis == Axis::X ? grid.flatten(t, k) : grid.flatten(k, t);
      if (static_cast<double>(grid[idx]) > best_value) {
        best = idx;
        best_value = static_cast<double>(grid[idx]);
      }
    }
    out.values[static_cast<std::size_t>(k)] = best_value;
    out.argmax[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

/// 1 - (2 sum p q + eps) / (sum p^2 + sum q^2 + eps).
double dice_loss(std::span<const double> p, std::span<const double> q, double eps);
/// d dice_loss / d p.
std::vector<double> dice_loss_grad(std::span<const double> p, std::span<const double> q, double eps);

struct TermResult {
  double value = 0.0;
  RealGrid grad;  // d value / d logit
};

/// Dice between the soft and box projections on both axes. Gradient reaches one arg-max pixel per
/// row and per column.
TermResult projection_loss(const MaskField& field, const BoxIndicatorMask& box_mask, double eps);

/// P(y_e = 1) = pa pb + (1 - pa)(1 - pb).
double pairwise_prob_same(double pa, double pb);
/// P(y_e = 0) = pa (1 - pb) + (1 - pa) pb.
double pairwise_prob_diff(double pa, double pb);

inline constexpr double kLogClamp = 1e-12;

/// Mean BCE over E_in with labels y_e = [gt(a) == gt(b)]. Zero when the set is empty.
TermResult pairwise_loss_supervised(const MaskField& field, const EdgeSet& es, const BitGrid& gt);

/// -sum_{S_e >= tau} log P(y_e = 1), divided by the confident count or by |E_in|.
TermResult pairwise_loss_boxonly(const MaskField& field, const EdgeSet& es, double tau,
                                 PairwiseNormalization normalization =
                                     PairwiseNormalization::ConfidentEdges);

struct LossReport {
  double l_proj = 0.0;
  double l_pairwise = 0.0;
  double l_mask = 0.0;
  RealGrid grad;
};

/// Which pairwise term to use. Supervised mode borrows the gt grid; it must outlive the call.
struct EnergyMode {
  const BitGrid* gt = nullptr;

  static EnergyMode box_only() { return {}; }
  static EnergyMode supervised(const BitGrid& gt) { return {&gt}; }
  bool is_supervised() const { return gt != nullptr; }
};

/// L_proj + pairwise_weight * L_pairwise with the summed gradient.
LossReport mask_energy(const MaskField& field, const BoxIndicatorMask& box_mask, const EdgeSet& es,
                       const EnergyConfig& config, EnergyMode mode);

}  // namespace boxenergy
