#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "boxenergy/core_types.hpp"
#include "boxenergy/edge_graph.hpp"
#include "boxenergy/losses.hpp"

namespace boxenergy::oracle {

class NonFiniteEnergy : public std::runtime_error {
public:
  NonFiniteEnergy(const std::string& what, int row, int col)
      : std::runtime_error(what), row_(row), col_(col) {}
  int row() const { return row_; }
  int col() const { return col_; }

private:
  int row_;
  int col_;
};

using ScalarEnergy = std::function<double(const MaskField&)>;

/// Central differences per logit: (E(x + h e_k) - E(x - h e_k)) / 2h.
RealGrid finite_diff_grad(const ScalarEnergy& energy, const MaskField& field, double step);

struct GradCheckReport {
  double max_relative_error = 0.0;
  int worst_row = -1;
  int worst_col = -1;
  double tolerance = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // pixels skipped as arg-max-tie points
  bool pass = true;
};

/// Pixels whose step-sized perturbation could change some row or column arg-max.
BitGrid argmax_tie_pixels(const MaskField& field, double margin);

/// |a - f| / max(|a|, |f|, floor), maximized over the non-excluded pixels.
GradCheckReport compare_gradients(const RealGrid& analytic, const RealGrid& numeric,
                                  const BitGrid& excluded, double tolerance,
                                  double floor = 1e-7);

inline constexpr double kSaturatedLogit = 12.0;
inline constexpr int kMaxBruteForcePixels = 16;

struct BruteForceResult {
  std::uint64_t enumerated = 0;
  double min_energy = 0.0;
  /// Bit k of each mask is pixel k (row-major).
  std::vector<std::uint32_t> argmins;
};

/// Saturated field (logits +/-12) for a bit pattern.
MaskField saturated_field(int h, int w, std::uint32_t bits);
BitGrid bits_to_mask(int h, int w, std::uint32_t bits);
std::uint32_t mask_to_bits(const BitGrid& mask);

/// Evaluates mask_energy at every binary mask of an h x w grid (h * w <= 16) and collects all
/// masks within `tie_tolerance` of the minimum.
BruteForceResult brute_force_minimize(const BoxIndicatorMask& box_mask, const EdgeSet& es,
                                      const EnergyConfig& config, EnergyMode mode,
                                      double tie_tolerance = 1e-4);

}  // namespace boxenergy::oracle
