#include "boxenergy/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace boxenergy::oracle {

RealGrid finite_diff_grad(const ScalarEnergy& energy, const MaskField& field, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  MaskField probe = field;
  RealGrid grad(field.height(), field.width(), 0.0);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double x = field.logits()[k];
    probe.logits()[k] = x + step;
    const double up = energy(probe);
    probe.logits()[k] = x - step;
    const double down = energy(probe);
    probe.logits()[k] = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      const auto [i, j] = grad.unflatten(k);
      throw NonFiniteEnergy("non-finite energy when perturbing pixel (" + std::to_string(i) + "," +
                                std::to_string(j) + ")",
                            i, j);
    }
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

BitGrid argmax_tie_pixels(const MaskField& field, double margin) {
  const RealGrid& x = field.logits();
  BitGrid out(x.height(), x.width(), 0);
  // A line is fragile when its top two logits are within margin; every pixel within margin of the
  // top is then excluded.
  auto scan = [&](int n, int m, auto index) {
    for (int k = 0; k < n; ++k) {
      double top = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < m; ++t) top = std::max(top, x[index(k, t)]);
      int near = 0;
      for (int t = 0; t < m; ++t) near += (top - x[index(k, t)] <= margin) ? 1 : 0;
      if (near < 2) continue;
      for (int t = 0; t < m; ++t) {
        if (top - x[index(k, t)] <= margin) out[index(k, t)] = 1;
      }
    }
  };
  scan(x.width(), x.height(), [&](int col, int row) { return x.flatten(row, col); });
  scan(x.height(), x.width(), [&](int row, int col) { return x.flatten(row, col); });
  return out;
}

GradCheckReport compare_gradients(const RealGrid& analytic, const RealGrid& numeric,
                                  const BitGrid& excluded, double tolerance, double floor) {
  require_same_shape(analytic, numeric, "compare_gradients");
  require_same_shape(analytic, excluded, "compare_gradients: exclusion mask");
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    if (excluded[k]) {
      ++report.excluded;
      continue;
    }
    ++report.checked;
    const double a = analytic[k];
    const double f = numeric[k];
    const double denom = std::max({std::abs(a), std::abs(f), floor});
    double rel = std::abs(a - f) / denom;
    if (std::isnan(rel)) rel = INFINITY;
    if (report.worst_row < 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      std::tie(report.worst_row, report.worst_col) = analytic.unflatten(k);
    }
  }
  report.pass = report.max_relative_error <= tolerance;
  return report;
}

MaskField saturated_field(int h, int w, std::uint32_t bits) {
  MaskField f(h, w, -kSaturatedLogit);
  for (std::size_t k = 0; k < f.logits().size(); ++k) {
    if ((bits >> k) & 1U) f.logits()[k] = kSaturatedLogit;
  }
  return f;
}

BitGrid bits_to_mask(int h, int w, std::uint32_t bits) {
  BitGrid m(h, w, 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = (bits >> k) & 1U;
  return m;
}

std::uint32_t mask_to_bits(const BitGrid& mask) {
  if (mask.size() > 32) throw std::invalid_argument("mask too large for a bit pattern");
  std::uint32_t bits = 0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) bits |= 1U << k;
  }
  return bits;
}

BruteForceResult brute_force_minimize(const BoxIndicatorMask& box_mask, const EdgeSet& es,
                                      const EnergyConfig& config, EnergyMode mode,
                                      double tie_tolerance) {
  const int h = box_mask.grid.height();
  const int w = box_mask.grid.width();
  if (h * w > kMaxBruteForcePixels) {
    throw std::invalid_argument("brute force enumeration refuses grids larger than 16 pixels (got " +
                                std::to_string(h) + "x" + std::to_string(w) + ")");
  }
  const std::uint32_t count = 1U << (h * w);
  std::vector<double> energies(count);
  for (std::uint32_t bits = 0; bits < count; ++bits) {
    energies[bits] = mask_energy(saturated_field(h, w, bits), box_mask, es, config, mode).l_mask;
  }
  BruteForceResult out;
  out.enumerated = count;
  out.min_energy = *std::min_element(energies.begin(), energies.end());
  for (std::uint32_t bits = 0; bits < count; ++bits) {
    if (energies[bits] <= out.min_energy + tie_tolerance) out.argmins.push_back(bits);
  }
  return out;
}

}  // namespace boxenergy::oracle
