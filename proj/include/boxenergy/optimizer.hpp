#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"
#include "boxenergy/losses.hpp"

namespace boxenergy {

enum class InitScheme { Zeros, BoxPrior };

const char* to_string(InitScheme s);
InitScheme parse_init_scheme(const std::string& s);

struct OptimizerConfig {
  int steps = 500;
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  InitScheme init = InitScheme::BoxPrior;
  double binarize_threshold = 0.5;
  double convergence_tol = 1e-6;
  int convergence_window = 10;
  /// A run that exhausts its steps still counts as converged when the binarized mask did not
  /// change during the last stable_window steps.
  int stable_window = 50;
  /// Coarse-to-fine levels: level k runs on the 2^k-strided image, coarsest first, each
  /// initialized from the upsampled logits of the level above. 1 disables the pyramid.
  int pyramid_levels = 2;

  void validate() const;
};

struct TraceStep {
  int level = 0;
  double l_proj = 0.0;
  double l_pairwise = 0.0;
  double l_mask = 0.0;
};

struct OptimizationTrace {
  /// Every evaluation, coarsest level first.
  std::vector<TraceStep> steps;
  /// Adam updates summed over levels.
  int iterations = 0;
  /// Refers to the finest level.
  bool converged = false;
  /// Index into steps of the returned field's energy.
  int best_step = 0;
};

struct OptimizationResult {
  MaskField field;
  OptimizationTrace trace;
};

/// Thrown when the energy stops being finite; carries the trace up to that point.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, OptimizationTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const OptimizationTrace& trace() const { return trace_; }

private:
  OptimizationTrace trace_;
};

inline constexpr double kBoxPriorInside = 1.0;
inline constexpr double kBoxPriorOutside = -3.0;

MaskField init_field(const BoxIndicatorMask& box_mask, InitScheme scheme);

/// Plain Adam over a flat parameter vector.
class Adam {
public:
  Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps);
  void step(std::vector<double>& params, const std::vector<double>& grad);
  long iteration() const { return t_; }

private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Minimizes the box-only energy over the logits with Adam, coarse to fine. Returns the
/// lowest-energy iterate of the finest level.
OptimizationResult minimize(const LabImage& image_lab, const BoundingBox& box,
                            const EnergyConfig& config, const OptimizerConfig& opt);

/// Pyramid levels actually used for an h x w image: coarse levels narrower than 8 pixels are
/// dropped.
int effective_pyramid_levels(int h, int w, int requested);

/// Single-resolution loop against an arbitrary mode (supervised or box-only) on a prebuilt
/// edge set. Ignores pyramid_levels.
OptimizationResult minimize(const MaskField& init, const BoxIndicatorMask& box_mask,
                            const EdgeSet& edges, const EnergyConfig& config,
                            const OptimizerConfig& opt, EnergyMode mode);

/// 1 where sigmoid(logit) >= threshold.
BitGrid binarize(const MaskField& field, double threshold);

}  // namespace boxenergy
