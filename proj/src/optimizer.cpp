#include "boxenergy/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace boxenergy {

const char* to_string(InitScheme s) {
  return s == InitScheme::Zeros ? "zeros" : "box_prior";
}

InitScheme parse_init_scheme(const std::string& s) {
  if (s == "zeros") return InitScheme::Zeros;
  if (s == "box_prior") return InitScheme::BoxPrior;
  throw std::invalid_argument("unknown init scheme '" + s + "' (expected zeros or box_prior)");
}

void OptimizerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
    throw std::invalid_argument("binarize threshold must lie in (0, 1)");
  }
  if (!(convergence_tol >= 0.0)) throw std::invalid_argument("convergence tolerance must be >= 0");
  if (convergence_window < 1) throw std::invalid_argument("convergence window must be >= 1");
  if (stable_window < 1) throw std::invalid_argument("stable window must be >= 1");
  if (pyramid_levels < 1) throw std::invalid_argument("pyramid levels must be >= 1");
}

MaskField init_field(const BoxIndicatorMask& box_mask, InitScheme scheme) {
  MaskField field(box_mask.grid.height(), box_mask.grid.width(), 0.0);
  if (scheme == InitScheme::BoxPrior) {
    for (std::size_t k = 0; k < box_mask.grid.size(); ++k) {
      field.logits()[k] = box_mask.grid[k] ? kBoxPriorInside : kBoxPriorOutside;
    }
  }
  return field;
}

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    params[k] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

namespace {

// Flags pixels whose binarized label differs from `mask` and refreshes it; true if any did.
bool update_mask(const MaskField& field, double threshold, std::vector<std::uint8_t>& mask) {
  bool changed = false;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const std::uint8_t bit = field.probability(k) >= threshold ? 1 : 0;
    changed = changed || bit != mask[k];
    mask[k] = bit;
  }
  return changed;
}

}  // namespace

OptimizationResult minimize(const MaskField& init, const BoxIndicatorMask& box_mask,
                            const EdgeSet& edges, const EnergyConfig& config,
                            const OptimizerConfig& opt, EnergyMode mode) {
  config.validate();
  opt.validate();

  MaskField field = init;
  MaskField best = field;
  OptimizationTrace trace;
  double best_energy = INFINITY;
  Adam adam(field.logits().size(), opt.learning_rate, opt.adam_beta1, opt.adam_beta2,
            opt.adam_eps);
  std::vector<std::uint8_t> mask(field.logits().size(), 0);
  update_mask(field, opt.binarize_threshold, mask);
  int last_mask_change = 0;

  // One extra evaluation so the field produced by the last update is scored too.
  for (int step = 0; step <= opt.steps; ++step) {
    LossReport r = mask_energy(field, box_mask, edges, config, mode);
    if (!std::isfinite(r.l_mask)) {
      throw DivergenceError("energy became non-finite at step " + std::to_string(step),
                            std::move(trace));
    }
    trace.steps.push_back({0, r.l_proj, r.l_pairwise, r.l_mask});
    if (r.l_mask < best_energy) {
      best_energy = r.l_mask;
      best = field;
      trace.best_step = step;
    }
    if (step > 0 && update_mask(field, opt.binarize_threshold, mask)) last_mask_change = step;

    const int w = opt.convergence_window;
    if (step >= w) {
      const double before = trace.steps[static_cast<std::size_t>(step - w)].l_mask;
      if (std::abs(r.l_mask - before) <= opt.convergence_tol * std::max(std::abs(before), 1e-12)) {
        trace.converged = true;
        break;
      }
    }
    if (step == opt.steps) {
      trace.converged = step - last_mask_change >= opt.stable_window;
      break;
    }
    adam.step(field.logits().data(), r.grad.data());
    trace.iterations = step + 1;
  }
  return {std::move(best), std::move(trace)};
}

int effective_pyramid_levels(int h, int w, int requested) {
  constexpr int kMinCoarseSide = 8;
  int levels = 1;
  while (levels < requested) {
    const int stride = 1 << levels;
    if ((std::min(h, w) + stride - 1) / stride < kMinCoarseSide) break;
    ++levels;
  }
  return levels;
}

OptimizationResult minimize(const LabImage& image_lab, const BoundingBox& box,
                            const EnergyConfig& config, const OptimizerConfig& opt) {
  config.validate();
  opt.validate();
  const int levels = effective_pyramid_levels(image_lab.height(), image_lab.width(),
                                              opt.pyramid_levels);
  OptimizationTrace trace;
  MaskField field;
  for (int level = levels - 1; level >= 0; --level) {
    const int stride = 1 << level;
    const LabImage lab = level == 0 ? image_lab : downsample_lab(image_lab, stride);
    const BoxIndicatorMask box_mask =
        make_box_indicator(downsample_box(box, stride), lab.height(), lab.width());
    const EdgeSet all = build_edge_set(lab, box_mask, config.neighborhood, config.theta);
    // Dropping sub-threshold edges up front leaves the box-only energy unchanged.
    const EdgeSet confident = confident_positive_edges(all, config.tau);
    const MaskField start =
        level == levels - 1
            ? init_field(box_mask, opt.init)
            : MaskField(upsample_nearest(field.logits(), 2, lab.height(), lab.width()));

    OptimizationResult r;
    try {
      r = minimize(start, box_mask, confident, config, opt, EnergyMode::box_only());
    } catch (const DivergenceError& e) {
      OptimizationTrace partial = trace;
      for (TraceStep s : e.trace().steps) {
        s.level = level;
        partial.steps.push_back(s);
      }
      throw DivergenceError(std::string(e.what()) + " (pyramid level " + std::to_string(level) + ")",
                            std::move(partial));
    }
    const int offset = static_cast<int>(trace.steps.size());
    for (TraceStep s : r.trace.steps) {
      s.level = level;
      trace.steps.push_back(s);
    }
    trace.iterations += r.trace.iterations;
    trace.converged = r.trace.converged;
    trace.best_step = offset + r.trace.best_step;
    field = std::move(r.field);
  }
  return {std::move(field), std::move(trace)};
}

BitGrid binarize(const MaskField& field, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarize threshold must lie in (0, 1)");
  }
  BitGrid out(field.height(), field.width(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = field.probability(k) >= threshold ? 1 : 0;
  }
  return out;
}

}  // namespace boxenergy
