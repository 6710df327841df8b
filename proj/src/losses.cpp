#include "boxenergy/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace boxenergy {

double dice_loss(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("dice_loss: length " + std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()));
  }
  double inter = 0.0;
  double pp = 0.0;
  double qq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    inter += p[k] * q[k];
    pp += p[k] * p[k];
    qq += q[k] * q[k];
  }
  return 1.0 - (2.0 * inter + eps) / (pp + qq + eps);
}

std::vector<double> dice_loss_grad(std::span<const double> p, std::span<const double> q,
                                   double eps) {
  if (p.size() != q.size()) throw DimensionMismatch("dice_loss_grad: length mismatch");
  double inter = 0.0;
  double pp = 0.0;
  double qq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    inter += p[k] * q[k];
    pp += p[k] * p[k];
    qq += q[k] * q[k];
  }
  const double num = 2.0 * inter + eps;
  const double den = pp + qq + eps;
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    g[k] = -(2.0 * q[k] * den - num * 2.0 * p[k]) / (den * den);
  }
  return g;
}

TermResult projection_loss(const MaskField& field, const BoxIndicatorMask& box_mask, double eps) {
  require_same_shape(field.logits(), box_mask.grid, "projection_loss: field vs box mask");
  const RealGrid probs = field.probabilities();
  const RealGrid comps = field.complements();
  TermResult out{0.0, RealGrid(field.height(), field.width(), 0.0)};

  for (Axis axis : {Axis::X, Axis::Y}) {
    const AxisProjection soft = project(probs, axis);
    const AxisProjection target = project(box_mask.grid, axis);
    out.value += dice_loss(soft.values, target.values, eps);
    const std::vector<double> g = dice_loss_grad(soft.values, target.values, eps);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t px = soft.argmax[k];
      out.grad[px] += g[k] * probs[px] * comps[px];
    }
  }
  return out;
}

double pairwise_prob_same(double pa, double pb) { return pa * pb + (1.0 - pa) * (1.0 - pb); }

double pairwise_prob_diff(double pa, double pb) { return pa * (1.0 - pb) + (1.0 - pa) * pb; }

namespace {

void require_edges_match(const MaskField& field, const EdgeSet& es, const char* what) {
  if (field.height() != es.height() || field.width() != es.width()) {
    throw DimensionMismatch(std::string(what) + ": field does not match the edge set's image");
  }
}

// -log(max(x, clamp)) and its derivative with respect to x (zero past the clamp).
struct ClampedNegLog {
  double value;
  double slope;
};

ClampedNegLog neg_log(double x) {
  if (x <= kLogClamp) return {-std::log(kLogClamp), 0.0};
  return {-std::log(x), -1.0 / x};
}

}  // namespace

TermResult pairwise_loss_supervised(const MaskField& field, const EdgeSet& es, const BitGrid& gt) {
  require_edges_match(field, es, "pairwise_loss_supervised");
  require_same_shape(field.logits(), gt, "pairwise_loss_supervised: field vs gt");
  TermResult out{0.0, RealGrid(field.height(), field.width(), 0.0)};
  if (es.empty()) return out;

  const RealGrid p = field.probabilities();
  const RealGrid q = field.complements();
  const double inv_n = 1.0 / static_cast<double>(es.size());
  for (const Edge& e : es.edges()) {
    const double pa = p[e.a], qa = q[e.a];
    const double pb = p[e.b], qb = q[e.b];
    const bool same = (gt[e.a] != 0) == (gt[e.b] != 0);
    // dP_same/dpa = pb - qb; dP_diff/dpa = qb - pb.
    ClampedNegLog t;
    double dpa;
    double dpb;
    if (same) {
      t = neg_log(pa * pb + qa * qb);
      dpa = t.slope * (pb - qb);
      dpb = t.slope * (pa - qa);
    } else {
      t = neg_log(pa * qb + qa * pb);
      dpa = t.slope * (qb - pb);
      dpb = t.slope * (qa - pa);
    }
    out.value += t.value;
    out.grad[e.a] += inv_n * dpa * pa * qa;
    out.grad[e.b] += inv_n * dpb * pb * qb;
  }
  out.value *= inv_n;
  return out;
}

TermResult pairwise_loss_boxonly(const MaskField& field, const EdgeSet& es, double tau,
                                 PairwiseNormalization normalization) {
  require_edges_match(field, es, "pairwise_loss_boxonly");
  TermResult out{0.0, RealGrid(field.height(), field.width(), 0.0)};
  const std::size_t n_conf = es.n_confident(tau);
  const std::size_t n = normalization == PairwiseNormalization::ConfidentEdges ? n_conf : es.n_in();
  if (n_conf == 0 || n == 0) return out;

  const RealGrid p = field.probabilities();
  const RealGrid q = field.complements();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (const Edge& e : es.edges()) {
    if (e.similarity < tau) continue;
    const double pa = p[e.a], qa = q[e.a];
    const double pb = p[e.b], qb = q[e.b];
    const ClampedNegLog t = neg_log(pa * pb + qa * qb);
    out.value += t.value;
    out.grad[e.a] += inv_n * t.slope * (pb - qb) * pa * qa;
    out.grad[e.b] += inv_n * t.slope * (pa - qa) * pb * qb;
  }
  out.value *= inv_n;
  return out;
}

LossReport mask_energy(const MaskField& field, const BoxIndicatorMask& box_mask, const EdgeSet& es,
                       const EnergyConfig& config, EnergyMode mode) {
  TermResult proj = projection_loss(field, box_mask, config.epsilon_dice);
  const TermResult pair = mode.is_supervised()
                              ? pairwise_loss_supervised(field, es, *mode.gt)
                              : pairwise_loss_boxonly(field, es, config.tau, config.normalization);
  LossReport report;
  report.l_proj = proj.value;
  report.l_pairwise = pair.value;
  report.l_mask = proj.value + config.pairwise_weight * pair.value;
  report.grad = std::move(proj.grad);
  if (config.pairwise_weight != 0.0) {
    for (std::size_t k = 0; k < report.grad.size(); ++k) {
      report.grad[k] += config.pairwise_weight * pair.grad[k];
    }
  }
  return report;
}

}  // namespace boxenergy
