#pragma once

#include <string>
#include <vector>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"
#include "boxenergy/optimizer.hpp"

namespace boxenergy {

/// |a & b| / |a | b|; 1 when both are empty.
double iou(const BitGrid& a, const BitGrid& b);
/// 2|a & b| / (|a| + |b|); 1 when both are empty.
double dice_coefficient(const BitGrid& a, const BitGrid& b);

enum class Method { BoxMask, ProjOnly, ProjPairwise };
const char* to_string(Method m);

struct InstanceScore {
  Method method = Method::BoxMask;
  double iou = 0.0;
  double dice = 0.0;
};

/// Scores the box-indicator mask, the projection-only optimum (pairwise_weight = 0) and the full
/// energy optimum against gt, in that order. With stride > 1 the field is optimized on the
/// mean-pooled image and upsampled before scoring.
std::vector<InstanceScore> method_comparison(const LabImage& image, const BoundingBox& box,
                                             const BitGrid& gt, const EnergyConfig& config,
                                             const OptimizerConfig& opt, int stride = 1);

/// Optimizes on the stride grid and returns a binary mask at image resolution.
BitGrid segment_instance(const LabImage& image, const BoundingBox& box, const EnergyConfig& config,
                         const OptimizerConfig& opt, int stride, OptimizationTrace* trace = nullptr);

double median(std::vector<double> values);

}  // namespace boxenergy
