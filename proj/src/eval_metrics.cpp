#include "boxenergy/eval_metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "boxenergy/dataset_io.hpp"

namespace boxenergy {
namespace {

struct Overlap {
  long inter = 0;
  long a = 0;
  long b = 0;
};

Overlap overlap(const BitGrid& a, const BitGrid& b) {
  require_same_shape(a, b, "mask overlap");
  Overlap o;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const bool x = a[k] != 0;
    const bool y = b[k] != 0;
    o.a += x;
    o.b += y;
    o.inter += x && y;
  }
  return o;
}

}  // namespace

double iou(const BitGrid& a, const BitGrid& b) {
  const Overlap o = overlap(a, b);
  const long uni = o.a + o.b - o.inter;
  return uni == 0 ? 1.0 : static_cast<double>(o.inter) / static_cast<double>(uni);
}

double dice_coefficient(const BitGrid& a, const BitGrid& b) {
  const Overlap o = overlap(a, b);
  const long total = o.a + o.b;
  return total == 0 ? 1.0 : 2.0 * static_cast<double>(o.inter) / static_cast<double>(total);
}

const char* to_string(Method m) {
  switch (m) {
    case Method::BoxMask:
      return "box_mask";
    case Method::ProjOnly:
      return "proj_only";
    case Method::ProjPairwise:
      return "proj_pairwise";
  }
  return "unknown";
}

BitGrid segment_instance(const LabImage& image, const BoundingBox& box, const EnergyConfig& config,
                         const OptimizerConfig& opt, int stride, OptimizationTrace* trace) {
  const BoundingBox clipped = box.clipped(image.height(), image.width());
  const LabImage coarse = downsample_lab(image, stride);
  OptimizationResult r = minimize(coarse, downsample_box(clipped, stride), config, opt);
  if (trace) *trace = std::move(r.trace);
  return upsample_nearest(binarize(r.field, opt.binarize_threshold), stride, image.height(),
                          image.width());
}

std::vector<InstanceScore> method_comparison(const LabImage& image, const BoundingBox& box,
                                             const BitGrid& gt, const EnergyConfig& config,
                                             const OptimizerConfig& opt, int stride) {
  require_same_shape(image, gt, "method_comparison: image vs gt");
  auto score = [&](Method m, const BitGrid& mask) {
    return InstanceScore{m, iou(mask, gt), dice_coefficient(mask, gt)};
  };

  std::vector<InstanceScore> out;
  out.push_back(score(Method::BoxMask, make_box_indicator(box, image.height(), image.width()).grid));

  EnergyConfig proj_only = config;
  proj_only.pairwise_weight = 0.0;
  out.push_back(score(Method::ProjOnly, segment_instance(image, box, proj_only, opt, stride)));
  out.push_back(score(Method::ProjPairwise, segment_instance(image, box, config, opt, stride)));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace boxenergy
