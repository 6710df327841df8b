#include <doctest.h>

#include <random>

#include "boxenergy/eval_metrics.hpp"
#include "boxenergy/synthetic.hpp"

using namespace boxenergy;

TEST_CASE("iou and dice examples") {
  const BitGrid a = make_box_indicator({0, 0, 4, 4}, 4, 4).grid;
  const BitGrid left = make_box_indicator({0, 0, 2, 4}, 4, 4).grid;
  const BitGrid right = make_box_indicator({2, 0, 4, 4}, 4, 4).grid;
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(left, right) == 0.0);
  CHECK(iou(a, left) == 0.5);
  CHECK(dice_coefficient(a, left) == doctest::Approx(2.0 / 3.0));
  const BitGrid empty(4, 4, 0);
  CHECK(iou(empty, empty) == 1.0);
  CHECK(dice_coefficient(empty, empty) == 1.0);
  CHECK(iou(empty, a) == 0.0);
  CHECK_THROWS_AS(iou(a, BitGrid(4, 5, 0)), DimensionMismatch);
}

TEST_CASE("dice is a monotone function of iou") {
  std::mt19937 rng(6);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 50; ++t) {
    BitGrid a(6, 6, 0), b(6, 6, 0);
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = coin(rng);
      b[k] = coin(rng);
    }
    const double j = iou(a, b);
    CHECK(dice_coefficient(a, b) == doctest::Approx(2.0 * j / (1.0 + j)));
    CHECK(iou(a, b) == iou(b, a));
  }
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median({7.0}) == 7.0);
  CHECK_THROWS(median({}));
}

TEST_CASE("method comparison scores the box mask exactly") {
  const int h = 32, w = 32;
  const BoundingBox box{8, 6, 24, 26};
  LabImage lab(h, w, Lab{30, 0, 0});
  for (int i = box.y0; i < box.y1; ++i) {
    for (int j = box.x0; j < box.x1; ++j) lab(i, j) = {70, 20, 20};
  }
  const BitGrid gt = make_box_indicator(box, h, w).grid;
  const auto scores = method_comparison(lab, box, gt, EnergyConfig{}, OptimizerConfig{});
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].method == Method::BoxMask);
  CHECK(scores[0].iou == 1.0);
  CHECK(scores[2].iou >= 0.95);
}

TEST_CASE("full energy beats the box on an ellipse") {
  const auto scene = synthetic::generate({64, 64, synthetic::Shape::Ellipse,
                                          synthetic::Fill::Solid, false, 4.0, 12});
  const auto scores = method_comparison(srgb_to_lab(scene.image), scene.box, scene.gt,
                                        EnergyConfig{}, OptimizerConfig{});
  CHECK(scores[2].iou > scores[0].iou);
  CHECK(scores[2].iou > scores[1].iou);
  // An ellipse covers pi/4 of its bounding box.
  CHECK(scores[0].iou == doctest::Approx(0.785).epsilon(0.05));
}

TEST_CASE("segmenting on a stride grid returns an image-sized mask") {
  const auto scene = synthetic::generate({48, 50, synthetic::Shape::Rectangle,
                                          synthetic::Fill::Solid, false, 4.0, 2});
  const LabImage lab = srgb_to_lab(scene.image);
  OptimizationTrace trace;
  const BitGrid m = segment_instance(lab, scene.box, EnergyConfig{}, OptimizerConfig{}, 2, &trace);
  CHECK(m.height() == 48);
  CHECK(m.width() == 50);
  CHECK(iou(m, scene.gt) >= 0.85);
  CHECK(!trace.steps.empty());
  CHECK(std::string(to_string(Method::ProjPairwise)) == "proj_pairwise");
}
