#include <doctest.h>

#include <cmath>

#include "boxenergy/eval_metrics.hpp"
#include "boxenergy/optimizer.hpp"
#include "boxenergy/synthetic.hpp"

using namespace boxenergy;

namespace {

LabImage two_tone(int h, int w, const BoundingBox& object, Lab fg, Lab bg) {
  LabImage lab(h, w, bg);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (object.contains(i, j)) lab(i, j) = fg;
    }
  }
  return lab;
}

}  // namespace

TEST_CASE("initial logits") {
  const auto box = make_box_indicator({1, 0, 3, 1}, 2, 3);
  const MaskField prior = init_field(box, InitScheme::BoxPrior);
  CHECK(prior.logits() == RealGrid(2, 3, std::vector<double>{-3, 1, 1, -3, -3, -3}));
  const MaskField zeros = init_field(box, InitScheme::Zeros);
  CHECK(zeros.logits() == RealGrid(2, 3, 0.0));
  CHECK(parse_init_scheme("zeros") == InitScheme::Zeros);
  CHECK(parse_init_scheme("box_prior") == InitScheme::BoxPrior);
  CHECK_THROWS(parse_init_scheme("random"));
  CHECK(std::string(to_string(InitScheme::BoxPrior)) == "box_prior");
}

TEST_CASE("binarize uses a closed threshold") {
  MaskField f(1, 3);
  f.logits()[0] = -0.1;
  f.logits()[1] = 0.0;
  f.logits()[2] = 5.0;
  CHECK(binarize(f, 0.5) == BitGrid(1, 3, std::vector<std::uint8_t>{0, 1, 1}));
  CHECK(binarize(f, 0.99) == BitGrid(1, 3, std::vector<std::uint8_t>{0, 0, 1}));
  CHECK_THROWS(binarize(f, 1.0));
}

TEST_CASE("first Adam step moves every parameter by the learning rate") {
  Adam adam(3, 0.1, 0.9, 0.999, 1e-8);
  std::vector<double> x{0.0, 1.0, -2.0};
  adam.step(x, {5.0, -0.01, 300.0});
  CHECK(x[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(1.1).epsilon(1e-6));
  CHECK(x[2] == doctest::Approx(-2.1).epsilon(1e-6));
  CHECK(adam.iteration() == 1);
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.steps = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS(c.validate());
  c = {};
  c.pyramid_levels = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.stable_window = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("pyramid depth shrinks for small images") {
  CHECK(effective_pyramid_levels(64, 64, 2) == 2);
  CHECK(effective_pyramid_levels(64, 64, 1) == 1);
  CHECK(effective_pyramid_levels(16, 40, 2) == 2);
  CHECK(effective_pyramid_levels(15, 40, 2) == 2);
  CHECK(effective_pyramid_levels(14, 40, 2) == 1);
  CHECK(effective_pyramid_levels(64, 64, 5) == 4);
  CHECK(effective_pyramid_levels(3, 3, 3) == 1);
}

TEST_CASE("solid object on a contrasting background is recovered") {
  const int h = 40, w = 48;
  const BoundingBox object{10, 8, 34, 30};
  const LabImage lab = two_tone(h, w, object, {70, 40, 20}, {30, -10, -30});
  const auto r = minimize(lab, object, EnergyConfig{}, OptimizerConfig{});
  const BitGrid mask = binarize(r.field, 0.5);
  CHECK(iou(mask, make_box_indicator(object, h, w).grid) >= 0.95);
  CHECK(r.trace.steps.size() > 1);
  CHECK(r.trace.steps.front().level == 1);
  CHECK(r.trace.steps.back().level == 0);
  CHECK(r.trace.steps[static_cast<std::size_t>(r.trace.best_step)].level == 0);
}

TEST_CASE("the returned iterate is the lowest energy seen at the finest level") {
  const auto scene = synthetic::generate({48, 48, synthetic::Shape::Ellipse,
                                          synthetic::Fill::Gradient, false, 4.0, 3});
  const LabImage lab = srgb_to_lab(scene.image);
  const auto r = minimize(lab, scene.box, EnergyConfig{}, OptimizerConfig{});
  const auto best = static_cast<std::size_t>(r.trace.best_step);
  for (std::size_t s = 0; s < r.trace.steps.size(); ++s) {
    if (r.trace.steps[s].level == 0) CHECK(r.trace.steps[s].l_mask >= r.trace.steps[best].l_mask);
  }
  // The first fine-level evaluation is the upsampled coarse result; the optimizer never ends
  // worse than where it started.
  std::size_t first_fine = 0;
  while (r.trace.steps[first_fine].level != 0) ++first_fine;
  CHECK(r.trace.steps[best].l_mask <= r.trace.steps[first_fine].l_mask);
}

TEST_CASE("single-level energy at the result never exceeds the energy at the start") {
  const auto scene = synthetic::generate({32, 32, synthetic::Shape::LShape,
                                          synthetic::Fill::Solid, false, 4.0, 9});
  const LabImage lab = srgb_to_lab(scene.image);
  const EnergyConfig c;
  const auto box = make_box_indicator(scene.box, 32, 32);
  const auto es = build_edge_set(lab, box, c.neighborhood, c.theta);
  OptimizerConfig opt;
  opt.steps = 100;
  const MaskField start = init_field(box, InitScheme::BoxPrior);
  const auto r = minimize(start, box, es, c, opt, EnergyMode::box_only());
  const double e0 = mask_energy(start, box, es, c, EnergyMode::box_only()).l_mask;
  const double e1 = mask_energy(r.field, box, es, c, EnergyMode::box_only()).l_mask;
  CHECK(e1 <= e0);
  CHECK(r.trace.iterations <= 100);
}

TEST_CASE("projection only: the optimum fills the box extent") {
  const int h = 24, w = 24;
  const BoundingBox object{5, 4, 19, 20};
  const LabImage lab = two_tone(h, w, object, {60, 0, 0}, {60, 0, 0});
  EnergyConfig c;
  c.pairwise_weight = 0.0;
  const auto r = minimize(lab, object, c, OptimizerConfig{});
  const BoundingBox got = tightest_box(binarize(r.field, 0.5));
  CHECK(std::abs(got.x0 - object.x0) <= 1);
  CHECK(std::abs(got.y0 - object.y0) <= 1);
  CHECK(std::abs(got.x1 - object.x1) <= 1);
  CHECK(std::abs(got.y1 - object.y1) <= 1);
}

TEST_CASE("pixels beyond the pairwise reach of the box stay background") {
  const int h = 40, w = 40;
  const BoundingBox object{12, 12, 28, 28};
  const LabImage lab(h, w, Lab{55, 10, 10});  // uniform color: maximal pull to spread
  const auto r = minimize(lab, object, EnergyConfig{}, OptimizerConfig{});
  const RealGrid p = r.field.probabilities();
  const int reach = NeighborhoodSpec{}.reach();
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const bool far = i < object.y0 - reach || i >= object.y1 + reach || j < object.x0 - reach ||
                       j >= object.x1 + reach;
      if (far) CHECK(p(i, j) < 0.5);
    }
  }
}

TEST_CASE("textured scene at tau 0 is mostly foreground inside the box") {
  const auto scene = synthetic::generate({64, 64, synthetic::Shape::Ellipse,
                                          synthetic::Fill::Solid, true, 4.0, 21});
  EnergyConfig c;
  c.tau = 0.0;
  const auto r = minimize(srgb_to_lab(scene.image), scene.box, c, OptimizerConfig{});
  const BitGrid mask = binarize(r.field, 0.5);
  long inside = 0, fg = 0;
  for (int i = scene.box.y0; i < scene.box.y1; ++i) {
    for (int j = scene.box.x0; j < scene.box.x1; ++j) {
      ++inside;
      fg += mask(i, j);
    }
  }
  CHECK(static_cast<double>(fg) / static_cast<double>(inside) >= 0.9);
}

TEST_CASE("optimization is deterministic") {
  const auto scene = synthetic::generate({40, 40, synthetic::Shape::Rectangle,
                                          synthetic::Fill::Gradient, true, 6.0, 5});
  const LabImage lab = srgb_to_lab(scene.image);
  const auto a = minimize(lab, scene.box, EnergyConfig{}, OptimizerConfig{});
  const auto b = minimize(lab, scene.box, EnergyConfig{}, OptimizerConfig{});
  CHECK(a.field.logits() == b.field.logits());
  CHECK(a.trace.best_step == b.trace.best_step);
  CHECK(a.trace.converged == b.trace.converged);
}

TEST_CASE("non-finite logits raise a divergence error with the partial trace") {
  const auto box = make_box_indicator({0, 0, 2, 2}, 3, 3);
  const LabImage lab(3, 3, Lab{50, 0, 0});
  const EnergyConfig c;
  const auto es = build_edge_set(lab, box, c.neighborhood, c.theta);
  MaskField bad(3, 3, 0.0);
  bad.logits()[0] = NAN;
  try {
    minimize(bad, box, es, c, OptimizerConfig{}, EnergyMode::box_only());
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.trace().steps.empty());
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("supervised minimization drives the field toward gt") {
  const int h = 4, w = 4;
  const auto box = make_box_indicator({0, 0, 3, 3}, h, w);
  const BitGrid gt(h, w, std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0});
  LabImage lab(h, w, Lab{20, 0, 0});
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (gt[k]) lab[k] = {80, 0, 0};
  }
  EnergyConfig c;
  c.neighborhood = {3, 1};
  const auto es = build_edge_set(lab, box, c.neighborhood, c.theta);
  const auto r = minimize(init_field(box, InitScheme::BoxPrior), box, es, c, OptimizerConfig{},
                          EnergyMode::supervised(gt));
  CHECK(binarize(r.field, 0.5) == gt);
}
