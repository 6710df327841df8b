// boxenergy command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include "boxenergy/commands.hpp"
#include "boxenergy/dataset_io.hpp"
#include "boxenergy/synthetic.hpp"

namespace be = boxenergy;
using nlohmann::json;

namespace {

struct EnergyFlags {
  be::EnergyConfig energy;
  be::OptimizerConfig optimizer;
  int stride = 1;
  std::string init = "box_prior";
  std::vector<std::pair<std::string, CLI::Option*>> registered;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    registered.emplace_back(name, app->add_option("--" + name, target, help)->capture_default_str());
  }

  void attach(CLI::App* app, bool with_optimizer) {
    add(app, "tau", energy.tau, "confident-edge similarity threshold");
    add(app, "theta", energy.theta, "color similarity scale");
    add(app, "kernel-size", energy.neighborhood.size, "neighborhood size K (odd)");
    add(app, "dilation", energy.neighborhood.dilation, "neighborhood dilation");
    add(app, "pairwise-weight", energy.pairwise_weight, "weight of the pairwise term");
    add(app, "stride", stride, "color sampling stride");
    if (with_optimizer) {
      add(app, "steps", optimizer.steps, "Adam steps");
      add(app, "lr", optimizer.learning_rate, "Adam learning rate");
      add(app, "pyramid-levels", optimizer.pyramid_levels, "coarse-to-fine levels (1 = off)");
      registered.emplace_back(
          "init", app->add_option("--init", init, "initial logits")
                      ->check(CLI::IsMember({"zeros", "box_prior"}))
                      ->capture_default_str());
    }
  }

  void finalize() { optimizer.init = be::parse_init_scheme(init); }

  json overrides() const {
    json out = json::object();
    for (const auto& [name, opt] : registered) {
      if (opt->count() > 0) out[name] = opt->as<std::string>();
    }
    return out;
  }
};

int cmd_segment(const be::SegmentOptions& opts) {
  const be::SegmentSummary s = be::run_segment(opts);
  for (const std::string& d : s.diagnostics) std::cerr << "error: " << d << '\n';
  std::cout << "segmented " << (s.instances - s.diagnostics.size()) << "/" << s.instances
            << " instances, " << s.converged << " converged; outputs in " << opts.out.string()
            << '\n';
  if (s.converged < s.instances && s.diagnostics.empty()) {
    std::cerr << "warning: " << (s.instances - s.converged)
              << " instance(s) hit the step limit before converging\n";
  }
  return s.ok() ? 0 : 1;
}

int cmd_stats(const be::StatsOptions& opts, const std::string& csv_path) {
  const be::StatsResult r = be::run_stats(opts);
  const std::string csv = be::format_stats_csv(r.rows);
  if (csv_path.empty()) {
    std::cout << csv;
  } else {
    be::write_stats_csv(r.rows, csv_path);
    std::cout << "wrote " << csv_path << " (" << r.instances << " instances)\n";
  }
  return 0;
}

int cmd_gradcheck(const be::GradcheckOptions& opts) {
  const be::GradcheckSummary s = be::run_gradcheck(opts);
  std::size_t failed = 0;
  for (const be::GradcheckCase& c : s.cases) failed += !c.report.pass;
  std::printf("checked %zu cases (%d instances), %zu failed\n", s.cases.size(), opts.instances,
              failed);
  if (!s.cases.empty()) {
    const be::GradcheckCase& w = s.cases[s.worst_case];
    std::printf("worst: case %zu (%dx%d, %s) pixel (%d, %d) relative error %.3e, tolerance %.1e\n",
                s.worst_case, w.height, w.width, w.supervised ? "supervised" : "box-only",
                w.report.worst_row, w.report.worst_col, w.report.max_relative_error,
                w.report.tolerance);
  }
  std::printf("%s\n", s.pass ? "PASS" : "FAIL");
  return s.pass ? 0 : 1;
}

int cmd_compare(const be::CompareOptions& opts) {
  const be::CompareSummary s = be::run_compare(opts);
  std::printf("%-14s %10s\n", "method", "median_iou");
  for (std::size_t m = 0; m < s.median_iou.size(); ++m) {
    std::printf("%-14s %10.4f\n", be::to_string(static_cast<be::Method>(m)), s.median_iou[m]);
  }
  std::printf("instances: %zu\n", s.rows.size());
  return 0;
}

int cmd_bruteforce(int h, int w, const std::vector<int>& box, const std::string& gt_bits,
                   std::uint64_t seed, bool supervised) {
  if (box.size() != 4) throw CLI::ValidationError("--box", "expects x0 y0 x1 y1");
  const auto box_mask = be::make_box_indicator({box[0], box[1], box[2], box[3]}, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  be::LabImage lab(h, w);
  for (be::Lab& px : lab.data()) px = {u(rng), u(rng) - 50.0, u(rng) - 50.0};
  be::EnergyConfig config;
  const be::EdgeSet es = be::build_edge_set(lab, box_mask, config.neighborhood, config.theta);
  be::BitGrid gt(h, w, 0);
  if (supervised) {
    if (gt_bits.size() != gt.size()) throw CLI::ValidationError("--gt", "needs h*w characters");
    for (std::size_t k = 0; k < gt.size(); ++k) gt[k] = gt_bits[k] == '1';
  }
  const auto mode = supervised ? be::EnergyMode::supervised(gt) : be::EnergyMode::box_only();
  const auto r = be::oracle::brute_force_minimize(box_mask, es, config, mode);
  std::printf("enumerated %llu masks, min energy %.9g, %zu minimizer(s)\n",
              static_cast<unsigned long long>(r.enumerated), r.min_energy, r.argmins.size());
  for (std::uint32_t bits : r.argmins) {
    const be::BitGrid m = be::oracle::bits_to_mask(h, w, bits);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) std::putchar(m(i, j) ? '1' : '0');
      std::putchar(i + 1 < h ? '/' : '\n');
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-supervised mask energy: segmentation, edge statistics and gradient checks"};
  app.require_subcommand(1);
  app.allow_extras(false);
  int threads = 1;

  // segment
  auto* seg = app.add_subcommand("segment", "optimize one mask per annotated box");
  be::SegmentOptions seg_opts;
  EnergyFlags seg_flags;
  seg->add_option("--annotations", seg_opts.annotations, "COCO-style instances JSON")->required();
  seg->add_option("--images", seg_opts.images, "image directory")->required();
  seg->add_option("--out", seg_opts.out, "output directory")->required();
  seg->add_option("--threads", threads, "worker count (0 = all cores)")->capture_default_str();
  seg->add_flag("--overlays", seg_opts.overlays, "also write overlay PNGs");
  seg->add_flag("--traces", seg_opts.traces, "also write per-step energy traces");
  seg_flags.attach(seg, true);

  // stats
  auto* stats = app.add_subcommand("stats", "positive-edge proportion and recall per tau");
  be::StatsOptions stats_opts;
  std::string universe = "in_box";
  std::string csv_path;
  stats->add_option("--annotations", stats_opts.annotations, "instances JSON with masks")->required();
  stats->add_option("--images", stats_opts.images, "image directory")->required();
  stats->add_option("--taus", stats_opts.taus, "tau grid")->capture_default_str();
  stats->add_option("--theta", stats_opts.theta)->capture_default_str();
  stats->add_option("--kernel-size", stats_opts.neighborhood.size)->capture_default_str();
  stats->add_option("--dilation", stats_opts.neighborhood.dilation)->capture_default_str();
  stats->add_option("--stride", stats_opts.stride)->capture_default_str();
  stats->add_option("--universe", universe, "edge universe")
      ->check(CLI::IsMember({"in_box", "all"}))
      ->capture_default_str();
  stats->add_option("--out", csv_path, "CSV path (stdout when omitted)");
  stats->add_option("--threads", threads)->capture_default_str();

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  be::GradcheckOptions grad_opts;
  grad->add_option("--seed", grad_opts.seed)->capture_default_str();
  grad->add_option("--instances", grad_opts.instances)->capture_default_str();
  grad->add_option("--min-size", grad_opts.min_size)->capture_default_str();
  grad->add_option("--max-size", grad_opts.max_size)->capture_default_str();
  grad->add_option("--step", grad_opts.step)->capture_default_str();
  grad->add_option("--tolerance", grad_opts.tolerance)->capture_default_str();

  // compare
  auto* cmp = app.add_subcommand("compare", "box mask vs projection-only vs full energy");
  be::CompareOptions cmp_opts;
  EnergyFlags cmp_flags;
  cmp->add_option("--annotations", cmp_opts.annotations)->required();
  cmp->add_option("--images", cmp_opts.images)->required();
  cmp->add_option("--out", cmp_opts.out, "directory for compare.jsonl");
  cmp->add_option("--threads", threads)->capture_default_str();
  cmp_flags.attach(cmp, true);

  // Debugging helpers, hidden from --help.
  auto* brute = app.add_subcommand("bruteforce", "")->group("");
  int bf_h = 3, bf_w = 3;
  std::vector<int> bf_box{0, 0, 2, 2};
  std::string bf_gt;
  std::uint64_t bf_seed = 1;
  brute->add_option("--height", bf_h);
  brute->add_option("--width", bf_w);
  brute->add_option("--box", bf_box)->expected(4);
  brute->add_option("--gt", bf_gt, "row-major 0/1 string; enables supervised mode");
  brute->add_option("--seed", bf_seed);

  auto* synth = app.add_subcommand("synth", "")->group("");
  std::string synth_dir;
  std::uint64_t synth_seed = 1;
  int synth_images = 100, synth_objects = 2;
  synth->add_option("--out", synth_dir)->required();
  synth->add_option("--seed", synth_seed);
  synth->add_option("--images", synth_images);
  synth->add_option("--objects", synth_objects);

  CLI11_PARSE(app, argc, argv);

  try {
    const int workers = be::resolve_threads(threads);
    if (seg->parsed()) {
      seg_flags.finalize();
      seg_opts.energy = seg_flags.energy;
      seg_opts.optimizer = seg_flags.optimizer;
      seg_opts.stride = seg_flags.stride;
      seg_opts.threads = workers;
      seg_opts.overrides = seg_flags.overrides();
      return cmd_segment(seg_opts);
    }
    if (stats->parsed()) {
      stats_opts.universe = be::parse_edge_universe(universe);
      stats_opts.threads = workers;
      return cmd_stats(stats_opts, csv_path);
    }
    if (grad->parsed()) return cmd_gradcheck(grad_opts);
    if (cmp->parsed()) {
      cmp_flags.finalize();
      cmp_opts.energy = cmp_flags.energy;
      cmp_opts.optimizer = cmp_flags.optimizer;
      cmp_opts.stride = cmp_flags.stride;
      cmp_opts.threads = workers;
      return cmd_compare(cmp_opts);
    }
    if (brute->parsed()) {
      return cmd_bruteforce(bf_h, bf_w, bf_box, bf_gt, bf_seed, !bf_gt.empty());
    }
    if (synth->parsed()) {
      be::synthetic::write_dataset(synth_dir, synth_seed, synth_images, synth_objects);
      std::cout << "wrote " << synth_images << " images to " << synth_dir << '\n';
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
