#include "boxenergy/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "boxenergy/color.hpp"
#include "boxenergy/dataset_io.hpp"
#include "boxenergy/image_io.hpp"

namespace boxenergy {

using nlohmann::json;

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("BOXENERGY_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

namespace {

struct LoadedImage {
  RgbImage rgb;
  LabImage lab;
  std::string error;
};

std::vector<LoadedImage> load_images(const std::vector<AnnotationRecord>& records,
                                     const std::filesystem::path& dir, int threads) {
  std::vector<LoadedImage> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    try {
      out[i].rgb = read_image(dir / records[i].file_name);
      if (out[i].rgb.height() != records[i].height || out[i].rgb.width() != records[i].width) {
        out[i].error = "image " + std::to_string(records[i].image_id) + ": decoded size " +
                       std::to_string(out[i].rgb.height()) + "x" + std::to_string(out[i].rgb.width()) +
                       " does not match the annotation";
        return;
      }
      out[i].lab = srgb_to_lab(out[i].rgb);
    } catch (const std::exception& e) {
      out[i].error = "image " + std::to_string(records[i].image_id) + ": " + e.what();
    }
  });
  return out;
}

struct InstanceRef {
  std::size_t record = 0;
  std::size_t instance = 0;
};

std::vector<InstanceRef> enumerate_instances(const std::vector<AnnotationRecord>& records) {
  std::vector<InstanceRef> out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t k = 0; k < records[r].instances.size(); ++k) out.push_back({r, k});
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << text;
  if (!out) throw DatasetError("failed writing " + path.string());
}

void check_stride(int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
}

}  // namespace

SegmentSummary run_segment(const SegmentOptions& opts) {
  opts.energy.validate();
  opts.optimizer.validate();
  check_stride(opts.stride);
  const AnnotationSet anns = load_annotations(opts.annotations);
  std::filesystem::create_directories(opts.out);
  if (opts.overlays) std::filesystem::create_directories(opts.out / "overlays");
  if (opts.traces) std::filesystem::create_directories(opts.out / "traces");

  const json config = {{"energy", to_json(opts.energy)},
                       {"optimizer", to_json(opts.optimizer)},
                       {"stride", opts.stride}};
  const std::string fingerprint = config_fingerprint(config);
  json meta = {{"command", "segment"},
               {"config", config},
               {"config_fingerprint", fingerprint},
               {"overrides", opts.overrides},
               {"pairwise_weight_nondefault", !opts.energy.is_default_weight()},
               {"annotation_diagnostics", anns.diagnostics}};
  write_text(opts.out / "run_metadata.json", meta.dump(2) + "\n");

  const std::vector<LoadedImage> images = load_images(anns.records, opts.images, opts.threads);
  const std::vector<InstanceRef> refs = enumerate_instances(anns.records);

  struct Outcome {
    std::string line;
    std::string error;
    bool converged = false;
  };
  std::vector<Outcome> outcomes(refs.size());
  parallel_for(refs.size(), opts.threads, [&](std::size_t n) {
    const AnnotationRecord& rec = anns.records[refs[n].record];
    const InstanceAnnotation& inst = rec.instances[refs[n].instance];
    const LoadedImage& img = images[refs[n].record];
    const int index = static_cast<int>(refs[n].instance);
    Outcome& out = outcomes[n];
    if (!img.error.empty()) {
      out.error = img.error;
      return;
    }
    try {
      OptimizationTrace trace;
      MaskOutputRecord r;
      r.image_id = rec.image_id;
      r.instance_index = index;
      r.category_id = inst.category_id;
      r.box = inst.box;
      r.mask = segment_instance(img.lab, inst.box, opts.energy, opts.optimizer, opts.stride, &trace);
      const TraceStep& best = trace.steps[static_cast<std::size_t>(trace.best_step)];
      r.l_proj = best.l_proj;
      r.l_pairwise = best.l_pairwise;
      r.l_mask = best.l_mask;
      r.iterations = trace.iterations;
      r.converged = trace.converged;
      r.fingerprint = fingerprint;
      write_mask_png(r, opts.out);
      if (opts.overlays) {
        write_overlay_png(img.rgb, r.mask, opts.out / "overlays" / mask_file_name(r.image_id, index));
      }
      if (opts.traces) {
        std::string lines;
        for (std::size_t s = 0; s < trace.steps.size(); ++s) {
          lines += json{{"step", s},
                        {"level", trace.steps[s].level},
                        {"l_proj", trace.steps[s].l_proj},
                        {"l_pairwise", trace.steps[s].l_pairwise},
                        {"l_mask", trace.steps[s].l_mask}}
                       .dump();
          lines += '\n';
        }
        write_text(opts.out / "traces" /
                       (std::to_string(r.image_id) + "_" + std::to_string(index) + ".jsonl"),
                   lines);
      }
      out.line = report_line(r).dump();
      out.converged = r.converged;
    } catch (const DivergenceError& e) {
      out.error = "image " + std::to_string(rec.image_id) + " instance " + std::to_string(index) +
                  ": " + e.what() + " after " + std::to_string(e.trace().steps.size()) + " steps";
    } catch (const std::exception& e) {
      out.error = "image " + std::to_string(rec.image_id) + " instance " + std::to_string(index) +
                  ": " + e.what();
    }
  });

  SegmentSummary summary;
  summary.instances = refs.size();
  std::string report;
  for (const Outcome& o : outcomes) {
    if (!o.error.empty()) {
      summary.diagnostics.push_back(o.error);
      continue;
    }
    report += o.line;
    report += '\n';
    if (o.converged) ++summary.converged;
  }
  write_text(opts.out / "report.jsonl", report);
  return summary;
}

const char* to_string(EdgeUniverse u) { return u == EdgeUniverse::InBox ? "in_box" : "all"; }

EdgeUniverse parse_edge_universe(const std::string& s) {
  if (s == "in_box") return EdgeUniverse::InBox;
  if (s == "all") return EdgeUniverse::All;
  throw std::invalid_argument("unknown edge universe '" + s + "' (expected in_box or all)");
}

StatsResult run_stats(const StatsOptions& opts) {
  check_stride(opts.stride);
  opts.neighborhood.validate();
  std::vector<double> taus = opts.taus;
  std::sort(taus.begin(), taus.end());
  const AnnotationSet anns = load_annotations(opts.annotations);

  std::string missing;
  for (const AnnotationRecord& rec : anns.records) {
    for (const InstanceAnnotation& inst : rec.instances) {
      if (!inst.gt) {
        missing += (missing.empty() ? "" : ", ") + std::to_string(rec.image_id) + "/" +
                   std::to_string(inst.annotation_id);
      }
    }
  }
  if (!missing.empty()) {
    throw DatasetError("stats needs gt masks; missing for image/annotation " + missing);
  }

  // Per-image partial counts, reduced in record order.
  std::vector<std::vector<EdgeLabelCounts>> partial(anns.records.size());
  std::vector<std::string> errors(anns.records.size());
  parallel_for(anns.records.size(), opts.threads, [&](std::size_t r) {
    const AnnotationRecord& rec = anns.records[r];
    try {
      const RgbImage rgb = read_image(opts.images / rec.file_name);
      if (rgb.height() != rec.height || rgb.width() != rec.width) {
        throw DatasetError("decoded size does not match the annotation");
      }
      const LabImage lab = downsample_lab(srgb_to_lab(rgb), opts.stride);
      std::vector<EdgeLabelCounts> acc(taus.size());
      for (std::size_t t = 0; t < taus.size(); ++t) acc[t].tau = taus[t];
      for (const InstanceAnnotation& inst : rec.instances) {
        const BoundingBox box = opts.universe == EdgeUniverse::All
                                    ? BoundingBox{0, 0, lab.width(), lab.height()}
                                    : downsample_box(inst.box, opts.stride);
        const BoxIndicatorMask box_mask = make_box_indicator(box, lab.height(), lab.width());
        const EdgeSet es = build_edge_set(lab, box_mask, opts.neighborhood, opts.theta);
        const auto counts = edge_label_counts(es, downsample_mask(*inst.gt, opts.stride), taus);
        for (std::size_t t = 0; t < taus.size(); ++t) acc[t] += counts[t];
      }
      partial[r] = std::move(acc);
    } catch (const std::exception& e) {
      errors[r] = "image " + std::to_string(rec.image_id) + ": " + e.what();
    }
  });
  for (const std::string& e : errors) {
    if (!e.empty()) throw DatasetError(e);
  }

  std::vector<EdgeLabelCounts> total(taus.size());
  for (std::size_t t = 0; t < taus.size(); ++t) total[t].tau = taus[t];
  StatsResult result;
  for (std::size_t r = 0; r < partial.size(); ++r) {
    for (std::size_t t = 0; t < taus.size(); ++t) total[t] += partial[r][t];
    result.instances += anns.records[r].instances.size();
  }
  for (const EdgeLabelCounts& c : total) result.rows.push_back(to_stats(c));
  return result;
}

namespace {

struct RandomInstance {
  LabImage lab;
  BoxIndicatorMask box_mask;
  BitGrid gt;
  MaskField field;
};

RandomInstance random_instance(std::mt19937_64& rng, int min_size, int max_size) {
  std::uniform_int_distribution<int> size(min_size, max_size);
  const int h = size(rng);
  const int w = size(rng);

  // A few color clusters with small jitter so similarities straddle the threshold.
  std::uniform_real_distribution<double> base(0.0, 60.0);
  std::normal_distribution<double> jitter(0.0, 2.5);
  std::vector<Lab> palette(3);
  for (Lab& c : palette) c = {base(rng) + 20.0, base(rng) - 30.0, base(rng) - 30.0};
  std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
  LabImage lab(h, w);
  for (Lab& px : lab.data()) {
    const Lab& c = palette[pick(rng)];
    px = {c[0] + jitter(rng), c[1] + jitter(rng), c[2] + jitter(rng)};
  }

  std::uniform_int_distribution<int> x0d(0, w - 2);
  std::uniform_int_distribution<int> y0d(0, h - 2);
  const int x0 = x0d(rng);
  const int y0 = y0d(rng);
  std::uniform_int_distribution<int> x1d(x0 + 1, w);
  std::uniform_int_distribution<int> y1d(y0 + 1, h);
  BoxIndicatorMask box_mask = make_box_indicator({x0, y0, x1d(rng), y1d(rng)}, h, w);

  BitGrid gt(h, w, 0);
  std::bernoulli_distribution coin(0.6);
  for (std::size_t k = 0; k < gt.size(); ++k) gt[k] = box_mask.grid[k] && coin(rng) ? 1 : 0;

  MaskField field(h, w);
  std::normal_distribution<double> logit(0.0, 1.5);
  for (double& x : field.logits().data()) x = logit(rng);
  return {std::move(lab), std::move(box_mask), std::move(gt), std::move(field)};
}

}  // namespace

GradcheckSummary run_gradcheck(const GradcheckOptions& opts) {
  if (opts.min_size < 1 || opts.max_size < opts.min_size) {
    throw std::invalid_argument("gradcheck sizes must satisfy 1 <= min <= max");
  }
  const EnergyFunction energy = opts.energy ? opts.energy : EnergyFunction(mask_energy);
  std::mt19937_64 rng(opts.seed);
  EnergyConfig config;
  GradcheckSummary summary;
  const double tie_margin = std::max(1e-6, 2.0 * opts.step);

  for (int n = 0; n < opts.instances; ++n) {
    const RandomInstance inst = random_instance(rng, opts.min_size, opts.max_size);
    const EdgeSet es = build_edge_set(inst.lab, inst.box_mask, config.neighborhood, config.theta);
    const BitGrid excluded = oracle::argmax_tie_pixels(inst.field, tie_margin);

    for (bool supervised : {false, true}) {
      if (supervised ? !opts.supervised : !opts.box_only) continue;
      const EnergyMode mode = supervised ? EnergyMode::supervised(inst.gt) : EnergyMode::box_only();
      const LossReport analytic = energy(inst.field, inst.box_mask, es, config, mode);
      const RealGrid numeric = oracle::finite_diff_grad(
          [&](const MaskField& f) { return energy(f, inst.box_mask, es, config, mode).l_mask; },
          inst.field, opts.step);
      GradcheckCase c;
      c.height = inst.field.height();
      c.width = inst.field.width();
      c.supervised = supervised;
      c.report = oracle::compare_gradients(analytic.grad, numeric, excluded, opts.tolerance);
      if (summary.cases.empty() || c.report.max_relative_error > summary.max_relative_error) {
        summary.max_relative_error = c.report.max_relative_error;
        summary.worst_case = summary.cases.size();
      }
      summary.pass = summary.pass && c.report.pass;
      summary.cases.push_back(c);
    }
  }
  return summary;
}

CompareSummary run_compare(const CompareOptions& opts) {
  opts.energy.validate();
  opts.optimizer.validate();
  check_stride(opts.stride);
  const AnnotationSet anns = load_annotations(opts.annotations);
  const std::vector<LoadedImage> images = load_images(anns.records, opts.images, opts.threads);
  const std::vector<InstanceRef> refs = enumerate_instances(anns.records);

  std::vector<CompareRow> rows(refs.size());
  parallel_for(refs.size(), opts.threads, [&](std::size_t n) {
    const AnnotationRecord& rec = anns.records[refs[n].record];
    const InstanceAnnotation& inst = rec.instances[refs[n].instance];
    const LoadedImage& img = images[refs[n].record];
    if (!img.error.empty()) throw DatasetError(img.error);
    if (!inst.gt) {
      throw DatasetError("compare needs gt masks; missing for image " +
                         std::to_string(rec.image_id) + " annotation " +
                         std::to_string(inst.annotation_id));
    }
    rows[n].image_id = rec.image_id;
    rows[n].instance = static_cast<int>(refs[n].instance);
    rows[n].scores =
        method_comparison(img.lab, inst.box, *inst.gt, opts.energy, opts.optimizer, opts.stride);
  });

  CompareSummary summary;
  summary.rows = std::move(rows);
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<double> ious;
    for (const CompareRow& r : summary.rows) ious.push_back(r.scores[m].iou);
    summary.median_iou.push_back(ious.empty() ? 0.0 : median(ious));
  }
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    std::string lines;
    for (const CompareRow& r : summary.rows) {
      for (const InstanceScore& s : r.scores) {
        lines += json{{"image_id", r.image_id},
                      {"instance", r.instance},
                      {"method", to_string(s.method)},
                      {"iou", s.iou},
                      {"dice", s.dice}}
                     .dump();
        lines += '\n';
      }
    }
    write_text(opts.out / "compare.jsonl", lines);
  }
  return summary;
}

}  // namespace boxenergy
