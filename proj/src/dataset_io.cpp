#include "boxenergy/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "boxenergy/image_io.hpp"

namespace boxenergy {

using nlohmann::json;

namespace {

std::string describe_annotation(const json& ann) {
  if (ann.is_object() && ann.contains("id") && ann["id"].is_number()) {
    return "annotation " + ann["id"].dump();
  }
  return "annotation <no id>";
}

std::optional<BitGrid> decode_segmentation(const json& seg, int h, int w, std::string& problem) {
  if (seg.is_array()) {
    if (seg.empty()) return std::nullopt;
    BitGrid out(h, w, 0);
    for (const json& poly : seg) {
      if (!poly.is_array() || poly.size() < 6 || poly.size() % 2 != 0) {
        problem = "polygon needs an even number (>= 6) of coordinates";
        return std::nullopt;
      }
      const BitGrid part = rasterize_polygon(poly.get<std::vector<double>>(), h, w);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] |= part[k];
    }
    return out;
  }
  if (seg.is_object() && seg.contains("counts") && seg.contains("size")) {
    const auto size = seg["size"].get<std::vector<int>>();
    if (size.size() != 2 || size[0] != h || size[1] != w) {
      problem = "RLE size does not match the image";
      return std::nullopt;
    }
    const json& counts = seg["counts"];
    std::vector<std::uint32_t> runs = counts.is_string()
                                          ? decode_rle_string(counts.get<std::string>())
                                          : counts.get<std::vector<std::uint32_t>>();
    return decode_rle(runs, h, w);
  }
  problem = "unrecognized segmentation encoding";
  return std::nullopt;
}

}  // namespace

AnnotationSet parse_annotations(const json& doc) {
  AnnotationSet out;
  if (!doc.is_object()) throw DatasetError("annotation file is not a JSON object");

  std::map<std::int64_t, std::size_t> by_id;
  std::vector<AnnotationRecord> images;
  for (const json& img : doc.value("images", json::array())) {
    try {
      AnnotationRecord rec;
      rec.image_id = img.at("id").get<std::int64_t>();
      rec.file_name = img.at("file_name").get<std::string>();
      rec.height = img.at("height").get<int>();
      rec.width = img.at("width").get<int>();
      if (rec.height < 1 || rec.width < 1) {
        out.diagnostics.push_back("image " + std::to_string(rec.image_id) +
                                  ": nonpositive dimensions, skipped");
        continue;
      }
      if (by_id.count(rec.image_id)) {
        out.diagnostics.push_back("image " + std::to_string(rec.image_id) +
                                  ": duplicate id, later entry ignored");
        continue;
      }
      by_id[rec.image_id] = images.size();
      images.push_back(std::move(rec));
    } catch (const json::exception& e) {
      out.diagnostics.push_back(std::string("image entry skipped: ") + e.what());
    }
  }

  for (const json& ann : doc.value("annotations", json::array())) {
    const std::string who = describe_annotation(ann);
    try {
      if (ann.value("iscrowd", 0) != 0) {
        out.diagnostics.push_back(who + ": crowd region, skipped");
        continue;
      }
      const auto image_id = ann.at("image_id").get<std::int64_t>();
      const auto it = by_id.find(image_id);
      if (it == by_id.end()) {
        out.diagnostics.push_back(who + ": no image entry with id " + std::to_string(image_id));
        continue;
      }
      AnnotationRecord& rec = images[it->second];
      const auto bbox = ann.at("bbox").get<std::vector<double>>();
      if (bbox.size() != 4) {
        out.diagnostics.push_back(who + ": bbox must have 4 numbers");
        continue;
      }
      if (!(bbox[2] > 0.0) || !(bbox[3] > 0.0)) {
        out.diagnostics.push_back(who + ": degenerate bbox (w or h <= 0)");
        continue;
      }
      InstanceAnnotation inst;
      inst.annotation_id = ann.value("id", std::int64_t{0});
      inst.category_id = ann.value("category_id", std::int64_t{0});
      inst.box = BoundingBox::from_xywh(bbox[0], bbox[1], bbox[2], bbox[3])
                     .clipped(rec.height, rec.width);
      if (inst.box.empty()) {
        out.diagnostics.push_back(who + ": bbox lies outside the image");
        continue;
      }
      if (ann.contains("segmentation")) {
        std::string problem;
        inst.gt = decode_segmentation(ann["segmentation"], rec.height, rec.width, problem);
        if (!problem.empty()) out.diagnostics.push_back(who + ": segmentation ignored, " + problem);
      }
      rec.instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      out.diagnostics.push_back(who + ": skipped, " + e.what());
    }
  }

  for (AnnotationRecord& rec : images) {
    if (!rec.instances.empty()) out.records.push_back(std::move(rec));
  }
  return out;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open annotation file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DatasetError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_annotations(doc);
}

json annotations_to_json(const std::vector<AnnotationRecord>& records) {
  json images = json::array();
  json annotations = json::array();
  std::int64_t next_id = 1;
  for (const AnnotationRecord& rec : records) {
    images.push_back({{"id", rec.image_id},
                      {"file_name", rec.file_name},
                      {"height", rec.height},
                      {"width", rec.width}});
    for (const InstanceAnnotation& inst : rec.instances) {
      json ann = {{"id", inst.annotation_id != 0 ? inst.annotation_id : next_id},
                  {"image_id", rec.image_id},
                  {"category_id", inst.category_id},
                  {"iscrowd", 0},
                  {"bbox", {inst.box.x0, inst.box.y0, inst.box.width(), inst.box.height()}}};
      if (inst.gt) {
        long area = 0;
        for (std::uint8_t v : inst.gt->data()) area += v ? 1 : 0;
        ann["area"] = area;
        ann["segmentation"] = {{"size", {rec.height, rec.width}}, {"counts", encode_rle(*inst.gt)}};
      }
      annotations.push_back(std::move(ann));
      ++next_id;
    }
  }
  return {{"images", images}, {"annotations", annotations}};
}

BitGrid rasterize_polygon(const std::vector<double>& xy, int h, int w) {
  if (xy.size() < 6 || xy.size() % 2 != 0) {
    throw std::invalid_argument("polygon needs an even number (>= 6) of coordinates");
  }
  BitGrid out(h, w, 0);
  const std::size_t n = xy.size() / 2;
  std::vector<double> crossings;
  for (int i = 0; i < h; ++i) {
    const double y = i + 0.5;
    crossings.clear();
    for (std::size_t e = 0; e < n; ++e) {
      const double x0 = xy[2 * e], y0 = xy[2 * e + 1];
      const double x1 = xy[2 * ((e + 1) % n)], y1 = xy[2 * ((e + 1) % n) + 1];
      // Half-open in y so shared vertices are counted once.
      if ((y0 <= y && y < y1) || (y1 <= y && y < y0)) {
        crossings.push_back(x0 + (y - y0) / (y1 - y0) * (x1 - x0));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
      // Pixel centers j + 0.5 in [left, right).
      const int from = std::max(0, static_cast<int>(std::ceil(crossings[c] - 0.5)));
      const int to = std::min(w, static_cast<int>(std::ceil(crossings[c + 1] - 0.5)));
      for (int j = from; j < to; ++j) out(i, j) = 1;
    }
  }
  return out;
}

BitGrid decode_rle(const std::vector<std::uint32_t>& counts, int h, int w) {
  BitGrid out(h, w, 0);
  const std::size_t total = out.size();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : counts) {
    if (pos + run > total) throw DatasetError("RLE counts exceed the mask size");
    for (std::uint32_t r = 0; r < run; ++r, ++pos) {
      if (value) {
        const auto col = static_cast<int>(pos / static_cast<std::size_t>(h));
        const auto row = static_cast<int>(pos % static_cast<std::size_t>(h));
        out(row, col) = 1;
      }
    }
    value ^= 1;
  }
  if (pos != total) throw DatasetError("RLE counts do not cover the mask");
  return out;
}

std::vector<std::uint32_t> encode_rle(const BitGrid& mask) {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = 0; row < mask.height(); ++row) {
      const std::uint8_t v = mask(row, col) ? 1 : 0;
      if (v != current) {
        counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

std::vector<std::uint32_t> decode_rle_string(const std::string& s) {
  std::vector<std::uint32_t> counts;
  std::size_t k = 0;
  while (k < s.size()) {
    long x = 0;
    int m = 0;
    bool more = true;
    while (more) {
      if (k >= s.size()) throw DatasetError("truncated compressed RLE string");
      const long c = static_cast<long>(s[k]) - 48;
      x |= (c & 0x1f) << (5 * m);
      more = (c & 0x20) != 0;
      ++k;
      ++m;
      if (!more && (c & 0x10)) x |= -1L << (5 * m);
    }
    if (counts.size() > 2) x += static_cast<long>(counts[counts.size() - 2]);
    if (x < 0) throw DatasetError("negative run in compressed RLE string");
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

BitGrid downsample_mask(const BitGrid& mask, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (stride == 1) return mask;
  const int h = (mask.height() + stride - 1) / stride;
  const int w = (mask.width() + stride - 1) / stride;
  BitGrid out(h, w, 0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int si = std::min(i * stride + stride / 2, mask.height() - 1);
      const int sj = std::min(j * stride + stride / 2, mask.width() - 1);
      out(i, j) = mask(si, sj);
    }
  }
  return out;
}

std::string mask_file_name(std::int64_t image_id, int instance_index) {
  return std::to_string(image_id) + "_" + std::to_string(instance_index) + ".png";
}

std::filesystem::path write_mask_png(const MaskOutputRecord& record,
                                     const std::filesystem::path& dir) {
  Grid2D<std::uint8_t> gray(record.mask.height(), record.mask.width(), 0);
  for (std::size_t k = 0; k < gray.size(); ++k) gray[k] = record.mask[k] ? 255 : 0;
  const auto path = dir / mask_file_name(record.image_id, record.instance_index);
  write_png_gray(gray, path);
  return path;
}

RgbImage overlay_mask(const RgbImage& image, const BitGrid& mask) {
  require_same_shape(image, mask, "overlay_mask");
  constexpr Rgb8 kColor{255, 0, 0};
  RgbImage out = image;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!mask[k]) continue;
    for (int c = 0; c < 3; ++c) {
      out[k][c] = static_cast<std::uint8_t>((image[k][c] + kColor[c] + 1) / 2);
    }
  }
  return out;
}

void write_overlay_png(const RgbImage& image, const BitGrid& mask,
                       const std::filesystem::path& path) {
  write_png_rgb(overlay_mask(image, mask), path);
}

json report_line(const MaskOutputRecord& r) {
  return {{"image_id", r.image_id},
          {"instance", r.instance_index},
          {"category_id", r.category_id},
          {"box", {r.box.x0, r.box.y0, r.box.x1, r.box.y1}},
          {"mask_file", mask_file_name(r.image_id, r.instance_index)},
          {"l_proj", r.l_proj},
          {"l_pairwise", r.l_pairwise},
          {"l_mask", r.l_mask},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"config_fingerprint", r.fingerprint}};
}

std::string format_stats_csv(const std::vector<EdgeLabelStats>& rows) {
  if (rows.empty()) throw std::invalid_argument("stats CSV needs at least one row");
  std::ostringstream out;
  out << "tau,prop_positive,recall_positive,n_confident\n";
  char buf[64];
  auto cell = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  for (const EdgeLabelStats& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.tau);
    out << buf << ',';
    out << cell(r.prop_positive) << ',';
    out << cell(r.recall_positive) << ',';
    out << r.n_confident << '\n';
  }
  return out.str();
}

void write_stats_csv(const std::vector<EdgeLabelStats>& rows, const std::filesystem::path& path) {
  const std::string text = format_stats_csv(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << text;
  if (!out) throw DatasetError("failed writing " + path.string());
}

json to_json(const EnergyConfig& c) {
  return {{"tau", c.tau},
          {"theta", c.theta},
          {"kernel_size", c.neighborhood.size},
          {"dilation", c.neighborhood.dilation},
          {"pairwise_weight", c.pairwise_weight},
          {"epsilon_dice", c.epsilon_dice},
          {"normalization", to_string(c.normalization)}};
}

json to_json(const OptimizerConfig& c) {
  return {{"steps", c.steps},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"init", to_string(c.init)},
          {"binarize_threshold", c.binarize_threshold},
          {"convergence_tol", c.convergence_tol},
          {"convergence_window", c.convergence_window},
          {"stable_window", c.stable_window},
          {"pyramid_levels", c.pyramid_levels}};
}

std::string config_fingerprint(const json& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace boxenergy
