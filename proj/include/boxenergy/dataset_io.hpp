#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"
#include "boxenergy/edge_graph.hpp"
#include "boxenergy/optimizer.hpp"

namespace boxenergy {

class DatasetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct InstanceAnnotation {
  std::int64_t annotation_id = 0;
  std::int64_t category_id = 0;
  BoundingBox box;               // clipped to the image
  std::optional<BitGrid> gt;     // image-sized, when a segmentation was present
};

struct AnnotationRecord {
  std::int64_t image_id = 0;
  std::string file_name;
  int height = 0;
  int width = 0;
  std::vector<InstanceAnnotation> instances;
};

struct AnnotationSet {
  std::vector<AnnotationRecord> records;
  /// One line per skipped or repaired entry.
  std::vector<std::string> diagnostics;
};

/// Parses the COCO-instances subset this tool needs. Unknown fields are ignored; bad annotations
/// are skipped with a diagnostic. Images without usable annotations are dropped. Crowd regions
/// (iscrowd = 1) are not instances and are skipped.
AnnotationSet parse_annotations(const nlohmann::json& doc);
AnnotationSet load_annotations(const std::filesystem::path& path);

/// Serializes records back to COCO-instances JSON; gt masks become uncompressed RLE.
nlohmann::json annotations_to_json(const std::vector<AnnotationRecord>& records);

/// Even-odd fill of a polygon given as [x0, y0, x1, y1, ...], sampled at pixel centers.
BitGrid rasterize_polygon(const std::vector<double>& xy, int h, int w);
/// COCO run-length counts, column-major, starting with a run of zeros.
BitGrid decode_rle(const std::vector<std::uint32_t>& counts, int h, int w);
std::vector<std::uint32_t> encode_rle(const BitGrid& mask);
/// COCO compressed RLE string (LEB128-like, 6 bits per char).
std::vector<std::uint32_t> decode_rle_string(const std::string& s);

/// gt sampled at the center of each stride block.
BitGrid downsample_mask(const BitGrid& mask, int stride);

struct MaskOutputRecord {
  std::int64_t image_id = 0;
  int instance_index = 0;
  std::int64_t category_id = 0;
  BoundingBox box;
  BitGrid mask;  // image resolution
  double l_proj = 0.0;
  double l_pairwise = 0.0;
  double l_mask = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string fingerprint;
};

std::string mask_file_name(std::int64_t image_id, int instance_index);
/// Writes {dir}/{imageid}_{instanceindex}.png (255 = foreground) and returns the path.
std::filesystem::path write_mask_png(const MaskOutputRecord& record,
                                     const std::filesystem::path& dir);
/// Red at alpha 0.5 over foreground pixels: out = (src + color + 1) / 2, per channel.
RgbImage overlay_mask(const RgbImage& image, const BitGrid& mask);
void write_overlay_png(const RgbImage& image, const BitGrid& mask,
                       const std::filesystem::path& path);

nlohmann::json report_line(const MaskOutputRecord& record);

std::string format_stats_csv(const std::vector<EdgeLabelStats>& rows);
void write_stats_csv(const std::vector<EdgeLabelStats>& rows, const std::filesystem::path& path);

nlohmann::json to_json(const EnergyConfig& config);
nlohmann::json to_json(const OptimizerConfig& config);
/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_fingerprint(const nlohmann::json& config);

}  // namespace boxenergy
