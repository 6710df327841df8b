#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxenergy/core_types.hpp"
#include "boxenergy/edge_graph.hpp"
#include "boxenergy/eval_metrics.hpp"
#include "boxenergy/losses.hpp"
#include "boxenergy/optimizer.hpp"
#include "boxenergy/oracle.hpp"

namespace boxenergy {

/// Worker count: `requested` (0 = hardware concurrency), capped by BOXENERGY_THREADS when set.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception is rethrown after
/// all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct SegmentOptions {
  std::filesystem::path annotations;
  std::filesystem::path images;
  std::filesystem::path out;
  EnergyConfig energy;
  OptimizerConfig optimizer;
  int stride = 1;
  int threads = 1;
  bool overlays = false;
  bool traces = false;
  /// Flags the user set explicitly, echoed into the run metadata.
  nlohmann::json overrides = nlohmann::json::object();
};

struct SegmentSummary {
  std::size_t instances = 0;
  std::size_t converged = 0;
  std::vector<std::string> diagnostics;
  bool ok() const { return diagnostics.empty() && converged == instances; }
};

/// Writes {out}/{imageid}_{k}.png per instance, {out}/report.jsonl and {out}/run_metadata.json.
SegmentSummary run_segment(const SegmentOptions& opts);

enum class EdgeUniverse { InBox, All };
const char* to_string(EdgeUniverse u);
EdgeUniverse parse_edge_universe(const std::string& s);

struct StatsOptions {
  std::filesystem::path annotations;
  std::filesystem::path images;
  std::vector<double> taus{0.0, 0.1, 0.2};
  double theta = 2.0;
  NeighborhoodSpec neighborhood{};
  int stride = 1;
  EdgeUniverse universe = EdgeUniverse::InBox;
  int threads = 1;
};

struct StatsResult {
  std::vector<EdgeLabelStats> rows;
  std::size_t instances = 0;
};

/// Positive-edge proportion and recall per tau, aggregated over every instance's edges.
StatsResult run_stats(const StatsOptions& opts);

using EnergyFunction = std::function<LossReport(const MaskField&, const BoxIndicatorMask&,
                                                const EdgeSet&, const EnergyConfig&, EnergyMode)>;

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int instances = 100;
  int min_size = 4;
  int max_size = 16;
  double step = 1e-4;
  double tolerance = 1e-4;
  bool box_only = true;
  bool supervised = true;
  /// Defaults to mask_energy; replaceable to check that a broken gradient is caught.
  EnergyFunction energy;
};

struct GradcheckCase {
  int height = 0;
  int width = 0;
  bool supervised = false;
  oracle::GradCheckReport report;
};

struct GradcheckSummary {
  std::vector<GradcheckCase> cases;
  double max_relative_error = 0.0;
  std::size_t worst_case = 0;
  bool pass = true;
};

GradcheckSummary run_gradcheck(const GradcheckOptions& opts);

struct CompareOptions {
  std::filesystem::path annotations;
  std::filesystem::path images;
  std::filesystem::path out;  // optional; writes compare.jsonl when set
  EnergyConfig energy;
  OptimizerConfig optimizer;
  int stride = 1;
  int threads = 1;
};

struct CompareRow {
  std::int64_t image_id = 0;
  int instance = 0;
  std::vector<InstanceScore> scores;
};

struct CompareSummary {
  std::vector<CompareRow> rows;
  /// Median IoU per method, in Method order.
  std::vector<double> median_iou;
};

CompareSummary run_compare(const CompareOptions& opts);

}  // namespace boxenergy
