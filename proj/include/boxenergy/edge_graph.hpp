#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "boxenergy/color.hpp"
#include "boxenergy/core_types.hpp"

namespace boxenergy {

/// Unordered neighbor pair, canonicalized so that a < b in flat index.
struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double similarity = 0.0;
  std::uint8_t in_box_count = 0;
};

/// Edges with at least one endpoint in the box (E_in), or a subset of them.
class EdgeSet {
public:
  EdgeSet() = default;
  EdgeSet(int height, int width, std::vector<Edge> edges, std::size_t n_in)
      : height_(height), width_(width), edges_(std::move(edges)), n_in_(n_in) {}

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  /// |E_in| of the set this one was built or filtered from.
  std::size_t n_in() const { return n_in_; }
  std::size_t n_confident(double tau) const;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Edge> edges_;
  std::size_t n_in_ = 0;
};

/// Enumerates every in-image unordered neighbor pair once and keeps those touching the box.
EdgeSet build_edge_set(const LabImage& lab, const BoxIndicatorMask& box_mask,
                       const NeighborhoodSpec& spec, double theta);

/// Edges with similarity >= tau; n_in is carried over from the parent.
EdgeSet confident_positive_edges(const EdgeSet& es, double tau);

/// Raw counts behind the positive-edge statistics at one threshold.
struct EdgeLabelCounts {
  double tau = 0.0;
  std::uint64_t confident = 0;           // S_e >= tau
  std::uint64_t confident_positive = 0;  // S_e >= tau and y_e = 1
  std::uint64_t positive = 0;            // y_e = 1

  EdgeLabelCounts& operator+=(const EdgeLabelCounts& other);
};

struct EdgeLabelStats {
  double tau = 0.0;
  std::optional<double> prop_positive;    // undefined when nothing passes tau
  std::optional<double> recall_positive;  // undefined when there are no positive edges
  std::uint64_t n_confident = 0;
};

/// y_e = 1 iff gt agrees at both endpoints (background pairs count as positive).
std::vector<EdgeLabelCounts> edge_label_counts(const EdgeSet& es, const BitGrid& gt,
                                               const std::vector<double>& taus);
EdgeLabelStats to_stats(const EdgeLabelCounts& c);
std::vector<EdgeLabelStats> edge_label_stats(const EdgeSet& es, const BitGrid& gt,
                                             const std::vector<double>& taus);

}  // namespace boxenergy
