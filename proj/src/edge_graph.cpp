#include "boxenergy/edge_graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace boxenergy {

std::size_t EdgeSet::n_confident(double tau) const {
  return static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(), [tau](const Edge& e) { return e.similarity >= tau; }));
}

EdgeSet build_edge_set(const LabImage& lab, const BoxIndicatorMask& box_mask,
                       const NeighborhoodSpec& spec, double theta) {
  require_same_shape(lab, box_mask.grid, "build_edge_set: lab image vs box mask");
  const auto offsets = spec.half_offsets();
  const int h = lab.height();
  const int w = lab.width();
  const BitGrid& inside = box_mask.grid;

  std::vector<Edge> edges;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const std::size_t a = lab.flatten(i, j);
      for (const auto& [dy, dx] : offsets) {
        const int ni = i + dy;
        const int nj = j + dx;
        if (!lab.contains(ni, nj)) continue;
        const std::size_t b = lab.flatten(ni, nj);
        const int count = inside[a] + inside[b];
        if (count == 0) continue;
        edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                         color_similarity(lab[a], lab[b], theta),
                         static_cast<std::uint8_t>(count)});
      }
    }
  }
  const std::size_t n = edges.size();
  return EdgeSet(h, w, std::move(edges), n);
}

EdgeSet confident_positive_edges(const EdgeSet& es, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");
  std::vector<Edge> kept;
  kept.reserve(es.size());
  std::copy_if(es.edges().begin(), es.edges().end(), std::back_inserter(kept),
               [tau](const Edge& e) { return e.similarity >= tau; });
  return EdgeSet(es.height(), es.width(), std::move(kept), es.n_in());
}

EdgeLabelCounts& EdgeLabelCounts::operator+=(const EdgeLabelCounts& other) {
  confident += other.confident;
  confident_positive += other.confident_positive;
  positive += other.positive;
  return *this;
}

std::vector<EdgeLabelCounts> edge_label_counts(const EdgeSet& es, const BitGrid& gt,
                                               const std::vector<double>& taus) {
  if (gt.height() != es.height() || gt.width() != es.width()) {
    throw DimensionMismatch("edge_label_counts: gt mask does not match the edge set's image");
  }
  if (!std::is_sorted(taus.begin(), taus.end())) {
    throw std::invalid_argument("edge_label_counts: taus must be sorted ascending");
  }
  std::vector<EdgeLabelCounts> out(taus.size());
  for (std::size_t t = 0; t < taus.size(); ++t) out[t].tau = taus[t];

  for (const Edge& e : es.edges()) {
    const bool positive = (gt[e.a] != 0) == (gt[e.b] != 0);
    // Thresholds are sorted, so the edge passes a prefix of them.
    const auto passed = static_cast<std::size_t>(
        std::upper_bound(taus.begin(), taus.end(), e.similarity) - taus.begin());
    for (std::size_t t = 0; t < taus.size(); ++t) {
      if (positive) ++out[t].positive;
      if (t < passed) {
        ++out[t].confident;
        if (positive) ++out[t].confident_positive;
      }
    }
  }
  return out;
}

EdgeLabelStats to_stats(const EdgeLabelCounts& c) {
  EdgeLabelStats s;
  s.tau = c.tau;
  s.n_confident = c.confident;
  if (c.confident > 0) {
    s.prop_positive = static_cast<double>(c.confident_positive) / static_cast<double>(c.confident);
  }
  if (c.positive > 0) {
    s.recall_positive = static_cast<double>(c.confident_positive) / static_cast<double>(c.positive);
  }
  return s;
}

std::vector<EdgeLabelStats> edge_label_stats(const EdgeSet& es, const BitGrid& gt,
                                             const std::vector<double>& taus) {
  std::vector<EdgeLabelStats> out;
  for (const auto& c : edge_label_counts(es, gt, taus)) out.push_back(to_stats(c));
  return out;
}

}  // namespace boxenergy
