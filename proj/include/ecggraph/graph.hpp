#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ecggraph/matrix.hpp"
#include "ecggraph/types.hpp"
#include "json.hpp"

namespace ecggraph::graph {

inline constexpr double kDefaultThreshold = 0.9;

using Edge = std::pair<int, int>;

struct CorrelationResult {
  Matrix corr;
  std::vector<bool> zero_variance;
};

/// Pearson correlation between the columns of `features` (N x D, N >= 2).
/// Zero-variance columns correlate 0 with everything else and 1 with
/// themselves, and are flagged.
CorrelationResult pearson_matrix(const Matrix& features);

/// a_ij = 1 iff corr_ij >= threshold (or |corr_ij| >= threshold when
/// `absolute` is set).
std::vector<std::uint8_t> threshold_adjacency(const Matrix& corr, double threshold,
                                              bool absolute = false);

/// Ordered (i, j) pairs with a_ij == 1, lexicographically sorted.
std::vector<Edge> to_edge_index(const std::vector<std::uint8_t>& adjacency, std::size_t n);

struct GraphSpec {
  double threshold = kDefaultThreshold;
  bool absolute = false;
  std::size_t num_nodes = 0;
  Matrix corr;
  std::vector<std::uint8_t> adjacency;  // num_nodes x num_nodes, row-major
  std::vector<Edge> edge_index;
  std::vector<bool> zero_variance;

  /// Neighbour lists with self-loops removed, as used for aggregation.
  std::vector<std::vector<int>> neighbors() const;

  bool operator==(const GraphSpec&) const = default;
};

GraphSpec build_graph(const Matrix& train_features, double threshold = kDefaultThreshold,
                      bool absolute = false);

nlohmann::json graph_to_json(const GraphSpec& g);
GraphSpec graph_from_json(const nlohmann::json& j);

/// FNV-1a hash of the graph's canonical JSON, hex encoded.
std::string graph_hash(const GraphSpec& g);

struct GraphSample {
  std::vector<double> node_features;  // one scalar per node
  AamiClass label = AamiClass::N;
};

/// Every beat becomes a graph over the same topology.
struct GraphDataset {
  std::shared_ptr<const GraphSpec> graph;
  std::vector<GraphSample> samples;
};

GraphDataset build_graph_samples(const Matrix& features, const std::vector<AamiClass>& labels,
                                 std::shared_ptr<const GraphSpec> graph);

}  // namespace ecggraph::graph
