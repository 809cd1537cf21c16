#include "ecggraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ecggraph::graph {

CorrelationResult pearson_matrix(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) throw std::invalid_argument("pearson_matrix: need at least 2 rows");

  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += features(r, c);
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  // Centered cross-products, upper triangle only.
  Matrix sxy(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered[c] = features(r, c) - mean[c];
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = centered[i];
      for (std::size_t j = i; j < d; ++j) sxy(i, j) += ci * centered[j];
    }
  }

  CorrelationResult out{Matrix(d, d), std::vector<bool>(d, false)};
  for (std::size_t i = 0; i < d; ++i) out.zero_variance[i] = !(sxy(i, i) > 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    out.corr(i, i) = 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      double r = 0.0;
      if (!out.zero_variance[i] && !out.zero_variance[j]) {
        r = sxy(i, j) / std::sqrt(sxy(i, i) * sxy(j, j));
        r = std::clamp(r, -1.0, 1.0);
      }
      out.corr(i, j) = r;
      out.corr(j, i) = r;
    }
  }
  return out;
}

std::vector<std::uint8_t> threshold_adjacency(const Matrix& corr, double threshold,
                                              bool absolute) {
  if (corr.rows() != corr.cols()) throw std::invalid_argument("threshold_adjacency: non-square");
  if (!std::isfinite(threshold) || threshold > 1.0) {
    throw std::invalid_argument("threshold_adjacency: threshold must be finite and <= 1");
  }
  std::vector<std::uint8_t> adj(corr.rows() * corr.cols(), 0);
  for (std::size_t i = 0; i < corr.rows(); ++i) {
    for (std::size_t j = 0; j < corr.cols(); ++j) {
      const double v = absolute ? std::abs(corr(i, j)) : corr(i, j);
      adj[i * corr.cols() + j] = v >= threshold ? 1 : 0;
    }
  }
  return adj;
}

std::vector<Edge> to_edge_index(const std::vector<std::uint8_t>& adjacency, std::size_t n) {
  if (adjacency.size() != n * n) throw std::invalid_argument("to_edge_index: size mismatch");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency[i * n + j]) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return edges;
}

std::vector<std::vector<int>> GraphSpec::neighbors() const {
  std::vector<std::vector<int>> out(num_nodes);
  for (const auto& [src, dst] : edge_index) {
    if (src != dst) out[static_cast<std::size_t>(dst)].push_back(src);
  }
  return out;
}

GraphSpec build_graph(const Matrix& train_features, double threshold, bool absolute) {
  auto corr = pearson_matrix(train_features);
  GraphSpec g;
  g.threshold = threshold;
  g.absolute = absolute;
  g.num_nodes = train_features.cols();
  g.adjacency = threshold_adjacency(corr.corr, threshold, absolute);
  g.edge_index = to_edge_index(g.adjacency, g.num_nodes);
  g.corr = std::move(corr.corr);
  g.zero_variance = std::move(corr.zero_variance);
  return g;
}

nlohmann::json graph_to_json(const GraphSpec& g) {
  nlohmann::json corr = nlohmann::json::array();
  nlohmann::json adj = nlohmann::json::array();
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    nlohmann::json crow = nlohmann::json::array();
    nlohmann::json arow = nlohmann::json::array();
    for (std::size_t j = 0; j < g.num_nodes; ++j) {
      crow.push_back(g.corr(i, j));
      arow.push_back(static_cast<int>(g.adjacency[i * g.num_nodes + j]));
    }
    corr.push_back(std::move(crow));
    adj.push_back(std::move(arow));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [s, t] : g.edge_index) edges.push_back({s, t});
  nlohmann::json zv = nlohmann::json::array();
  for (bool b : g.zero_variance) zv.push_back(b);
  return {{"threshold", g.threshold}, {"absolute", g.absolute}, {"num_nodes", g.num_nodes},
          {"corr", corr},           {"adjacency", adj},       {"edge_index", edges},
          {"zero_variance", zv}};
}

GraphSpec graph_from_json(const nlohmann::json& j) {
  GraphSpec g;
  g.threshold = j.at("threshold").get<double>();
  g.absolute = j.value("absolute", false);
  const auto& corr = j.at("corr");
  g.num_nodes = corr.size();
  g.corr = Matrix(g.num_nodes, g.num_nodes);
  g.adjacency.assign(g.num_nodes * g.num_nodes, 0);
  const auto& adj = j.at("adjacency");
  if (adj.size() != g.num_nodes) throw std::runtime_error("graph JSON: adjacency size mismatch");
  for (std::size_t r = 0; r < g.num_nodes; ++r) {
    if (corr[r].size() != g.num_nodes || adj[r].size() != g.num_nodes) {
      throw std::runtime_error("graph JSON: matrix is not square");
    }
    for (std::size_t c = 0; c < g.num_nodes; ++c) {
      g.corr(r, c) = corr[r][c].get<double>();
      g.adjacency[r * g.num_nodes + c] = static_cast<std::uint8_t>(adj[r][c].get<int>());
    }
  }
  for (const auto& e : j.at("edge_index")) g.edge_index.emplace_back(e[0].get<int>(), e[1].get<int>());
  if (g.edge_index != to_edge_index(g.adjacency, g.num_nodes)) {
    throw std::runtime_error("graph JSON: edge_index disagrees with adjacency");
  }
  if (j.contains("zero_variance")) {
    for (const auto& b : j["zero_variance"]) g.zero_variance.push_back(b.get<bool>());
  } else {
    g.zero_variance.assign(g.num_nodes, false);
  }
  return g;
}

std::string graph_hash(const GraphSpec& g) {
  const std::string canonical = graph_to_json(g).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GraphDataset build_graph_samples(const Matrix& features, const std::vector<AamiClass>& labels,
                                 std::shared_ptr<const GraphSpec> graph) {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("build_graph_samples: feature/label count mismatch");
  }
  if (!graph || features.cols() != graph->num_nodes) {
    throw std::invalid_argument("build_graph_samples: feature width does not match graph");
  }
  GraphDataset ds;
  ds.graph = std::move(graph);
  ds.samples.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.row(r);
    ds.samples.push_back({std::vector<double>(row.begin(), row.end()), labels[r]});
  }
  return ds;
}

}  // namespace ecggraph::graph
