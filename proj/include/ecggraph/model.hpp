#pragma once

// Fusion classifier: a mean-aggregator GraphSAGE layer and a dense layer read
// the same per-beat feature vector; the flattened node embeddings and the
// dense activations are concatenated and mapped to class logits.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecggraph/graph.hpp"
#include "ecggraph/matrix.hpp"
#include "ecggraph/types.hpp"
#include "json.hpp"

namespace ecggraph::model {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::size_t gnn_hidden = 32;
  std::size_t lin_hidden = 64;
  std::size_t n_classes = kNumClasses;
  double learning_rate = 0.01;
  std::size_t epochs = 700;
  std::size_t batch_size = 512;  // 0 selects full-batch training
  std::uint64_t seed = 0;
  bool class_weights = false;  // inverse-frequency loss weights

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

/// Aggregation topology shared by every sample.
struct Topology {
  std::size_t num_nodes = 0;
  std::vector<std::vector<int>> neighbors;  // self-loops excluded

  static Topology from_graph(const graph::GraphSpec& g);
};

/// All trainable weights in one flat buffer:
///   w_sage (gnn_hidden x 2), b_sage (gnn_hidden),
///   w_lin (lin_hidden x num_nodes), b_lin (lin_hidden),
///   w_out (n_classes x (num_nodes * gnn_hidden + lin_hidden)), b_out (n_classes).
/// Column 0 of w_sage multiplies the node's own value, column 1 the
/// neighbour mean.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t num_nodes, std::size_t gnn_hidden, std::size_t lin_hidden,
              std::size_t n_classes);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t gnn_hidden() const { return gnn_hidden_; }
  std::size_t lin_hidden() const { return lin_hidden_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t concat_width() const { return num_nodes_ * gnn_hidden_ + lin_hidden_; }

  std::span<double> w_sage() { return slice(off_w_sage_, gnn_hidden_ * 2); }
  std::span<double> b_sage() { return slice(off_b_sage_, gnn_hidden_); }
  std::span<double> w_lin() { return slice(off_w_lin_, lin_hidden_ * num_nodes_); }
  std::span<double> b_lin() { return slice(off_b_lin_, lin_hidden_); }
  std::span<double> w_out() { return slice(off_w_out_, n_classes_ * concat_width()); }
  std::span<double> b_out() { return slice(off_b_out_, n_classes_); }
  std::span<const double> w_sage() const { return slice(off_w_sage_, gnn_hidden_ * 2); }
  std::span<const double> b_sage() const { return slice(off_b_sage_, gnn_hidden_); }
  std::span<const double> w_lin() const { return slice(off_w_lin_, lin_hidden_ * num_nodes_); }
  std::span<const double> b_lin() const { return slice(off_b_lin_, lin_hidden_); }
  std::span<const double> w_out() const { return slice(off_w_out_, n_classes_ * concat_width()); }
  std::span<const double> b_out() const { return slice(off_b_out_, n_classes_); }

  std::vector<double>& flat() { return data_; }
  const std::vector<double>& flat() const { return data_; }

  /// Same shapes, all zeros.
  ModelParams zeros_like() const;

  bool operator==(const ModelParams&) const = default;

 private:
  std::span<double> slice(std::size_t off, std::size_t n) { return {data_.data() + off, n}; }
  std::span<const double> slice(std::size_t off, std::size_t n) const {
    return {data_.data() + off, n};
  }

  std::size_t num_nodes_ = 0, gnn_hidden_ = 0, lin_hidden_ = 0, n_classes_ = 0;
  std::size_t off_w_sage_ = 0, off_b_sage_ = 0, off_w_lin_ = 0, off_b_lin_ = 0;
  std::size_t off_w_out_ = 0, off_b_out_ = 0;
  std::vector<double> data_;
};

/// Glorot-uniform weights and zero biases drawn from a seeded generator.
ModelParams init_params(std::size_t num_nodes, const ModelConfig& config);

/// mt19937_64 with fixed mappings to [0, 1) and [0, n); the standard
/// distributions are implementation-defined, so they are not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Mean of each node's neighbour values (0 for nodes without neighbours).
std::vector<double> neighbor_means(std::span<const double> x, const Topology& topo);

/// Node embeddings, num_nodes x gnn_hidden.
Matrix sage_forward(std::span<const double> x, const Topology& topo, const ModelParams& p);

std::vector<double> fusion_forward(std::span<const double> x, const Topology& topo,
                                   const ModelParams& p);

struct LossAndGrad {
  double loss = 0;
  std::vector<double> grad;  // d loss / d logits
  std::vector<double> probs;
};

LossAndGrad softmax_cross_entropy(std::span<const double> logits, int label);

/// Back-propagates a given logit gradient for one sample, accumulating into
/// `grads` (same layout as `p`).
void accumulate_gradients(std::span<const double> x, const Topology& topo, const ModelParams& p,
                          std::span<const double> dlogits, ModelParams& grads);

struct BatchResult {
  double loss = 0;  // weighted mean over the batch
  ModelParams grads;
};

/// Exact gradient of the (weighted) mean cross-entropy over `batch`.
/// `class_weights` may be empty (all ones).
BatchResult backward(std::span<const graph::GraphSample* const> batch, const ModelParams& p,
                     const Topology& topo, std::span<const double> class_weights = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update. Throws TrainingError on a non-finite
/// gradient and leaves params/state untouched in that case.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // per-epoch sample-weighted mean loss
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

std::vector<double> inverse_frequency_weights(std::span<const graph::GraphSample> samples,
                                              std::size_t n_classes);

/// Deterministic given (seed, dataset, config).
TrainResult train(const graph::GraphDataset& dataset, const ModelConfig& config,
                  const EpochCallback& on_epoch = {});

/// argmax with ties resolved toward the lowest class index.
AamiClass argmax_class(std::span<const double> logits);
AamiClass predict(const ModelParams& p, const Topology& topo, std::span<const double> x);
std::vector<AamiClass> predict_batch(const ModelParams& p, const Topology& topo,
                                     const Matrix& features);

double accuracy(const ModelParams& p, const Topology& topo,
                std::span<const graph::GraphSample> samples);

struct Checkpoint {
  ModelConfig config;
  std::string graph_hash;
  ModelParams params;
  std::vector<double> loss_history;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace ecggraph::model
