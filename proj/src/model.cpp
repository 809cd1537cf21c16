#include "ecggraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecggraph::model {

void ModelConfig::validate() const {
  if (gnn_hidden < 1 || lin_hidden < 1) throw std::invalid_argument("hidden sizes must be >= 1");
  if (n_classes < 2) throw std::invalid_argument("need at least two classes");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"gnn_hidden", c.gnn_hidden}, {"lin_hidden", c.lin_hidden},
          {"n_classes", c.n_classes},   {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},         {"batch_size", c.batch_size},
          {"seed", c.seed},             {"class_weights", c.class_weights}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.gnn_hidden = j.value("gnn_hidden", c.gnn_hidden);
  c.lin_hidden = j.value("lin_hidden", c.lin_hidden);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.class_weights = j.value("class_weights", c.class_weights);
  return c;
}

Topology Topology::from_graph(const graph::GraphSpec& g) {
  return {g.num_nodes, g.neighbors()};
}

ModelParams::ModelParams(std::size_t num_nodes, std::size_t gnn_hidden, std::size_t lin_hidden,
                         std::size_t n_classes)
    : num_nodes_(num_nodes), gnn_hidden_(gnn_hidden), lin_hidden_(lin_hidden),
      n_classes_(n_classes) {
  off_w_sage_ = 0;
  off_b_sage_ = off_w_sage_ + gnn_hidden * 2;
  off_w_lin_ = off_b_sage_ + gnn_hidden;
  off_b_lin_ = off_w_lin_ + lin_hidden * num_nodes;
  off_w_out_ = off_b_lin_ + lin_hidden;
  off_b_out_ = off_w_out_ + n_classes * concat_width();
  data_.assign(off_b_out_ + n_classes, 0.0);
}

ModelParams ModelParams::zeros_like() const {
  return ModelParams(num_nodes_, gnn_hidden_, lin_hidden_, n_classes_);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return static_cast<std::size_t>(v % bound);
}

ModelParams init_params(std::size_t num_nodes, const ModelConfig& config) {
  config.validate();
  ModelParams p(num_nodes, config.gnn_hidden, config.lin_hidden, config.n_classes);
  Rng rng(config.seed);
  auto glorot = [&](std::span<double> w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
  };
  glorot(p.w_sage(), 2, config.gnn_hidden);
  glorot(p.w_lin(), num_nodes, config.lin_hidden);
  glorot(p.w_out(), p.concat_width(), config.n_classes);
  return p;
}

std::vector<double> neighbor_means(std::span<const double> x, const Topology& topo) {
  std::vector<double> out(topo.num_nodes, 0.0);
  for (std::size_t v = 0; v < topo.num_nodes; ++v) {
    const auto& nb = topo.neighbors[v];
    if (nb.empty()) continue;
    double s = 0.0;
    for (int u : nb) s += x[static_cast<std::size_t>(u)];
    out[v] = s / static_cast<double>(nb.size());
  }
  return out;
}

namespace {

// Activations of one forward pass, kept for back-propagation.
struct Forward {
  std::vector<double> nbr;     // neighbour means per node
  std::vector<double> concat;  // [flattened node embeddings ; dense activations]
  std::vector<double> logits;
};

void check_input(std::span<const double> x, const Topology& topo, const ModelParams& p) {
  if (x.size() != topo.num_nodes || p.num_nodes() != topo.num_nodes) {
    throw std::invalid_argument("input width does not match the graph");
  }
}

Forward forward_pass(std::span<const double> x, const Topology& topo, const ModelParams& p) {
  check_input(x, topo, p);
  const std::size_t nodes = p.num_nodes();
  const std::size_t hg = p.gnn_hidden();
  const std::size_t hl = p.lin_hidden();
  Forward f;
  f.nbr = neighbor_means(x, topo);
  f.concat.assign(p.concat_width(), 0.0);

  const auto ws = p.w_sage();
  const auto bs = p.b_sage();
  for (std::size_t v = 0; v < nodes; ++v) {
    double* h = f.concat.data() + v * hg;
    for (std::size_t k = 0; k < hg; ++k) {
      const double z = ws[2 * k] * x[v] + ws[2 * k + 1] * f.nbr[v] + bs[k];
      h[k] = z > 0.0 ? z : 0.0;
    }
  }
  const auto wl = p.w_lin();
  const auto bl = p.b_lin();
  double* l = f.concat.data() + nodes * hg;
  for (std::size_t k = 0; k < hl; ++k) {
    double z = bl[k];
    const double* row = wl.data() + k * nodes;
    for (std::size_t i = 0; i < nodes; ++i) z += row[i] * x[i];
    l[k] = z > 0.0 ? z : 0.0;
  }
  const auto wo = p.w_out();
  const auto bo = p.b_out();
  const std::size_t width = p.concat_width();
  f.logits.assign(p.n_classes(), 0.0);
  for (std::size_t c = 0; c < p.n_classes(); ++c) {
    double z = bo[c];
    const double* row = wo.data() + c * width;
    for (std::size_t i = 0; i < width; ++i) z += row[i] * f.concat[i];
    f.logits[c] = z;
  }
  return f;
}

void backprop(std::span<const double> x, const Forward& f, const ModelParams& p,
              std::span<const double> dlogits, ModelParams& g) {
  const std::size_t nodes = p.num_nodes();
  const std::size_t hg = p.gnn_hidden();
  const std::size_t hl = p.lin_hidden();
  const std::size_t width = p.concat_width();
  const auto wo = p.w_out();
  auto gwo = g.w_out();
  auto gbo = g.b_out();

  std::vector<double> dconcat(width, 0.0);
  for (std::size_t c = 0; c < p.n_classes(); ++c) {
    const double d = dlogits[c];
    if (d == 0.0) continue;
    gbo[c] += d;
    double* grow = gwo.data() + c * width;
    const double* row = wo.data() + c * width;
    for (std::size_t i = 0; i < width; ++i) {
      grow[i] += d * f.concat[i];
      dconcat[i] += d * row[i];
    }
  }

  // Dense branch. An activation of exactly 0 has zero subgradient.
  auto gwl = g.w_lin();
  auto gbl = g.b_lin();
  for (std::size_t k = 0; k < hl; ++k) {
    if (!(f.concat[nodes * hg + k] > 0.0)) continue;
    const double dz = dconcat[nodes * hg + k];
    gbl[k] += dz;
    double* grow = gwl.data() + k * nodes;
    for (std::size_t i = 0; i < nodes; ++i) grow[i] += dz * x[i];
  }

  // GraphSAGE branch; weights are shared across nodes.
  auto gws = g.w_sage();
  auto gbs = g.b_sage();
  for (std::size_t v = 0; v < nodes; ++v) {
    for (std::size_t k = 0; k < hg; ++k) {
      if (!(f.concat[v * hg + k] > 0.0)) continue;
      const double dz = dconcat[v * hg + k];
      gws[2 * k] += dz * x[v];
      gws[2 * k + 1] += dz * f.nbr[v];
      gbs[k] += dz;
    }
  }
}

}  // namespace

Matrix sage_forward(std::span<const double> x, const Topology& topo, const ModelParams& p) {
  const auto f = forward_pass(x, topo, p);
  Matrix h(p.num_nodes(), p.gnn_hidden());
  std::copy_n(f.concat.begin(), p.num_nodes() * p.gnn_hidden(), h.data().begin());
  return h;
}

std::vector<double> fusion_forward(std::span<const double> x, const Topology& topo,
                                   const ModelParams& p) {
  return forward_pass(x, topo, p).logits;
}

LossAndGrad softmax_cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::out_of_range("softmax_cross_entropy: label out of range");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  LossAndGrad out;
  out.probs.resize(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.probs[c] = std::exp(logits[c] - mx);
    denom += out.probs[c];
  }
  for (auto& pr : out.probs) pr /= denom;
  out.loss = std::log(denom) - (logits[static_cast<std::size_t>(label)] - mx);
  out.grad = out.probs;
  out.grad[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

void accumulate_gradients(std::span<const double> x, const Topology& topo, const ModelParams& p,
                          std::span<const double> dlogits, ModelParams& grads) {
  const auto f = forward_pass(x, topo, p);
  backprop(x, f, p, dlogits, grads);
}

BatchResult backward(std::span<const graph::GraphSample* const> batch, const ModelParams& p,
                     const Topology& topo, std::span<const double> class_weights) {
  BatchResult out{0.0, p.zeros_like()};
  if (batch.empty()) return out;
  double weight_sum = 0.0;
  for (const auto* s : batch) {
    weight_sum += class_weights.empty() ? 1.0 : class_weights[class_index(s->label)];
  }
  std::vector<double> dlogits(p.n_classes());
  for (const auto* s : batch) {
    const double w = class_weights.empty() ? 1.0 : class_weights[class_index(s->label)];
    const auto f = forward_pass(s->node_features, topo, p);
    const auto ce = softmax_cross_entropy(f.logits, class_index(s->label));
    out.loss += w * ce.loss;
    const double scale = w / weight_sum;
    for (std::size_t c = 0; c < dlogits.size(); ++c) dlogits[c] = scale * ce.grad[c];
    backprop(s->node_features, f, p, dlogits, out.grads);
  }
  out.loss /= weight_sum;
  return out;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  auto& theta = params.flat();
  const auto& g = grads.flat();
  if (g.size() != theta.size()) throw std::invalid_argument("adam_step: shape mismatch");
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw TrainingError("non-finite gradient at parameter " + std::to_string(i) +
                          " (step " + std::to_string(state.t + 1) + ")");
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

std::vector<double> inverse_frequency_weights(std::span<const graph::GraphSample> samples,
                                              std::size_t n_classes) {
  std::vector<double> counts(n_classes, 0.0);
  for (const auto& s : samples) counts[static_cast<std::size_t>(class_index(s.label))] += 1.0;
  std::vector<double> w(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] > 0.0) {
      w[c] = static_cast<double>(samples.size()) / (static_cast<double>(n_classes) * counts[c]);
    }
  }
  return w;
}

TrainResult train(const graph::GraphDataset& dataset, const ModelConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (!dataset.graph) throw std::invalid_argument("train: dataset has no graph");
  if (dataset.samples.empty()) throw std::invalid_argument("train: empty dataset");
  const auto topo = Topology::from_graph(*dataset.graph);

  TrainResult result{init_params(topo.num_nodes, config), {}};
  AdamState adam(result.params.flat().size());
  // Shuffling uses its own stream so the initial weights only depend on the seed.
  Rng shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<double> weights;
  if (config.class_weights) weights = inverse_frequency_weights(dataset.samples, config.n_classes);

  const std::size_t n = dataset.samples.size();
  const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<const graph::GraphSample*> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = &dataset.samples[i];

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      std::span<const graph::GraphSample* const> mb(order.data() + start, len);
      auto br = backward(mb, result.params, topo, weights);
      if (!std::isfinite(br.loss)) {
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch));
      }
      try {
        adam_step(result.params, br.grads, adam, config.learning_rate);
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      epoch_loss += br.loss * static_cast<double>(len);
    }
    epoch_loss /= static_cast<double>(n);
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

AamiClass argmax_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return class_from_index(static_cast<int>(best));
}

AamiClass predict(const ModelParams& p, const Topology& topo, std::span<const double> x) {
  return argmax_class(fusion_forward(x, topo, p));
}

std::vector<AamiClass> predict_batch(const ModelParams& p, const Topology& topo,
                                     const Matrix& features) {
  std::vector<AamiClass> out;
  out.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) out.push_back(predict(p, topo, features.row(r)));
  return out;
}

double accuracy(const ModelParams& p, const Topology& topo,
                std::span<const graph::GraphSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (predict(p, topo, s.node_features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {

nlohmann::json tensor_json(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return {{"rows", rows}, {"cols", cols}, {"data", std::vector<double>(data.begin(), data.end())}};
}

void load_tensor(const nlohmann::json& j, std::span<double> dst, std::size_t rows,
                 std::size_t cols, const char* name) {
  const auto data = j.at("data").get<std::vector<double>>();
  if (j.at("rows").get<std::size_t>() != rows || j.at("cols").get<std::size_t>() != cols ||
      data.size() != dst.size()) {
    throw std::runtime_error(std::string("checkpoint: tensor '") + name + "' has wrong shape");
  }
  std::copy(data.begin(), data.end(), dst.begin());
}

}  // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  const auto& p = c.params;
  return {
      {"format", "ecggraph-checkpoint"},
      {"version", 1},
      {"config", config_to_json(c.config)},
      {"graph_hash", c.graph_hash},
      {"num_nodes", p.num_nodes()},
      {"params",
       {{"w_sage", tensor_json(p.w_sage(), p.gnn_hidden(), 2)},
        {"b_sage", tensor_json(p.b_sage(), p.gnn_hidden(), 1)},
        {"w_lin", tensor_json(p.w_lin(), p.lin_hidden(), p.num_nodes())},
        {"b_lin", tensor_json(p.b_lin(), p.lin_hidden(), 1)},
        {"w_out", tensor_json(p.w_out(), p.n_classes(), p.concat_width())},
        {"b_out", tensor_json(p.b_out(), p.n_classes(), 1)}}},
      {"loss_history", c.loss_history},
  };
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "ecggraph-checkpoint") {
    throw std::runtime_error("not an ecggraph checkpoint");
  }
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  c.graph_hash = j.at("graph_hash").get<std::string>();
  const auto nodes = j.at("num_nodes").get<std::size_t>();
  c.params = ModelParams(nodes, c.config.gnn_hidden, c.config.lin_hidden, c.config.n_classes);
  auto& p = c.params;
  const auto& t = j.at("params");
  load_tensor(t.at("w_sage"), p.w_sage(), p.gnn_hidden(), 2, "w_sage");
  load_tensor(t.at("b_sage"), p.b_sage(), p.gnn_hidden(), 1, "b_sage");
  load_tensor(t.at("w_lin"), p.w_lin(), p.lin_hidden(), nodes, "w_lin");
  load_tensor(t.at("b_lin"), p.b_lin(), p.lin_hidden(), 1, "b_lin");
  load_tensor(t.at("w_out"), p.w_out(), p.n_classes(), p.concat_width(), "w_out");
  load_tensor(t.at("b_out"), p.b_out(), p.n_classes(), 1, "b_out");
  c.loss_history = j.at("loss_history").get<std::vector<double>>();
  return c;
}

}  // namespace ecggraph::model
