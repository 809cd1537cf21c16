#include "ecggraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>

#include "ecggraph/eval.hpp"
#include "ecggraph/features.hpp"
#include "ecggraph/graph.hpp"
#include "ecggraph/wfdb.hpp"

namespace ecggraph::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log(const std::string& stage, const std::string& msg) {
  std::clog << "[" << stage << "] " << msg << std::endl;
}

class StageTimer {
 public:
  explicit StageTimer(std::string stage)
      : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    log(stage_, "done in " + std::to_string(s.count()) + " s");
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json(const std::string& stage, const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw StageError(stage, "missing " + path.string() + "; run `" + producer + "` first");
  }
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw StageError(stage, "cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

features::FeatureTable read_features(const std::string& stage, const fs::path& path,
                                     const std::string& split) {
  if (!fs::exists(path)) {
    throw StageError(stage, "missing " + path.string() + "; run `features` first");
  }
  return features::read_feature_csv(path, split);
}

std::vector<std::string> id_list(const json& manifest, const std::string& split) {
  std::vector<std::string> ids;
  for (const auto& r : manifest.at("records")) {
    if (r.at("split").get<std::string>() == split) ids.push_back(r.at("id").get<std::string>());
  }
  return ids;
}

eval::SplitCounts split_counts(const features::FeatureTable& t) {
  eval::SplitCounts c;
  c.rows = t.rows();
  for (auto d : t.degenerate) c.degenerate += d;
  for (auto l : t.labels) ++c.per_class[class_index(l)];
  return c;
}

json assembly_json(const features::AssemblyReport& r) {
  return {{"records", r.records},
          {"labeled_beats", r.labeled_beats},
          {"rows", r.rows},
          {"skipped_edge", r.skipped_edge},
          {"skipped_out_of_bounds", r.skipped_out_of_bounds},
          {"degenerate", r.degenerate}};
}

void write_debug(const wfdb::EcgRecord& rec, const features::AssemblyOptions& opt,
                 const fs::path& dir) {
  fs::create_directories(dir);
  preprocess::DebugTrace trace;
  trace.raw = rec.lead_ii;
  trace.baseline_removed = preprocess::remove_baseline(rec.lead_ii, opt.filter);
  trace.bandpassed =
      preprocess::filter_signal(trace.baseline_removed, preprocess::design_fir_bandpass(opt.filter));
  const auto id = rec.header.record_id;
  preprocess::write_debug_csv(trace, (dir / (id + "_signal.csv")).string());
  const auto seg = preprocess::segment_beats(trace.bandpassed, rec.beats, id,
                                             {.drop_edge_beats = true});
  std::vector<fiducials::Fiducials> fids;
  for (const auto& s : seg.segments) fids.push_back(fiducials::locate_fiducials(s, opt.windows));
  fiducials::write_fiducials_csv(seg.segments, fids, (dir / (id + "_fiducials.csv")).string());
}

}  // namespace

json config_to_json(const PipelineConfig& c) {
  return {{"data_dir", c.data_dir.string()},
          {"out_dir", c.out_dir.string()},
          {"seed", c.seed},
          {"threshold", c.threshold},
          {"abs_threshold", c.abs_threshold},
          {"epochs", c.model.epochs},
          {"lr", c.model.learning_rate},
          {"gnn_hidden", c.model.gnn_hidden},
          {"lin_hidden", c.model.lin_hidden},
          {"batch_size", c.model.batch_size},
          {"class_weights", c.model.class_weights},
          {"debug_records", c.debug_records}};
}

void apply_config_json(PipelineConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "data_dir") c.data_dir = v.get<std::string>();
    else if (key == "out_dir") c.out_dir = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "threshold") c.threshold = v.get<double>();
    else if (key == "abs_threshold") c.abs_threshold = v.get<bool>();
    else if (key == "epochs") c.model.epochs = v.get<std::size_t>();
    else if (key == "lr") c.model.learning_rate = v.get<double>();
    else if (key == "gnn_hidden") c.model.gnn_hidden = v.get<std::size_t>();
    else if (key == "lin_hidden") c.model.lin_hidden = v.get<std::size_t>();
    else if (key == "batch_size") c.model.batch_size = v.get<std::size_t>();
    else if (key == "class_weights") c.model.class_weights = v.get<bool>();
    else if (key == "debug_records") c.debug_records = v.get<std::vector<std::string>>();
    else throw std::invalid_argument("unknown config key: " + key);
  }
}

fs::path resolve_data_dir(const fs::path& dir) {
  if (dir.empty()) return dir;
  const auto nested = dir / "mitdb";
  if (fs::is_directory(nested) && !fs::exists(dir / "100.hea")) return nested;
  return dir;
}

void run_ingest(const PipelineConfig& c) {
  const std::string stage = "ingest";
  StageTimer timer(stage);
  if (c.data_dir.empty()) {
    throw StageError(stage, "no data directory; pass --data-dir or set ECG_DATA_DIR");
  }
  const auto dir = resolve_data_dir(c.data_dir);
  if (!fs::is_directory(dir)) throw StageError(stage, "not a directory: " + dir.string());
  const auto& split = wfdb::DatasetSplit::standard();
  wfdb::LoadedDataset ds;
  try {
    ds = wfdb::load_dataset(dir, split);
  } catch (const wfdb::DatasetError& e) {
    std::string msg = std::to_string(e.failures().size()) + " record(s) failed to load";
    for (const auto& f : e.failures()) msg += "\n  " + f;
    throw StageError(stage, msg);
  }

  const Artifacts art{c.out_dir};
  fs::create_directories(art.audit_dir());
  json records = json::array();
  for (const auto* group : {&ds.train, &ds.test}) {
    const std::string name = group == &ds.train ? "train" : "test";
    for (const auto& rec : *group) {
      std::array<std::size_t, kNumClasses> per_class{};
      std::size_t unmapped = 0;
      for (const auto& b : rec.beats) {
        if (b.aami_class) ++per_class[class_index(*b.aami_class)];
        else ++unmapped;
      }
      records.push_back({{"id", rec.header.record_id},
                         {"split", name},
                         {"n_samples", rec.header.n_samples},
                         {"lead_ii_channel", rec.lead_ii_channel},
                         {"beats", rec.beats.size()},
                         {"N", per_class[0]},
                         {"S", per_class[1]},
                         {"V", per_class[2]},
                         {"other", unmapped}});
      wfdb::write_beat_audit_csv(rec, art.audit_dir() / (rec.header.record_id + ".csv"));
    }
  }
  write_json(art.manifest(), {{"stage", stage},
                              {"data_dir", fs::absolute(dir).string()},
                              {"config", config_to_json(c)},
                              {"records", records}});
  log(stage, "loaded " + std::to_string(ds.train.size()) + " train and " +
                 std::to_string(ds.test.size()) + " test records from " + dir.string());
}

void run_features(const PipelineConfig& c) {
  const std::string stage = "features";
  StageTimer timer(stage);
  const Artifacts art{c.out_dir};
  const auto manifest = read_json(stage, art.manifest(), "ingest");
  const fs::path dir = manifest.at("data_dir").get<std::string>();
  const wfdb::DatasetSplit split{id_list(manifest, "train"), id_list(manifest, "test")};

  wfdb::LoadedDataset ds;
  try {
    ds = wfdb::load_dataset(dir, split);
  } catch (const wfdb::WfdbError& e) {
    throw StageError(stage, e.what());
  }
  const features::AssemblyOptions opt;
  features::AssemblyReport train_report, test_report;
  const auto train = features::assemble_dataset(ds.train, "train", opt, &train_report);
  const auto test = features::assemble_dataset(ds.test, "test", opt, &test_report);
  if (train.rows() < 2) throw StageError(stage, "fewer than two training beats");

  fs::create_directories(art.features_train().parent_path());
  features::write_feature_csv(train, art.features_train());
  features::write_feature_csv(test, art.features_test());
  const auto stats = features::fit_standardization(train.values);
  write_json(art.stats(), {{"config", config_to_json(c)},
                           {"features", features::stats_to_json(stats)}});
  json order = json::array();
  for (auto name : features::feature_names()) order.push_back(std::string(name));
  write_json(art.feature_order(), order);
  write_json(art.features_summary(),
             {{"train", assembly_json(train_report)}, {"test", assembly_json(test_report)}});

  for (const auto& id : c.debug_records) {
    bool found = false;
    for (const auto* group : {&ds.train, &ds.test}) {
      for (const auto& rec : *group) {
        if (rec.header.record_id == id) {
          write_debug(rec, opt, art.debug_dir());
          found = true;
        }
      }
    }
    if (!found) log(stage, "debug record " + id + " not in the dataset; skipped");
  }

  for (std::size_t i = 0; i < stats.flagged.size(); ++i) {
    if (stats.flagged[i]) {
      log(stage, "warning: zero-variance training feature " +
                     std::string(features::feature_names()[i]));
    }
  }
  log(stage, "train rows " + std::to_string(train.rows()) + " (degenerate " +
                 std::to_string(train_report.degenerate) + "), test rows " +
                 std::to_string(test.rows()) + " (degenerate " +
                 std::to_string(test_report.degenerate) + ")");
}

void run_graph(const PipelineConfig& c) {
  const std::string stage = "graph";
  StageTimer timer(stage);
  const Artifacts art{c.out_dir};
  const auto manifest = read_json(stage, art.manifest(), "ingest");
  const auto train = read_features(stage, art.features_train(), "train");

  // Leakage guard: only training-split records may shape the graph.
  const auto train_ids = id_list(manifest, "train");
  const std::set<std::string> allowed(train_ids.begin(), train_ids.end());
  for (const auto& id : train.record_ids) {
    if (!allowed.count(id)) {
      throw StageError(stage, "record " + id + " in the training features is not a training record");
    }
  }
  if (train.rows() < 2) throw StageError(stage, "fewer than two training rows");

  graph::GraphSpec g;
  try {
    g = graph::build_graph(train.values, c.threshold, c.abs_threshold);
  } catch (const std::invalid_argument& e) {
    throw StageError(stage, e.what());
  }
  auto j = graph::graph_to_json(g);
  j["graph_hash"] = graph::graph_hash(g);
  j["train_rows"] = train.rows();
  j["config"] = config_to_json(c);
  write_json(art.graph(), j);
  for (std::size_t i = 0; i < g.zero_variance.size(); ++i) {
    if (g.zero_variance[i]) {
      log(stage, "warning: zero-variance feature " + std::string(features::feature_names()[i]) +
                     " has no correlation edges");
    }
  }
  log(stage, std::to_string(g.edge_index.size()) + " directed edges (incl. self-loops) at " +
                 (c.abs_threshold ? "|corr| >= " : "corr >= ") + features::format_double(c.threshold));
}

namespace {

struct Prepared {
  std::shared_ptr<const graph::GraphSpec> graph;
  std::string graph_hash;
  features::StandardizationStats stats;
};

Prepared load_graph_and_stats(const std::string& stage, const Artifacts& art) {
  Prepared p;
  const auto gj = read_json(stage, art.graph(), "graph");
  try {
    p.graph = std::make_shared<const graph::GraphSpec>(graph::graph_from_json(gj));
  } catch (const std::exception& e) {
    throw StageError(stage, std::string("invalid graph artifact: ") + e.what());
  }
  p.graph_hash = graph::graph_hash(*p.graph);
  if (gj.contains("graph_hash") && gj["graph_hash"].get<std::string>() != p.graph_hash) {
    throw StageError(stage, "graph hash mismatch in " + art.graph().string());
  }
  const auto sj = read_json(stage, art.stats(), "features");
  p.stats = features::stats_from_json(sj.at("features"));
  return p;
}

}  // namespace

void run_train(const PipelineConfig& c) {
  const std::string stage = "train";
  StageTimer timer(stage);
  const Artifacts art{c.out_dir};
  const auto train = read_features(stage, art.features_train(), "train");
  const auto prep = load_graph_and_stats(stage, art);
  if (prep.graph->num_nodes != features::kNumFeatures) {
    throw StageError(stage, "graph has " + std::to_string(prep.graph->num_nodes) + " nodes");
  }

  auto mc = c.model;
  mc.seed = c.seed;
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw StageError(stage, e.what());
  }
  const auto dataset = graph::build_graph_samples(features::standardize(train.values, prep.stats),
                                                  train.labels, prep.graph);
  const std::size_t every = std::max<std::size_t>(1, mc.epochs / 10);
  model::TrainResult result;
  try {
    result = model::train(dataset, mc, [&](std::size_t epoch, double loss) {
      if ((epoch + 1) % every == 0 || epoch + 1 == mc.epochs) {
        log(stage, "epoch " + std::to_string(epoch + 1) + "/" + std::to_string(mc.epochs) +
                       " loss " + features::format_double(loss));
      }
    });
  } catch (const model::TrainingError& e) {
    throw StageError(stage, e.what());
  }

  model::Checkpoint ck{mc, prep.graph_hash, result.params, result.loss_history};
  auto j = model::checkpoint_to_json(ck);
  j["pipeline_config"] = config_to_json(c);
  write_json(art.checkpoint(), j);

  std::ofstream curve(art.loss_curve());
  curve << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    curve << e + 1 << ',' << features::format_double(result.loss_history[e]) << '\n';
  }
  const auto topo = model::Topology::from_graph(*prep.graph);
  log(stage, "training accuracy " +
                 features::format_double(100.0 * model::accuracy(result.params, topo, dataset.samples)) +
                 "%");
}

void run_eval(const PipelineConfig& c) {
  const std::string stage = "eval";
  StageTimer timer(stage);
  const Artifacts art{c.out_dir};
  if (!fs::exists(art.checkpoint())) {
    throw StageError(stage, "no checkpoint at " + art.checkpoint().string() + "; run `train` first");
  }
  const auto ck = model::checkpoint_from_json(read_json(stage, art.checkpoint(), "train"));
  const auto prep = load_graph_and_stats(stage, art);
  if (ck.graph_hash != prep.graph_hash) {
    throw StageError(stage, "checkpoint was trained on a different graph; rerun `train`");
  }
  const auto train = read_features(stage, art.features_train(), "train");
  const auto test = read_features(stage, art.features_test(), "test");
  if (test.rows() == 0) throw StageError(stage, "test split has no beats");

  const auto topo = model::Topology::from_graph(*prep.graph);
  const auto preds =
      model::predict_batch(ck.params, topo, features::standardize(test.values, prep.stats));

  eval::MetricsReport report;
  report.confusion = eval::confusion_matrix(preds, test.labels);
  report.metrics = eval::precision_recall(report.confusion);
  report.train = split_counts(train);
  report.test = split_counts(test);
  report.config = config_to_json(c);
  report.seed = c.seed;
  report.generated_at = utc_timestamp();

  auto j = eval::report_to_json(report);
  j["graph_hash"] = prep.graph_hash;
  write_json(art.report_json(), j);
  const auto table = eval::render_text_table(report);
  write_text(art.report_text(), table);
  std::cout << table;
}

void run_all(const PipelineConfig& c) {
  run_ingest(c);
  run_features(c);
  run_graph(c);
  run_train(c);
  run_eval(c);
}

void run_stage(const std::string& stage, const PipelineConfig& c) {
  if (stage == "ingest") run_ingest(c);
  else if (stage == "features") run_features(c);
  else if (stage == "graph") run_graph(c);
  else if (stage == "train") run_train(c);
  else if (stage == "eval") run_eval(c);
  else if (stage == "run-all") run_all(c);
  else throw StageError(stage, "unknown stage");
}

json strip_volatile(json report) {
  report.erase("generated_at");
  return report;
}

}  // namespace ecggraph::pipeline
