#pragma once

// Stage orchestration: ingest -> features -> graph -> train -> eval. Each
// stage reads the artifacts persisted by the previous one from the output
// directory and writes its own.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecggraph/model.hpp"
#include "json.hpp"

namespace ecggraph::pipeline {

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  double threshold = 0.9;
  bool abs_threshold = false;
  model::ModelConfig model;
  // Records for which the features stage also dumps signal and fiducial
  // debug CSVs.
  std::vector<std::string> debug_records;

  bool operator==(const PipelineConfig&) const = default;
};

nlohmann::json config_to_json(const PipelineConfig& c);

/// Overrides the fields present in `j`; unknown keys are rejected.
void apply_config_json(PipelineConfig& c, const nlohmann::json& j);

/// Accepts either a directory holding the records or one with a `mitdb`
/// subdirectory.
std::filesystem::path resolve_data_dir(const std::filesystem::path& dir);

struct Artifacts {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "ingest" / "manifest.json"; }
  std::filesystem::path audit_dir() const { return root / "ingest" / "audit"; }
  std::filesystem::path features_train() const { return root / "features" / "features_train.csv"; }
  std::filesystem::path features_test() const { return root / "features" / "features_test.csv"; }
  std::filesystem::path stats() const { return root / "features" / "stats.json"; }
  std::filesystem::path feature_order() const { return root / "features" / "feature_order.json"; }
  std::filesystem::path features_summary() const { return root / "features" / "summary.json"; }
  std::filesystem::path debug_dir() const { return root / "features" / "debug"; }
  std::filesystem::path graph() const { return root / "graph" / "graph.json"; }
  std::filesystem::path checkpoint() const { return root / "train" / "checkpoint.json"; }
  std::filesystem::path loss_curve() const { return root / "train" / "loss_curve.csv"; }
  std::filesystem::path report_json() const { return root / "eval" / "report.json"; }
  std::filesystem::path report_text() const { return root / "eval" / "report.txt"; }
};

void run_ingest(const PipelineConfig& c);
void run_features(const PipelineConfig& c);
void run_graph(const PipelineConfig& c);
void run_train(const PipelineConfig& c);
void run_eval(const PipelineConfig& c);
void run_all(const PipelineConfig& c);

/// Dispatches by stage name ("ingest", ..., "run-all").
void run_stage(const std::string& stage, const PipelineConfig& c);

/// Removes fields that legitimately differ between identical runs.
nlohmann::json strip_volatile(nlohmann::json report);

}  // namespace ecggraph::pipeline
