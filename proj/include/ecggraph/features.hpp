#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecggraph/fiducials.hpp"
#include "ecggraph/matrix.hpp"
#include "ecggraph/preprocess.hpp"
#include "ecggraph/types.hpp"
#include "ecggraph/wfdb.hpp"
#include "json.hpp"

namespace ecggraph::features {

inline constexpr std::size_t kNumFeatures = 20;

// Row counts of the reference train/test feature matrices.
inline constexpr std::size_t kReferenceTrainRows = 50557;
inline constexpr std::size_t kReferenceTestRows = 49273;

// Canonical column order: the feature table read row by row, left to right.
enum class Feature : std::size_t {
  PrAmp, PrSpan, StSpan, PrevRr,
  QrAmp, QrSpan, PqSpan, PostRr,
  RsAmp, RsSpan, PtSpan, MeanRr,
  RtAmp, RtSpan, QtSpan, MedianRr,
  BeatMax, BeatMin, BeatVar, BeatRms,
};

const std::array<std::string_view, kNumFeatures>& feature_names();

constexpr std::size_t index(Feature f) { return static_cast<std::size_t>(f); }

using FeatureVector = std::array<double, kNumFeatures>;

struct RrFeatures {
  double prev_rr = 0, post_rr = 0, mean_rr = 0, median_rr = 0;  // seconds
};

struct RecordRr {
  double mean_rr = 0, median_rr = 0;
};

/// Mean and median of all consecutive R-R intervals of a record.
RecordRr record_rr_stats(std::span<const std::size_t> r_positions, double fs = kSamplingRate);

/// Throws std::invalid_argument for the first and last beat, which lack a
/// neighbour on one side.
RrFeatures rr_features(std::span<const std::size_t> r_positions, std::size_t beat_index,
                       double fs = kSamplingRate);

struct Morphology {
  double pr_amp = 0, qr_amp = 0, rs_amp = 0, rt_amp = 0;
  double pr_span = 0, qr_span = 0, rs_span = 0, rt_span = 0;
  double st_span = 0, pq_span = 0, pt_span = 0, qt_span = 0;
  double beat_max = 0, beat_min = 0, beat_var = 0, beat_rms = 0;
};

Morphology morphology_features(std::span<const double> segment,
                               const fiducials::Fiducials& fid, double fs = kSamplingRate);

FeatureVector combine(const Morphology& m, const RrFeatures& rr);

struct FeatureTable {
  std::string split;
  Matrix values{0, kNumFeatures};
  std::vector<AamiClass> labels;
  std::vector<std::string> record_ids;
  std::vector<std::size_t> r_samples;
  std::vector<std::uint8_t> degenerate;

  std::size_t rows() const { return values.rows(); }
  void append(const FeatureVector& v, AamiClass label, const std::string& record_id,
              std::size_t r_sample, bool is_degenerate);
};

struct AssemblyOptions {
  preprocess::FilterSpec filter;
  fiducials::FiducialWindows windows;
};

struct AssemblyReport {
  std::size_t records = 0;
  std::size_t labeled_beats = 0;
  std::size_t rows = 0;
  std::size_t skipped_edge = 0;
  std::size_t skipped_out_of_bounds = 0;
  std::size_t degenerate = 0;

  void merge(const AssemblyReport& other);
};

/// Preprocess, segment and compute features for one record. The first and
/// last annotated beats are dropped.
FeatureTable extract_record_features(const wfdb::EcgRecord& record,
                                     const AssemblyOptions& options = {},
                                     AssemblyReport* report = nullptr);

FeatureTable assemble_dataset(std::span<const wfdb::EcgRecord> records, const std::string& split,
                              const AssemblyOptions& options = {},
                              AssemblyReport* report = nullptr);

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> flagged;  // zero-variance columns (stddev replaced by 1)

  bool operator==(const StandardizationStats&) const = default;
};

/// Per-column mean and population standard deviation.
StandardizationStats fit_standardization(const Matrix& values);
Matrix standardize(const Matrix& values, const StandardizationStats& stats);

nlohmann::json stats_to_json(const StandardizationStats& stats);
StandardizationStats stats_from_json(const nlohmann::json& j);

/// CSV with the canonical feature names followed by label, record_id,
/// r_sample and degenerate columns. Values use shortest round-trip form.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path, const std::string& split);

std::string format_double(double v);

}  // namespace ecggraph::features
