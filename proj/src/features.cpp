#include "ecggraph/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ecggraph::features {

namespace {

constexpr std::array<std::string_view, kNumFeatures> kNames{
    "PR_amp",  "PR_span", "ST_span", "prev_RR",  "QR_amp",   "QR_span",  "PQ_span",
    "post_RR", "RS_amp",  "RS_span", "PT_span",  "mean_RR",  "RT_amp",   "RT_span",
    "QT_span", "median_RR", "beat_max", "beat_min", "beat_var", "beat_rms",
};

const std::array<std::string_view, 4> kTrailingColumns{"label", "record_id", "r_sample",
                                                       "degenerate"};

double span_seconds(std::size_t a, std::size_t b, double fs) {
  const std::size_t d = a > b ? a - b : b - a;
  return static_cast<double>(d) / fs;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) +
                             ": not a number '" + s + "'");
  }
  return v;
}

}  // namespace

const std::array<std::string_view, kNumFeatures>& feature_names() { return kNames; }

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

RecordRr record_rr_stats(std::span<const std::size_t> r_positions, double fs) {
  if (r_positions.size() < 2) {
    throw std::invalid_argument("record_rr_stats: need at least two R positions");
  }
  std::vector<double> rr(r_positions.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 1; i < r_positions.size(); ++i) {
    rr[i - 1] = static_cast<double>(r_positions[i] - r_positions[i - 1]) / fs;
    sum += rr[i - 1];
  }
  RecordRr out;
  out.mean_rr = sum / static_cast<double>(rr.size());
  std::sort(rr.begin(), rr.end());
  const std::size_t m = rr.size() / 2;
  out.median_rr = rr.size() % 2 ? rr[m] : 0.5 * (rr[m - 1] + rr[m]);
  return out;
}

RrFeatures rr_features(std::span<const std::size_t> r_positions, std::size_t beat_index,
                       double fs) {
  if (beat_index == 0 || beat_index + 1 >= r_positions.size()) {
    throw std::invalid_argument("rr_features: beat " + std::to_string(beat_index) +
                                " has no neighbour on both sides");
  }
  const auto stats = record_rr_stats(r_positions, fs);
  RrFeatures out;
  out.prev_rr = static_cast<double>(r_positions[beat_index] - r_positions[beat_index - 1]) / fs;
  out.post_rr = static_cast<double>(r_positions[beat_index + 1] - r_positions[beat_index]) / fs;
  out.mean_rr = stats.mean_rr;
  out.median_rr = stats.median_rr;
  return out;
}

Morphology morphology_features(std::span<const double> segment,
                               const fiducials::Fiducials& f, double fs) {
  Morphology m;
  m.pr_amp = f.a_p - f.a_r;
  m.qr_amp = f.a_q - f.a_r;
  m.rs_amp = f.a_r - f.a_s;
  m.rt_amp = f.a_r - f.a_t;
  m.pr_span = span_seconds(f.p, f.r, fs);
  m.qr_span = span_seconds(f.q, f.r, fs);
  m.rs_span = span_seconds(f.r, f.s, fs);
  m.rt_span = span_seconds(f.r, f.t, fs);
  m.st_span = span_seconds(f.s, f.t, fs);
  m.pq_span = span_seconds(f.p, f.q, fs);
  m.pt_span = span_seconds(f.p, f.t, fs);
  m.qt_span = span_seconds(f.q, f.t, fs);

  if (segment.empty()) return m;
  const auto [lo, hi] = std::minmax_element(segment.begin(), segment.end());
  m.beat_min = *lo;
  m.beat_max = *hi;
  const double n = static_cast<double>(segment.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : segment) {
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double v : segment) var += (v - mean) * (v - mean);
  m.beat_var = var / n;
  m.beat_rms = std::sqrt(sum_sq / n);
  return m;
}

FeatureVector combine(const Morphology& m, const RrFeatures& rr) {
  FeatureVector v{};
  v[index(Feature::PrAmp)] = m.pr_amp;
  v[index(Feature::PrSpan)] = m.pr_span;
  v[index(Feature::StSpan)] = m.st_span;
  v[index(Feature::PrevRr)] = rr.prev_rr;
  v[index(Feature::QrAmp)] = m.qr_amp;
  v[index(Feature::QrSpan)] = m.qr_span;
  v[index(Feature::PqSpan)] = m.pq_span;
  v[index(Feature::PostRr)] = rr.post_rr;
  v[index(Feature::RsAmp)] = m.rs_amp;
  v[index(Feature::RsSpan)] = m.rs_span;
  v[index(Feature::PtSpan)] = m.pt_span;
  v[index(Feature::MeanRr)] = rr.mean_rr;
  v[index(Feature::RtAmp)] = m.rt_amp;
  v[index(Feature::RtSpan)] = m.rt_span;
  v[index(Feature::QtSpan)] = m.qt_span;
  v[index(Feature::MedianRr)] = rr.median_rr;
  v[index(Feature::BeatMax)] = m.beat_max;
  v[index(Feature::BeatMin)] = m.beat_min;
  v[index(Feature::BeatVar)] = m.beat_var;
  v[index(Feature::BeatRms)] = m.beat_rms;
  return v;
}

void FeatureTable::append(const FeatureVector& v, AamiClass label, const std::string& record_id,
                          std::size_t r_sample, bool is_degenerate) {
  values.append_row(v);
  labels.push_back(label);
  record_ids.push_back(record_id);
  r_samples.push_back(r_sample);
  degenerate.push_back(is_degenerate ? 1 : 0);
}

void AssemblyReport::merge(const AssemblyReport& other) {
  records += other.records;
  labeled_beats += other.labeled_beats;
  rows += other.rows;
  skipped_edge += other.skipped_edge;
  skipped_out_of_bounds += other.skipped_out_of_bounds;
  degenerate += other.degenerate;
}

FeatureTable extract_record_features(const wfdb::EcgRecord& record,
                                     const AssemblyOptions& options, AssemblyReport* report) {
  const auto filtered = preprocess::preprocess_signal(record.lead_ii, options.filter);
  const auto seg = preprocess::segment_beats(filtered, record.beats, record.header.record_id,
                                             {.drop_edge_beats = true});

  std::vector<std::size_t> r_positions;
  r_positions.reserve(record.beats.size());
  for (const auto& b : record.beats) r_positions.push_back(b.sample_index);

  FeatureTable table;
  AssemblyReport local;
  local.records = 1;
  local.skipped_edge = seg.skipped_no_neighbor;
  local.skipped_out_of_bounds = seg.skipped_out_of_bounds;
  for (const auto& b : record.beats) {
    if (b.aami_class) ++local.labeled_beats;
  }
  if (!seg.segments.empty()) {
    const auto rec_rr = record_rr_stats(r_positions, options.filter.sampling_rate);
    const double fs = options.filter.sampling_rate;
    for (const auto& s : seg.segments) {
      const auto fid = fiducials::locate_fiducials(s, options.windows);
      const std::size_t i = s.beat_index;
      RrFeatures rr;
      rr.prev_rr = static_cast<double>(r_positions[i] - r_positions[i - 1]) / fs;
      rr.post_rr = static_cast<double>(r_positions[i + 1] - r_positions[i]) / fs;
      rr.mean_rr = rec_rr.mean_rr;
      rr.median_rr = rec_rr.median_rr;
      table.append(combine(morphology_features(s.samples, fid, fs), rr), s.label, s.record_id,
                   s.r_sample_index, fid.degenerate);
      if (fid.degenerate) ++local.degenerate;
    }
  }
  local.rows = table.rows();
  if (report) report->merge(local);
  return table;
}

FeatureTable assemble_dataset(std::span<const wfdb::EcgRecord> records, const std::string& split,
                              const AssemblyOptions& options, AssemblyReport* report) {
  FeatureTable out;
  out.split = split;
  for (const auto& rec : records) {
    auto part = extract_record_features(rec, options, report);
    for (std::size_t r = 0; r < part.rows(); ++r) {
      out.values.append_row(part.values.row(r));
    }
    out.labels.insert(out.labels.end(), part.labels.begin(), part.labels.end());
    out.record_ids.insert(out.record_ids.end(), part.record_ids.begin(), part.record_ids.end());
    out.r_samples.insert(out.r_samples.end(), part.r_samples.begin(), part.r_samples.end());
    out.degenerate.insert(out.degenerate.end(), part.degenerate.begin(), part.degenerate.end());
  }
  return out;
}

StandardizationStats fit_standardization(const Matrix& values) {
  const std::size_t n = values.rows();
  const std::size_t d = values.cols();
  if (n == 0) throw std::invalid_argument("fit_standardization: empty matrix");
  StandardizationStats stats;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  stats.flagged.assign(d, false);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) stats.mean[c] += values(r, c);
  }
  for (auto& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = values(r, c) - stats.mean[c];
      stats.stddev[c] += dv * dv;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(n));
    if (!(stats.stddev[c] > 0.0)) {
      stats.stddev[c] = 1.0;
      stats.flagged[c] = true;
    }
  }
  return stats;
}

Matrix standardize(const Matrix& values, const StandardizationStats& stats) {
  if (stats.mean.size() != values.cols() || stats.stddev.size() != values.cols()) {
    throw std::invalid_argument("standardize: stats width does not match matrix");
  }
  Matrix out(values.rows(), values.cols());
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      // A flagged column has every value equal to its mean and passes through.
      out(r, c) = stats.flagged[c] ? values(r, c)
                                   : (values(r, c) - stats.mean[c]) / stats.stddev[c];
    }
  }
  return out;
}

nlohmann::json stats_to_json(const StandardizationStats& stats) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t c = 0; c < stats.mean.size(); ++c) {
    arr.push_back({{"feature", c < kNumFeatures ? std::string(kNames[c]) : std::to_string(c)},
                   {"mean", stats.mean[c]},
                   {"std", stats.stddev[c]},
                   {"flagged", static_cast<bool>(stats.flagged[c])}});
  }
  return arr;
}

StandardizationStats stats_from_json(const nlohmann::json& j) {
  StandardizationStats stats;
  for (const auto& e : j) {
    stats.mean.push_back(e.at("mean").get<double>());
    stats.stddev.push_back(e.at("std").get<double>());
    stats.flagged.push_back(e.value("flagged", false));
  }
  return stats;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < kNumFeatures; ++c) out << kNames[c] << ',';
  for (std::size_t c = 0; c < kTrailingColumns.size(); ++c) {
    out << kTrailingColumns[c] << (c + 1 < kTrailingColumns.size() ? ',' : '\n');
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) out << format_double(table.values(r, c)) << ',';
    out << class_char(table.labels[r]) << ',' << table.record_ids[r] << ','
        << table.r_samples[r] << ',' << static_cast<int>(table.degenerate[r]) << '\n';
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path, const std::string& split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.size() != kNumFeatures + kTrailingColumns.size()) {
    throw std::runtime_error(path.string() + ": unexpected column count");
  }
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    if (header[c] != kNames[c]) {
      throw std::runtime_error(path.string() + ": column " + std::to_string(c) + " is '" +
                               header[c] + "', expected '" + std::string(kNames[c]) + "'");
    }
  }
  FeatureTable table;
  table.split = split;
  std::size_t lineno = 1;
  FeatureVector v{};
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": wrong number of cells");
    }
    for (std::size_t c = 0; c < kNumFeatures; ++c) v[c] = parse_double(cells[c], path, lineno);
    const auto label = class_from_string(cells[kNumFeatures]);
    if (!label) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad label '" +
                               cells[kNumFeatures] + "'");
    }
    table.append(v, *label, cells[kNumFeatures + 1],
                 static_cast<std::size_t>(parse_double(cells[kNumFeatures + 2], path, lineno)),
                 cells[kNumFeatures + 3] == "1");
  }
  return table;
}

}  // namespace ecggraph::features
