#include "ecggraph/eval.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ecggraph::eval {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (auto v : counts[c]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const AamiClass> predictions,
                                 std::span<const AamiClass> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion_matrix: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++cm.counts[class_index(labels[i])][class_index(predictions[i])];
  }
  return cm;
}

ClassMetrics precision_recall(const ConfusionMatrix& cm) {
  ClassMetrics m;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(cm.counts[c][c]);
    const auto col = cm.column_sum(c);
    const auto row = cm.row_sum(c);
    m.precision_undefined[c] = col == 0;
    m.recall_undefined[c] = row == 0;
    m.precision[c] = col == 0 ? 0.0 : 100.0 * tp / static_cast<double>(col);
    m.recall[c] = row == 0 ? 0.0 : 100.0 * tp / static_cast<double>(row);
  }
  return m;
}

const std::vector<LiteratureRow>& literature_rows() {
  static const std::vector<LiteratureRow> rows{
      {"Lin et al. [4]", {99.3, 31.6, 73.7}, {91.6, 81.4, 86.2}},
      {"Garcia et al. [5]", {98.0, 53.0, 59.4}, {94.0, 62.0, 87.3}},
      {"Dias et al. [7]", {99.4, 39.9, 94.6}, {94.5, 92.5, 88.6}},
      {"Zhou et al. [8]", {98.8, 53.8, 92.3}, {96.9, 89.3, 93.3}},
      {"This work (published)", {97.35, 68.83, 60.69}, {94.98, 54.25, 88.29}},
  };
  return rows;
}

namespace {

nlohmann::json counts_to_json(const SplitCounts& s) {
  return {{"rows", s.rows},
          {"degenerate", s.degenerate},
          {"N", s.per_class[0]},
          {"S", s.per_class[1]},
          {"V", s.per_class[2]}};
}

SplitCounts counts_from_json(const nlohmann::json& j) {
  SplitCounts s;
  s.rows = j.at("rows").get<std::uint64_t>();
  s.degenerate = j.at("degenerate").get<std::uint64_t>();
  s.per_class = {j.at("N").get<std::uint64_t>(), j.at("S").get<std::uint64_t>(),
                 j.at("V").get<std::uint64_t>()};
  return s;
}

nlohmann::json per_class_json(const std::array<double, kNumClasses>& v) {
  return {{"N", v[0]}, {"S", v[1]}, {"V", v[2]}};
}

std::array<double, kNumClasses> per_class_from_json(const nlohmann::json& j) {
  return {j.at("N").get<double>(), j.at("S").get<double>(), j.at("V").get<double>()};
}

nlohmann::json flags_json(const std::array<bool, kNumClasses>& v) {
  return {{"N", v[0]}, {"S", v[1]}, {"V", v[2]}};
}

std::array<bool, kNumClasses> flags_from_json(const nlohmann::json& j) {
  return {j.at("N").get<bool>(), j.at("S").get<bool>(), j.at("V").get<bool>()};
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json lit = nlohmann::json::array();
  for (const auto& row : r.literature) {
    lit.push_back({{"method", row.method},
                   {"precision", per_class_json(row.precision)},
                   {"recall", per_class_json(row.recall)}});
  }
  nlohmann::json cm = nlohmann::json::array();
  for (const auto& row : r.confusion.counts) cm.push_back(row);
  return {
      {"precision", per_class_json(r.metrics.precision)},
      {"recall", per_class_json(r.metrics.recall)},
      {"precision_undefined", flags_json(r.metrics.precision_undefined)},
      {"recall_undefined", flags_json(r.metrics.recall_undefined)},
      {"confusion_matrix", cm},
      {"beat_counts", {{"train", counts_to_json(r.train)}, {"test", counts_to_json(r.test)}}},
      {"literature", lit},
      {"config", r.config},
      {"seed", r.seed},
      {"generated_at", r.generated_at},
  };
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.metrics.precision = per_class_from_json(j.at("precision"));
  r.metrics.recall = per_class_from_json(j.at("recall"));
  r.metrics.precision_undefined = flags_from_json(j.at("precision_undefined"));
  r.metrics.recall_undefined = flags_from_json(j.at("recall_undefined"));
  const auto& cm = j.at("confusion_matrix");
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      r.confusion.counts[i][k] = cm.at(i).at(k).get<std::uint64_t>();
    }
  }
  r.train = counts_from_json(j.at("beat_counts").at("train"));
  r.test = counts_from_json(j.at("beat_counts").at("test"));
  r.literature.clear();
  for (const auto& row : j.at("literature")) {
    r.literature.push_back({row.at("method").get<std::string>(),
                            per_class_from_json(row.at("precision")),
                            per_class_from_json(row.at("recall"))});
  }
  r.config = j.at("config");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.generated_at = j.value("generated_at", std::string{});
  return r;
}

std::string render_text_table(const MetricsReport& r) {
  std::ostringstream out;
  char buf[160];
  auto line = [&](const std::string& name, const std::array<double, kNumClasses>& p,
                  const std::array<double, kNumClasses>& rc) {
    std::snprintf(buf, sizeof(buf), "%-26s %7.2f %7.2f %7.2f   %7.2f %7.2f %7.2f\n",
                  name.c_str(), p[0], p[1], p[2], rc[0], rc[1], rc[2]);
    out << buf;
  };
  std::snprintf(buf, sizeof(buf), "%-26s %-23s   %-23s\n", "Methods", "Precision (%)",
                "Recall (%)");
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-26s %7s %7s %7s   %7s %7s %7s\n", "", "N", "S", "V", "N",
                "S", "V");
  out << buf;
  out << std::string(76, '-') << '\n';
  for (const auto& row : r.literature) line(row.method, row.precision, row.recall);
  line("This work (reproduction)", r.metrics.precision, r.metrics.recall);
  out << '\n';
  out << "Confusion matrix (rows true, columns predicted; N S V):\n";
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    std::snprintf(buf, sizeof(buf), "  %c %10llu %10llu %10llu\n", class_char(kAllClasses[i]),
                  static_cast<unsigned long long>(r.confusion.counts[i][0]),
                  static_cast<unsigned long long>(r.confusion.counts[i][1]),
                  static_cast<unsigned long long>(r.confusion.counts[i][2]));
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "Beats: train %llu (N %llu, S %llu, V %llu), test %llu (N %llu, S %llu, V %llu); "
                "degenerate fiducials: train %llu, test %llu\n",
                static_cast<unsigned long long>(r.train.rows),
                static_cast<unsigned long long>(r.train.per_class[0]),
                static_cast<unsigned long long>(r.train.per_class[1]),
                static_cast<unsigned long long>(r.train.per_class[2]),
                static_cast<unsigned long long>(r.test.rows),
                static_cast<unsigned long long>(r.test.per_class[0]),
                static_cast<unsigned long long>(r.test.per_class[1]),
                static_cast<unsigned long long>(r.test.per_class[2]),
                static_cast<unsigned long long>(r.train.degenerate),
                static_cast<unsigned long long>(r.test.degenerate));
  out << buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (r.metrics.precision_undefined[c]) {
      out << "note: no beats predicted as " << class_char(kAllClasses[c])
          << "; precision reported as 0\n";
    }
    if (r.metrics.recall_undefined[c]) {
      out << "note: no test beats of class " << class_char(kAllClasses[c])
          << "; recall reported as 0\n";
    }
  }
  return out.str();
}

}  // namespace ecggraph::eval
