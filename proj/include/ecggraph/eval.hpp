#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecggraph/types.hpp"
#include "json.hpp"

namespace ecggraph::eval {

/// Rows are true classes, columns predicted, both in N, S, V order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t column_sum(std::size_t c) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const AamiClass> predictions,
                                 std::span<const AamiClass> labels);

struct ClassMetrics {
  std::array<double, kNumClasses> precision{};  // percent
  std::array<double, kNumClasses> recall{};     // percent
  // Set where the denominator was zero and the metric was reported as 0.
  std::array<bool, kNumClasses> precision_undefined{};
  std::array<bool, kNumClasses> recall_undefined{};
  bool operator==(const ClassMetrics&) const = default;
};

ClassMetrics precision_recall(const ConfusionMatrix& cm);

/// A published comparison row (display only).
struct LiteratureRow {
  std::string method;
  std::array<double, kNumClasses> precision;
  std::array<double, kNumClasses> recall;
  bool operator==(const LiteratureRow&) const = default;
};

const std::vector<LiteratureRow>& literature_rows();

struct SplitCounts {
  std::uint64_t rows = 0;
  std::uint64_t degenerate = 0;
  std::array<std::uint64_t, kNumClasses> per_class{};
  bool operator==(const SplitCounts&) const = default;
};

struct MetricsReport {
  ClassMetrics metrics;
  ConfusionMatrix confusion;
  SplitCounts train;
  SplitCounts test;
  std::vector<LiteratureRow> literature = literature_rows();
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string generated_at;  // excluded from reproducibility comparisons

  bool operator==(const MetricsReport&) const = default;
};

nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

/// Comparison table laid out like the published results table, with a final
/// "This work (reproduction)" row.
std::string render_text_table(const MetricsReport& r);

}  // namespace ecggraph::eval
