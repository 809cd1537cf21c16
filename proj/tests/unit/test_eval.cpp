#include <algorithm>
#include <random>

#include "doctest.h"
#include "ecggraph/eval.hpp"

using namespace ecggraph;
using namespace ecggraph::eval;

namespace {

ConfusionMatrix from_counts(std::array<std::array<std::uint64_t, 3>, 3> c) {
  ConfusionMatrix m;
  m.counts = c;
  return m;
}

void expand(const ConfusionMatrix& cm, std::vector<AamiClass>& pred, std::vector<AamiClass>& lab) {
  for (int t = 0; t < 3; ++t) {
    for (int p = 0; p < 3; ++p) {
      for (std::uint64_t k = 0; k < cm.counts[t][p]; ++k) {
        lab.push_back(class_from_index(t));
        pred.push_back(class_from_index(p));
      }
    }
  }
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("precision and recall of a worked confusion matrix") {
  const auto cm = from_counts({{{8, 1, 1}, {2, 3, 0}, {0, 1, 4}}});
  const auto m = precision_recall(cm);
  CHECK(m.precision[0] == doctest::Approx(80.0));
  CHECK(m.recall[0] == doctest::Approx(80.0));
  CHECK(m.recall[1] == doctest::Approx(60.0));
  CHECK(m.precision[1] == doctest::Approx(60.0));
  CHECK(m.precision[2] == doctest::Approx(80.0));
  CHECK(m.recall[2] == doctest::Approx(80.0));
  CHECK(cm.total() == 20);
  CHECK(cm.row_sum(1) == 5);
  CHECK(cm.column_sum(0) == 10);
}

TEST_CASE("confusion matrix from label vectors") {
  using enum AamiClass;
  const std::vector<AamiClass> labels{N, N, S, S, V, V};
  const std::vector<AamiClass> preds{N, S, S, N, V, N};
  const auto cm = confusion_matrix(preds, labels);
  CHECK(cm == from_counts({{{1, 1, 0}, {1, 1, 0}, {1, 0, 1}}}));
  const auto m = precision_recall(cm);
  CHECK(m.precision[0] == doctest::Approx(100.0 / 3.0));
  CHECK(m.recall[2] == doctest::Approx(50.0));
  CHECK(m.precision[2] == doctest::Approx(100.0));

  const auto perfect = precision_recall(confusion_matrix(labels, labels));
  for (int c = 0; c < 3; ++c) {
    CHECK(perfect.precision[c] == 100.0);
    CHECK(perfect.recall[c] == 100.0);
  }
  CHECK_THROWS_AS(confusion_matrix(std::vector<AamiClass>{N}, labels), std::invalid_argument);
}

TEST_CASE("all-N predictions leave S and V precision undefined") {
  using enum AamiClass;
  const std::vector<AamiClass> labels{N, N, S, V};
  const std::vector<AamiClass> preds(4, N);
  const auto m = precision_recall(confusion_matrix(preds, labels));
  CHECK(m.precision[0] == doctest::Approx(50.0));
  CHECK(m.recall[0] == 100.0);
  CHECK(m.precision_undefined[1]);
  CHECK(m.precision_undefined[2]);
  CHECK(m.precision[1] == 0.0);
  CHECK(m.recall[1] == 0.0);
  CHECK_FALSE(m.recall_undefined[1]);

  const auto empty = precision_recall(ConfusionMatrix{});
  for (int c = 0; c < 3; ++c) {
    CHECK(empty.precision_undefined[c]);
    CHECK(empty.recall_undefined[c]);
  }
  MetricsReport r;
  r.metrics = m;
  CHECK(render_text_table(r).find("precision reported as 0") != std::string::npos);
}

TEST_CASE("metrics do not depend on beat order") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    ConfusionMatrix cm;
    for (auto& row : cm.counts) {
      for (auto& v : row) v = rng() % 30;
    }
    std::vector<AamiClass> pred, lab;
    expand(cm, pred, lab);
    std::vector<std::size_t> idx(pred.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<AamiClass> p2, l2;
    for (auto i : idx) {
      p2.push_back(pred[i]);
      l2.push_back(lab[i]);
    }
    CHECK(confusion_matrix(p2, l2) == cm);
    CHECK(precision_recall(confusion_matrix(p2, l2)) == precision_recall(cm));
  }
}

TEST_CASE("published comparison rows") {
  const auto& rows = literature_rows();
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].method == "Lin et al. [4]");
  CHECK(rows[0].precision[0] == 99.3);
  CHECK(rows[3].recall[2] == 93.3);
  const auto& own = rows.back();
  CHECK(own.precision == std::array<double, 3>{97.35, 68.83, 60.69});
  CHECK(own.recall == std::array<double, 3>{94.98, 54.25, 88.29});
}

TEST_CASE("report JSON round trip and table layout") {
  MetricsReport r;
  r.confusion = from_counts({{{8, 1, 1}, {2, 3, 0}, {0, 1, 4}}});
  r.metrics = precision_recall(r.confusion);
  r.train.rows = 40;
  r.train.per_class = {30, 6, 4};
  r.test.rows = 20;
  r.test.degenerate = 2;
  r.seed = 9;
  r.config = {{"threshold", 0.9}};
  r.generated_at = "2026-01-01T00:00:00Z";
  const auto j = report_to_json(r);
  CHECK(j["precision"]["N"] == doctest::Approx(80.0));
  CHECK(j["confusion_matrix"][1][0] == 2);
  CHECK(report_from_json(nlohmann::json::parse(j.dump())) == r);

  const auto table = render_text_table(r);
  for (const auto& row : literature_rows()) CHECK(table.find(row.method) != std::string::npos);
  CHECK(table.find("This work (reproduction)") != std::string::npos);
  CHECK(table.find("80.00") != std::string::npos);
}

}  // TEST_SUITE
