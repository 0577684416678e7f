#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "odst/core.hpp"
#include "odst/metrics.hpp"
#include "odst/select.hpp"

using namespace odst;

namespace {

double auroc_all_pairs(const std::vector<double>& in_scores,
                       const std::vector<double>& out_scores) {
  double wins = 0.0;
  for (double a : in_scores) {
    for (double b : out_scores) {
      if (a > b) wins += 1.0;
      else if (a == b) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(in_scores.size()) * out_scores.size());
}

UnlabeledDataset provenance_pool() {
  UnlabeledDataset pool;
  pool.d = 1;
  pool.num_classes = 2;
  // components 0,1 are the two classes; >= 2 is out-of-distribution.
  pool.samples.emplace_back(std::vector<double>{0.0}, 0u, true);   // 0
  pool.samples.emplace_back(std::vector<double>{1.0}, 1u, true);   // 1
  pool.samples.emplace_back(std::vector<double>{2.0}, 5u, false);  // 2
  pool.samples.emplace_back(std::vector<double>{3.0}, 0u, true);   // 3
  pool.samples.emplace_back(std::vector<double>{4.0}, 7u, false);  // 4
  return pool;
}

select::SelectionResult selection_of(std::vector<std::pair<std::size_t, ProbVector>> picks) {
  select::SelectionResult sel;
  for (auto& [idx, q] : picks) sel.selected.push_back({idx, std::move(q), 1});
  return sel;
}

}  // namespace

TEST_CASE("rank-based auroc equals the all-pairs count bitwise") {
  Rng rng(17);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng.uniform_index(30);
    const std::size_t m = 1 + rng.uniform_index(30);
    std::vector<double> a(n), b(m);
    // Coarse grid forces heavy ties across and within the two sets.
    for (auto& v : a) v = std::round(rng.uniform() * 10.0) / 10.0;
    for (auto& v : b) v = std::round(rng.uniform() * 10.0) / 10.0;
    CHECK(metrics::auroc(a, b) == auroc_all_pairs(a, b));
  }
}

TEST_CASE("auroc frozen endpoints") {
  CHECK(metrics::auroc({2.0, 3.0}, {0.0, 1.0}) == 1.0);
  CHECK(metrics::auroc({0.0, 1.0}, {2.0, 3.0}) == 0.0);
  CHECK(metrics::auroc({0.5}, {0.5}) == 0.5);
  CHECK(metrics::auroc({1.0, 0.0}, {0.5}) == 0.5);
  CHECK_THROWS(metrics::auroc({}, {1.0}));
  CHECK_THROWS(metrics::auroc({1.0}, {}));
}

TEST_CASE("selection precision and recall against provenance") {
  const auto pool = provenance_pool();
  // Select two in-distribution samples and one outlier.
  auto sel = selection_of({{0, ProbVector{{0.9, 0.1}}},
                           {2, ProbVector{{0.8, 0.2}}},
                           {1, ProbVector{{0.1, 0.9}}}});
  CHECK(*metrics::selection_precision(sel, pool) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // Pool holds 3 in-distribution samples; 2 were found.
  CHECK(*metrics::selection_recall(sel, pool) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // Sample 0 labeled class 0 (component 0): correct; sample 1 class 1: correct.
  CHECK(*metrics::label_accuracy(sel, pool) == 1.0);

  // A wrong pseudo-label on an in-distribution sample hurts only accuracy.
  auto wrong = selection_of({{0, ProbVector{{0.2, 0.8}}}});
  CHECK(*metrics::selection_precision(wrong, pool) == 1.0);
  CHECK(*metrics::label_accuracy(wrong, pool) == 0.0);
}

TEST_CASE("repeated picks of one sample do not inflate the counts") {
  const auto pool = provenance_pool();
  select::SelectionResult sel;
  sel.selected.push_back({0, ProbVector{{0.9, 0.1}}, 3});  // tripled by padding
  sel.selected.push_back({0, ProbVector{{0.9, 0.1}}, 1});  // and listed twice
  sel.selected.push_back({4, ProbVector{{0.9, 0.1}}, 2});
  CHECK(*metrics::selection_precision(sel, pool) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*metrics::selection_recall(sel, pool) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("empty selections yield no value") {
  const auto pool = provenance_pool();
  select::SelectionResult none;
  CHECK_FALSE(metrics::selection_precision(none, pool).has_value());
  // Recall divides by the pool's in-distribution count, so it is simply zero.
  CHECK(*metrics::selection_recall(none, pool) == 0.0);
  CHECK_FALSE(metrics::label_accuracy(none, pool).has_value());

  // ... and only an all-outlier pool makes recall undefined.
  UnlabeledDataset no_in;
  no_in.d = 1;
  no_in.num_classes = 2;
  no_in.samples.emplace_back(std::vector<double>{0.0}, 9u, false);
  CHECK_FALSE(metrics::selection_recall(none, no_in).has_value());

  // All-outlier selection: precision 0, but no in-dist sample to grade.
  auto outliers = selection_of({{2, ProbVector{{0.9, 0.1}}}});
  CHECK(*metrics::selection_precision(outliers, pool) == 0.0);
  CHECK_FALSE(metrics::label_accuracy(outliers, pool).has_value());
}

TEST_CASE("temperature never moves test error") {
  auto m = model::make_mlp({2, 8, 3}, 9);
  LabeledDataset ds;
  ds.d = 2;
  ds.num_classes = 3;
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    ds.samples.push_back({{2.0 * rng.normal(), 2.0 * rng.normal()},
                          static_cast<std::uint32_t>(rng.uniform_index(3))});
  }
  const double base = model::error_rate(m, ds);
  CHECK(metrics::test_error(m, {1.0}, ds) == base);
  CHECK(metrics::test_error(m, {7.5}, ds) == base);
  CHECK(metrics::test_error(m, {0.05}, ds) == base);
}

TEST_CASE("report rows survive the CSV round trip exactly") {
  std::vector<metrics::IterationReport> rows;
  metrics::IterationReport r0;
  r0.iteration = 0;
  r0.test_error = 0.12345678901234567;
  r0.auroc = 1.0 / 3.0;
  r0.ece_before = 5e-324;   // exercises shortest-round-trip formatting
  r0.ece_after = 0.0;
  r0.temperature = 1.0;
  rows.push_back(r0);

  metrics::IterationReport r1;
  r1.iteration = 1;
  r1.test_error = 0.25;
  r1.auroc = 0.975;
  r1.ece_before = 0.031;
  r1.ece_after = 0.012;
  r1.temperature = 2.7182818284590452;
  r1.accepted = {10, 0, 7, 3};
  r1.selection_precision = 0.8;
  r1.selection_recall = 1e-3;
  rows.push_back(r1);

  const std::string csv = metrics::report_csv(rows, 4);
  CHECK(csv.rfind("iteration,test_error,auroc,ece_before,ece_after,temperature,"
                  "accepted_0,accepted_1,accepted_2,accepted_3,"
                  "selection_precision,selection_recall\n", 0) == 0);

  const auto back = metrics::parse_report_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].iteration == 0);
  CHECK(back[0].test_error == r0.test_error);
  CHECK(back[0].auroc == r0.auroc);
  CHECK(back[0].ece_before == r0.ece_before);
  CHECK(back[0].accepted == std::vector<std::uint64_t>{0, 0, 0, 0});  // empty fills as zeros
  CHECK_FALSE(back[0].selection_precision.has_value());
  CHECK(back[1].accepted == r1.accepted);
  CHECK(back[1].temperature == r1.temperature);
  CHECK(*back[1].selection_precision == 0.8);
  CHECK(*back[1].selection_recall == 1e-3);

  // Round-tripping the parsed rows reproduces the identical string.
  CHECK(metrics::report_csv(back, 4) == csv);
}

TEST_CASE("report parser rejects malformed input") {
  CHECK_THROWS(metrics::parse_report_csv(""));
  CHECK_THROWS(metrics::parse_report_csv("not,a,header\n1,2,3\n"));
  const std::string good = metrics::report_csv({metrics::IterationReport{}}, 2);
  std::string truncated = good.substr(0, good.size() - 3);
  CHECK_THROWS(metrics::parse_report_csv(truncated));
}
