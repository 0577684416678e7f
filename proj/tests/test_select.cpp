#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "odst/core.hpp"
#include "odst/select.hpp"

using namespace odst;

namespace {

// Quantile by definition: smallest observed value v such that at least
// ceil(alpha * n) of the scores are <= v.
double quantile_by_counting(std::vector<double> scores, double alpha) {
  std::sort(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  const auto need = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9 * n));
  for (double v : scores) {
    std::size_t covered = 0;
    for (double s : scores)
      if (s <= v) ++covered;
    if (covered >= need) return v;
  }
  return scores.back();
}

// Reference id-threshold: try every distinct score as theta, compute the
// precision of {p >= theta} against the one-vs-all labels, keep the smallest
// theta whose precision reaches alpha.
double id_threshold_brute(const std::vector<double>& scores,
                          const std::vector<bool>& is_class, double alpha) {
  std::vector<double> distinct(scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double best = select::kAboveOne;
  for (double theta : distinct) {
    std::size_t taken = 0, correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= theta) {
        ++taken;
        if (is_class[i]) ++correct;
      }
    }
    if (taken > 0 &&
        static_cast<double>(correct) >= alpha * static_cast<double>(taken) - 1e-12) {
      best = std::min(best, theta);
    }
  }
  return best;
}

select::PoolAnnotation two_class_annotation(const std::vector<double>& p0) {
  select::PoolAnnotation ann;
  for (double p : p0) {
    ann.predicted.push_back(p >= 0.5 ? 0u : 1u);
    ann.confidence.push_back(std::max(p, 1.0 - p));
    ann.probs.push_back(ProbVector{{p, 1.0 - p}});
  }
  return ann;
}

}  // namespace

TEST_CASE("outlier threshold equals the counting quantile") {
  Rng rng(11);
  for (int inst = 0; inst < 400; ++inst) {
    const std::size_t n = 1 + rng.uniform_index(60);
    std::vector<double> p0(n);
    for (auto& v : p0) {
      v = rng.uniform();
      if (rng.uniform() < 0.4) v = std::round(v * 8.0) / 8.0;  // force ties
    }
    const auto ann = two_class_annotation(p0);
    const double alpha = 0.5 + 0.5 * rng.uniform();
    for (std::size_t cls = 0; cls < 2; ++cls) {
      std::vector<double> scores;
      for (const auto& p : ann.probs) scores.push_back(p[cls]);
      CHECK(select::ood_threshold(ann, cls, alpha) == quantile_by_counting(scores, alpha));
    }
  }
}

TEST_CASE("outlier threshold handles the integral-rank edge exactly") {
  // 50 scores, alpha = 0.98: ceil(49) = 49 scores must sit at or below the
  // threshold, so it is the 49th smallest, not the maximum.
  std::vector<double> p0(50);
  for (std::size_t i = 0; i < 50; ++i) p0[i] = static_cast<double>(i + 1) / 100.0;
  const auto ann = two_class_annotation(p0);
  CHECK(select::ood_threshold(ann, 0, 0.98) == doctest::Approx(0.49).epsilon(1e-15));
  CHECK_THROWS(select::ood_threshold(ann, 0, 1.0));  // alpha must lie inside (0,1)
}

TEST_CASE("in-distribution threshold matches the brute force over instances") {
  Rng rng(13);
  for (int inst = 0; inst < 600; ++inst) {
    const std::size_t n = 1 + rng.uniform_index(50);
    std::vector<double> p0(n);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      p0[i] = rng.uniform();
      if (rng.uniform() < 0.5) p0[i] = std::round(p0[i] * 6.0) / 6.0;
      labels[i] = static_cast<std::uint32_t>(rng.uniform_index(2));
    }
    const auto ann = two_class_annotation(p0);
    const double alpha = 0.5 + 0.5 * rng.uniform();
    for (std::size_t cls = 0; cls < 2; ++cls) {
      std::vector<double> scores;
      std::vector<bool> is_class;
      for (std::size_t i = 0; i < n; ++i) {
        scores.push_back(ann.probs[i][cls]);
        is_class.push_back(labels[i] == cls);
      }
      const double got = select::id_threshold(ann, labels, cls, alpha);
      const double want = id_threshold_brute(scores, is_class, alpha);
      if (select::is_above_one(want)) {
        CHECK(select::is_above_one(got));
      } else {
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("in-distribution threshold returns the sentinel when nothing qualifies") {
  // Every confident prediction for class 0 is wrong.
  const auto ann = two_class_annotation({0.9, 0.8, 0.7});
  const std::vector<std::uint32_t> labels = {1, 1, 1};
  CHECK(select::is_above_one(select::id_threshold(ann, labels, 0, 0.9)));
  // ... while class 1 reaches precision 1 at its lowest score.
  CHECK(select::id_threshold(ann, labels, 1, 0.9) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("combined thresholds take the maximum of the rules in use") {
  const auto in_val = two_class_annotation({0.9, 0.85, 0.2, 0.15});
  const std::vector<std::uint32_t> in_labels = {0, 0, 1, 1};
  const auto ood_val = two_class_annotation({0.6, 0.55, 0.5, 0.45});

  const auto with = select::compute_thresholds(in_val, in_labels, ood_val, 0.9, true);
  REQUIRE(with.final.size() == 2);
  CHECK(with.uses_ood);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(with.final[c] == std::max(with.id[c], with.ood[c]));
    CHECK(with.ood[c] == select::ood_threshold(ood_val, c, 0.9));
    CHECK(with.id[c] == select::id_threshold(in_val, in_labels, c, 0.9));
  }

  const auto without = select::compute_thresholds(in_val, in_labels, ood_val, 0.9, false);
  CHECK_FALSE(without.uses_ood);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(without.ood[c] == 0.0);
    CHECK(without.final[c] == without.id[c]);
  }
}

TEST_CASE("per-class budget schedule") {
  CHECK(select::k_schedule(800, 4, 0) == 1000);
  CHECK(select::k_schedule(800, 4, 1) == 2000);
  CHECK(select::k_schedule(800, 4, 2) == 3000);
  CHECK(select::k_schedule(30, 7, 0) == 21);   // floor(150/7)
  CHECK(select::k_schedule(1, 5, 0) == 1);     // floor(5/5)
  CHECK_THROWS(select::k_schedule(10, 4, -1));
}

TEST_CASE("top-k selection on a hand-built pool") {
  // Class-0 probabilities; predictions flip at 0.5.
  const auto pool = two_class_annotation({0.95, 0.80, 0.95, 0.60, 0.30, 0.10, 0.20});
  select::SelectionThresholds th;
  th.ood = {0.0, 0.0};
  th.id = {0.70, 0.75};
  th.final = {0.70, 0.75};

  const auto sel = select::select_topk(pool, th, 2, 99);
  // Class 0 candidates above 0.70: indices 0 (0.95), 2 (0.95), 1 (0.80).
  // k = 2 keeps the tied pair, tie broken toward the smaller index.
  // Class 1 candidates above 0.75: indices 5 (0.90), 6 (0.80); both kept.
  REQUIRE(sel.selected.size() == 4);
  CHECK(sel.selected[0].pool_index == 0);
  CHECK(sel.selected[1].pool_index == 2);
  CHECK(sel.selected[2].pool_index == 5);
  CHECK(sel.selected[3].pool_index == 6);
  for (const auto& s : sel.selected) CHECK(s.repetitions == 1);
  CHECK(sel.per_class[0].above_threshold == 3);
  CHECK(sel.per_class[0].accepted_unique == 2);
  CHECK(sel.per_class[0].repetitions == 0);
  CHECK(sel.warnings.empty());
}

TEST_CASE("scarce classes are padded by repetition, empty classes warn") {
  const auto pool = two_class_annotation({0.9, 0.85, 0.4, 0.45});
  select::SelectionThresholds th;
  th.ood = {0.0, 0.0};
  th.id = {0.8, 0.9};  // class 1 has no candidate (best is 0.6)
  th.final = {0.8, 0.9};

  const auto sel = select::select_topk(pool, th, 5, 7);
  // Class 0 accepts 2 unique samples and pads 3 extra copies to reach k = 5.
  std::uint64_t total_reps = 0;
  std::set<std::size_t> uniq;
  for (const auto& s : sel.selected) {
    uniq.insert(s.pool_index);
    total_reps += s.repetitions;
  }
  CHECK(uniq == std::set<std::size_t>{0, 1});
  CHECK(total_reps == 5);
  CHECK(sel.per_class[0].accepted_unique == 2);
  CHECK(sel.per_class[0].repetitions == 3);
  CHECK(sel.per_class[1].accepted_unique == 0);
  REQUIRE(sel.warnings.size() == 1);
  CHECK(sel.warnings[0].find("class 1") != std::string::npos);

  // Identical call, identical padding; different seed may differ.
  const auto again = select::select_topk(pool, th, 5, 7);
  REQUIRE(again.selected.size() == sel.selected.size());
  for (std::size_t i = 0; i < sel.selected.size(); ++i)
    CHECK(again.selected[i].repetitions == sel.selected[i].repetitions);
}

TEST_CASE("sentinel thresholds accept nothing") {
  const auto pool = two_class_annotation({0.99, 0.98});
  select::SelectionThresholds th;
  th.ood = {0.0, 0.0};
  th.id = {select::kAboveOne, select::kAboveOne};
  th.final = {select::kAboveOne, select::kAboveOne};
  const auto sel = select::select_topk(pool, th, 3, 1);
  CHECK(sel.selected.empty());
  CHECK(sel.warnings.size() == 2);
}

TEST_CASE("damping rules produce the advertised targets") {
  CHECK(select::v_rule_for(model::Mode::kOdst) == select::VRule::kDamped);
  CHECK(select::v_rule_for(model::Mode::kNonIterative) == select::VRule::kDamped);
  CHECK(select::v_rule_for(model::Mode::kAblateHardU) == select::VRule::kUniform);
  CHECK(select::v_rule_for(model::Mode::kAblateNoSmooth) == select::VRule::kRaw);

  UnlabeledDataset pool;
  pool.d = 1;
  pool.num_classes = 4;
  pool.samples.emplace_back(std::vector<double>{0.0}, 0u, true);
  pool.samples.emplace_back(std::vector<double>{1.0}, 1u, false);

  select::PoolAnnotation ann;
  ann.predicted = {0, 0};
  ann.confidence = {0.9, 0.7};
  ann.probs = {ProbVector{{0.9, 0.1, 0.0, 0.0}}, ProbVector{{0.7, 0.1, 0.1, 0.1}}};

  select::SelectionResult none;  // nothing selected: the whole pool is "rest"
  none.per_class.resize(4);

  const auto damped = select::assign_pseudo_labels(pool, ann, none, select::VRule::kDamped);
  REQUIRE(damped.rest.target.size() == 2);
  // v = 1/(2K) + p/2 with K = 4.
  CHECK(damped.rest.target[0].values[0] == doctest::Approx(0.125 + 0.45).epsilon(1e-15));
  CHECK(damped.rest.target[0].values[1] == doctest::Approx(0.125 + 0.05).epsilon(1e-15));
  CHECK(damped.rest.target[0].values[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(damped.max_rest_confidence == doctest::Approx(0.575).epsilon(1e-15));

  const auto uniform = select::assign_pseudo_labels(pool, ann, none, select::VRule::kUniform);
  for (const auto& t : uniform.rest.target)
    for (double v : t.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(uniform.max_rest_confidence == doctest::Approx(0.25).epsilon(1e-15));

  const auto raw = select::assign_pseudo_labels(pool, ann, none, select::VRule::kRaw);
  CHECK(raw.rest.target[0].values[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(raw.max_rest_confidence == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("pseudo-label assignment partitions the pool") {
  Rng rng(41);
  UnlabeledDataset pool;
  pool.d = 2;
  pool.num_classes = 3;
  select::PoolAnnotation ann;
  for (int i = 0; i < 60; ++i) {
    pool.samples.emplace_back(std::vector<double>{rng.normal(), rng.normal()}, 0u, true);
    std::vector<double> p(3);
    double s = 0.0;
    for (auto& v : p) {
      v = rng.uniform() + 0.01;
      s += v;
    }
    for (auto& v : p) v /= s;
    ProbVector q{p};
    ann.probs.push_back(q);
    ann.predicted.push_back(static_cast<std::uint32_t>(q.argmax()));
    ann.confidence.push_back(q.max_entry());
  }

  select::SelectionThresholds th;
  th.ood = {0.0, 0.0, 0.0};
  th.id = {0.4, 0.4, 0.4};
  th.final = {0.4, 0.4, 0.4};
  const auto sel = select::select_topk(ann, th, 4, 5);

  const auto pl = select::assign_pseudo_labels(pool, ann, sel, select::VRule::kDamped);

  // Selected entries expand repetitions; q is the calibrated prediction.
  std::size_t expanded = 0;
  for (const auto& s : sel.selected) expanded += s.repetitions;
  CHECK(pl.selected.x.size() == expanded);
  CHECK(pl.selected.target.size() == expanded);

  // Rest covers exactly the complement of the selected indices.
  std::set<std::size_t> chosen;
  for (const auto& s : sel.selected) chosen.insert(s.pool_index);
  CHECK(pl.rest.x.size() == pool.samples.size() - chosen.size());
  std::set<std::size_t> rest_set(pl.rest_index.begin(), pl.rest_index.end());
  CHECK(rest_set.size() == pl.rest_index.size());
  for (std::size_t idx : rest_set) CHECK(chosen.count(idx) == 0);
  CHECK(rest_set.size() + chosen.size() == pool.samples.size());

  // Damped targets never exceed 1/2 + 1/(2K).
  const double bound = 0.5 + 0.5 / 3.0;
  CHECK(pl.max_rest_confidence <= bound + 1e-12);
  for (const auto& t : pl.rest.target) CHECK(t.max_entry() <= bound + 1e-12);

  // Features are copied verbatim.
  for (std::size_t r = 0; r < pl.rest_index.size(); ++r)
    CHECK(pl.rest.x[r] == pool.samples[pl.rest_index[r]].z);
}
