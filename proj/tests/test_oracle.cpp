#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "odst/core.hpp"
#include "odst/oracle.hpp"
#include "odst/synth.hpp"

using namespace odst;

namespace {

oracle::OraclePoint random_point(Rng& rng, std::size_t k) {
  oracle::OraclePoint pt;
  pt.p_in_density = std::exp(rng.normal() * 3.0);
  pt.p_all_density = std::exp(rng.normal() * 3.0);
  std::vector<double> raw(k);
  double sum = 0.0;
  for (auto& v : raw) {
    v = rng.uniform() + 1e-6;
    sum += v;
  }
  for (auto& v : raw) v /= sum;
  pt.class_posterior = ProbVector{raw};
  return pt;
}

}  // namespace

TEST_CASE("closed form equals the unrolled recursion") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = 2 + rng.uniform_index(5);
    auto pt = random_point(rng, k);
    for (int t : {0, 1, 2, 7, 50}) {
      const auto a = oracle::bayes_iter_closed(pt, t);
      const auto b = oracle::bayes_iter_recursive(pt, t);
      CHECK(testutil::linf(a.values, b.values) <= 1e-12);
    }
  }
}

TEST_CASE("round zero reduces to the base predictor") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    auto pt = random_point(rng, 4);
    const auto base = oracle::bayes_base(pt);
    CHECK(testutil::linf(oracle::bayes_iter_closed(pt, 0).values, base.values) <= 1e-14);
    CHECK(testutil::linf(oracle::bayes_iter_recursive(pt, 0).values, base.values) <= 1e-14);
  }
}

TEST_CASE("frozen two-class refinement value") {
  // Equal densities give r = 1/2; a deterministic posterior [1, 0] after one
  // refinement lands at 1 + r^2 (1/2 - 1) = 0.875.
  oracle::OraclePoint pt;
  pt.p_in_density = 1.0;
  pt.p_all_density = 1.0;
  pt.class_posterior = ProbVector{{1.0, 0.0}};
  CHECK(oracle::mix_ratio(pt) == doctest::Approx(0.5).epsilon(1e-15));
  const auto p1 = oracle::bayes_iter_closed(pt, 1);
  CHECK(p1.values[0] == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(p1.values[1] == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("frozen four-class base value") {
  // (q k p_in + p_all / K) / (p_in + p_all) with unit densities.
  oracle::OraclePoint pt;
  pt.p_in_density = 1.0;
  pt.p_all_density = 1.0;
  pt.class_posterior = ProbVector{{0.7, 0.1, 0.1, 0.1}};
  const auto base = oracle::bayes_base(pt);
  CHECK(base.values[0] == doctest::Approx(0.475).epsilon(1e-15));
  for (int k = 1; k < 4; ++k) CHECK(base.values[k] == doctest::Approx(0.175).epsilon(1e-15));

  const auto p1 = oracle::bayes_iter_closed(pt, 1);
  CHECK(p1.values[0] == doctest::Approx(0.5875).epsilon(1e-14));
  for (int k = 1; k < 4; ++k) CHECK(p1.values[k] == doctest::Approx(0.1375).epsilon(1e-14));
}

TEST_CASE("vanishing in-density forces the uniform prediction") {
  oracle::OraclePoint pt;
  pt.p_in_density = 0.0;
  pt.p_all_density = 0.37;
  pt.class_posterior = uniform_prob(4);
  CHECK(oracle::mix_ratio(pt) == 1.0);
  for (int t : {0, 3, 40}) {
    const auto p = oracle::bayes_iter_closed(pt, t);
    for (double v : p.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  for (double v : oracle::bayes_base(pt).values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  for (double v : oracle::bayes_limit(pt).values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("vanishing pool density keeps the posterior untouched") {
  oracle::OraclePoint pt;
  pt.p_in_density = 0.8;
  pt.p_all_density = 0.0;
  pt.class_posterior = ProbVector{{0.6, 0.3, 0.1}};
  CHECK(oracle::mix_ratio(pt) == 0.0);
  CHECK(testutil::linf(oracle::bayes_base(pt).values, pt.class_posterior.values) <= 1e-15);
  CHECK(testutil::linf(oracle::bayes_iter_closed(pt, 9).values, pt.class_posterior.values) <=
        1e-15);
}

TEST_CASE("geometric decay toward the limit is exact") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    auto pt = random_point(rng, 4);
    const double r = oracle::mix_ratio(pt);
    const auto lim = oracle::bayes_limit(pt);
    for (int t : {0, 1, 5, 11}) {
      const auto p = oracle::bayes_iter_closed(pt, t);
      for (std::size_t k = 0; k < 4; ++k) {
        const double expected = std::pow(r, t + 1) * std::abs(0.25 - pt.class_posterior.values[k]);
        CHECK(std::abs(p.values[k] - lim.values[k]) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
    if (r <= 0.93)
      CHECK(testutil::linf(oracle::bayes_iter_closed(pt, 200).values, lim.values) < 1e-6);
  }
}

TEST_CASE("base predictor preserves the argmax and damps confidence") {
  Rng rng(512);
  int strict_checks = 0;
  for (int i = 0; i < 2000; ++i) {
    auto pt = random_point(rng, 5);
    const auto base = oracle::bayes_base(pt);
    CHECK(base.argmax() == pt.class_posterior.argmax());
    const double qmax = pt.class_posterior.max_entry();
    if (qmax > 0.2 + 1e-9) {  // non-uniform posterior
      CHECK(base.max_entry() <= qmax + 1e-15);
      if (pt.p_all_density > 0.0) {
        CHECK(base.max_entry() < qmax);
        ++strict_checks;
      }
    }
  }
  CHECK(strict_checks > 1000);
}

TEST_CASE("evaluation points are deterministic and self-consistent") {
  const auto w = synth::default_ring_world();
  const auto train = synth::sample_labeled(w, 50, 3);
  std::vector<std::vector<double>> feats(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) feats[i] = train.samples[i].x;

  const auto pts = oracle::make_evaluation_points(w, {&feats}, 100, 77, 21);
  CHECK(pts.size() == 21 * 21 + 100);
  const auto pts2 = oracle::make_evaluation_points(w, {&feats}, 100, 77, 21);
  REQUIRE(pts2.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].x == pts2[i].x);
    const auto ref = oracle::point_at(w, pts[i].x);
    CHECK(pts[i].oracle.p_in_density == ref.p_in_density);
    CHECK(pts[i].oracle.p_all_density == ref.p_all_density);
  }
}

TEST_CASE("gap against oneself is zero, against uniform matches a direct mean") {
  const auto w = synth::default_ring_world();
  // grid_side 0 disables the grid: sample-only evaluation set.
  const auto pts = oracle::make_evaluation_points(w, {}, 500, 13, 0);

  oracle::Predictor exact = [&](const std::vector<double>& x) {
    return oracle::bayes_iter_closed(oracle::point_at(w, x), 2);
  };
  CHECK(oracle::oracle_gap(exact, pts, 2) <= 1e-15);

  oracle::Predictor flat = [&](const std::vector<double>&) { return uniform_prob(4); };
  double direct = 0.0;
  for (const auto& p : pts) direct += testutil::l1(oracle::bayes_base(p.oracle).values,
                                                   uniform_prob(4).values);
  direct /= static_cast<double>(pts.size());
  CHECK(oracle::oracle_gap(flat, pts, -1) == doctest::Approx(direct).epsilon(1e-12));
}
