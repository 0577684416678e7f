#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "odst/calib.hpp"
#include "odst/core.hpp"
#include "odst/model.hpp"

using namespace odst;

namespace {

// Straightforward re-computation of binned calibration error: walk the bins,
// average confidence and accuracy inside each, weight by occupancy.
double ece_direct(const std::vector<ProbVector>& preds,
                  const std::vector<std::uint32_t>& labels, int bins) {
  const double n = static_cast<double>(preds.size());
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = static_cast<double>(b + 1) / bins;
    double conf_sum = 0.0, acc_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double c = preds[i].max_entry();
      const bool inside = (b + 1 == bins) ? (c >= lo && c <= hi) : (c >= lo && c < hi);
      if (!inside) continue;
      ++count;
      conf_sum += c;
      acc_sum += preds[i].argmax() == labels[i] ? 1.0 : 0.0;
    }
    if (count == 0) continue;
    total += (static_cast<double>(count) / n) *
             std::abs(acc_sum / count - conf_sum / count);
  }
  return total;
}

}  // namespace

TEST_CASE("ece agrees with the direct bin walk") {
  Rng rng(7);
  for (int inst = 0; inst < 40; ++inst) {
    const std::size_t n = 1 + rng.uniform_index(200);
    const std::size_t k = 2 + rng.uniform_index(5);
    std::vector<ProbVector> preds;
    std::vector<std::uint32_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(k);
      double s = 0.0;
      for (auto& v : p) {
        v = rng.uniform() + 1e-3;
        s += v;
      }
      for (auto& v : p) v /= s;
      preds.push_back(ProbVector{p});
      labels.push_back(static_cast<std::uint32_t>(rng.uniform_index(k)));
    }
    const int bins = 1 + static_cast<int>(rng.uniform_index(20));
    CHECK(calib::ece(preds, labels, bins) ==
          doctest::Approx(ece_direct(preds, labels, bins)).epsilon(1e-12));
  }
}

TEST_CASE("ece frozen two-sample case") {
  // Both predictions land in the same bin: conf mean 0.8, accuracy 0.5.
  std::vector<ProbVector> preds = {ProbVector{{0.8, 0.2}}, ProbVector{{0.8, 0.2}}};
  std::vector<std::uint32_t> labels = {0, 1};
  CHECK(calib::ece(preds, labels, 15) == doctest::Approx(0.3).epsilon(1e-14));
  // Perfectly confident and correct: zero.
  std::vector<ProbVector> sure = {ProbVector{{1.0, 0.0}}};
  CHECK(calib::ece(sure, {0}, 15) == 0.0);
}

TEST_CASE("ece validates its input") {
  std::vector<ProbVector> preds = {ProbVector{{0.5, 0.5}}};
  CHECK_THROWS(calib::ece(preds, {0, 1}, 15));    // length mismatch
  CHECK_THROWS(calib::ece(preds, {5}, 15));       // label out of range
  CHECK_THROWS(calib::ece({}, {}, 15));           // empty
  CHECK_THROWS(calib::ece(preds, {0}, 0));        // no bins
}

TEST_CASE("temperature scaling frozen values") {
  calib::Calibration cal{2.0};
  const auto p = calib::apply_temperature({2.0, 0.0}, cal);
  const double e = std::exp(1.0);
  CHECK(p.values[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
  CHECK(p.values[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));

  // T -> inf flattens, T -> 0 sharpens.
  const auto flat = calib::apply_temperature({3.0, 1.0}, calib::Calibration{20.0});
  CHECK(std::abs(flat.values[0] - flat.values[1]) < 0.1);
  const auto sharp = calib::apply_temperature({3.0, 1.0}, calib::Calibration{0.05});
  CHECK(sharp.values[0] > 0.999);
}

TEST_CASE("fitting recovers a constructed miscalibration") {
  // Three confidence groups, each hitting its target accuracy exactly at
  // T = 2: logits are built as 2 * logit(q) so softmax(l / 2) has max entry q.
  const std::vector<double> qs = {0.6, 0.7, 0.9};
  const std::size_t per_group = 10;
  std::vector<std::vector<double>> logits;
  std::vector<std::uint32_t> labels;
  for (double q : qs) {
    const double gap = 2.0 * (std::log(q) - std::log(1.0 - q));
    const auto correct = static_cast<std::size_t>(std::llround(q * per_group));
    for (std::size_t i = 0; i < per_group; ++i) {
      logits.push_back({gap, 0.0});
      labels.push_back(i < correct ? 0u : 1u);
    }
  }

  // At T = 2 every group is exactly calibrated.
  std::vector<ProbVector> at2;
  for (const auto& l : logits) at2.push_back(calib::apply_temperature(l, {2.0}));
  CHECK(calib::ece(at2, labels, 15) == doctest::Approx(0.0).epsilon(1e-12));

  const auto fit = calib::fit_temperature(logits, labels, 15);
  // The grid is log-spaced with golden-section refinement; the optimum is a
  // plateau containing 2.0, so just require the fit to land in it.
  std::vector<ProbVector> at_fit;
  for (const auto& l : logits) at_fit.push_back(calib::apply_temperature(l, fit));
  CHECK(calib::ece(at_fit, labels, 15) <= 1e-9);

  // And the fit must beat the uncalibrated model, which is overconfident.
  std::vector<ProbVector> at1;
  for (const auto& l : logits) at1.push_back(calib::apply_temperature(l, {1.0}));
  CHECK(calib::ece(at1, labels, 15) > 0.05);
}

TEST_CASE("fitted temperature never loses to identity") {
  Rng rng(23);
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 20 + rng.uniform_index(100);
    const std::size_t k = 2 + rng.uniform_index(4);
    std::vector<std::vector<double>> logits;
    std::vector<std::uint32_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> l(k);
      for (auto& v : l) v = 3.0 * rng.normal();
      logits.push_back(l);
      labels.push_back(static_cast<std::uint32_t>(rng.uniform_index(k)));
    }
    const auto fit = calib::fit_temperature(logits, labels, 15);
    std::vector<ProbVector> at_fit, at1;
    for (const auto& l : logits) {
      at_fit.push_back(calib::apply_temperature(l, fit));
      at1.push_back(calib::apply_temperature(l, {1.0}));
    }
    CHECK(calib::ece(at_fit, labels, 15) <= calib::ece(at1, labels, 15) + 1e-12);
    CHECK(fit.temperature >= calib::kTempMin);
    CHECK(fit.temperature <= calib::kTempMax);
  }
}

TEST_CASE("temperature grid includes identity and is sorted") {
  const auto grid = calib::temperature_grid();
  CHECK(grid.size() == calib::kTempGridPoints + 1);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(std::count(grid.begin(), grid.end(), 1.0) == 1);
  CHECK(grid.front() == doctest::Approx(calib::kTempMin).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(calib::kTempMax).epsilon(1e-12));
}

TEST_CASE("predict matches manual forward + temperature") {
  auto m = model::make_mlp({2, 8, 3}, 3);
  calib::Calibration cal{1.7};
  Rng rng(5);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 20; ++i) xs.push_back({rng.normal(), rng.normal()});

  const auto batch = calib::predict_many(m, xs, cal);
  REQUIRE(batch.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto one = calib::predict(m, xs[i], cal);
    const auto direct = calib::apply_temperature(model::forward(m, xs[i]), cal);
    CHECK(testutil::linf(one.values, batch[i].values) == 0.0);
    CHECK(testutil::linf(one.values, direct.values) <= 1e-15);
  }
}

TEST_CASE("calibration sidecar round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "odst_calib_io";
  fs::create_directories(dir);
  const auto path = (dir / "t.calib").string();
  calib::save_calibration(path, {3.25});
  CHECK(calib::load_calibration(path).temperature == 3.25);
  CHECK_THROWS(calib::load_calibration((dir / "missing.calib").string()));
}
