#include "odst/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odst::oracle {

namespace {

void check_point(const OraclePoint& pt, const char* where) {
  if (!(pt.p_in_density >= 0.0) || !(pt.p_all_density >= 0.0)) {
    throw std::invalid_argument(std::string(where) + ": negative density");
  }
  require_prob(pt.class_posterior, where);
}

}  // namespace

OraclePoint point_at(const synth::WorldSpec& world, const std::vector<double>& x) {
  OraclePoint pt;
  pt.p_in_density = synth::density_in(world, x);
  pt.p_all_density = synth::density_all(world, x);
  pt.class_posterior = synth::posterior_in(world, x);
  return pt;
}

double mix_ratio(const OraclePoint& pt) {
  check_point(pt, "mix_ratio");
  const double denom = pt.p_in_density + pt.p_all_density;
  if (denom == 0.0) return 1.0;
  return pt.p_all_density / denom;
}

ProbVector bayes_base(const OraclePoint& pt) {
  check_point(pt, "bayes_base");
  const std::size_t k = pt.class_posterior.size();
  // With no in-mass the optimum is exactly uniform; computing it through the
  // general quotient would only add rounding noise.
  if (pt.p_in_density == 0.0) return uniform_prob(k);
  const double denom = pt.p_in_density + pt.p_all_density;
  ProbVector out;
  out.values.reserve(k);
  const double u = pt.p_all_density / static_cast<double>(k);
  for (double q : pt.class_posterior.values) {
    out.values.push_back((q * pt.p_in_density + u) / denom);
  }
  return out;
}

ProbVector bayes_iter_closed(const OraclePoint& pt, int t) {
  check_point(pt, "bayes_iter_closed");
  if (t < 0) throw std::invalid_argument("bayes_iter_closed: t must be >= 0");
  // Round zero IS the base optimum; delegating keeps the identity bitwise
  // instead of merely within rounding error.
  if (t == 0) return bayes_base(pt);
  const std::size_t k = pt.class_posterior.size();
  const double uniform = 1.0 / static_cast<double>(k);
  // Posterior is only meaningful where the in-density is positive; with no
  // in-mass every round keeps pulling toward the uniform target.
  if (pt.p_in_density == 0.0) return uniform_prob(k);
  const double r = mix_ratio(pt);
  const double decay = std::pow(r, static_cast<double>(t) + 1.0);
  ProbVector out;
  out.values.reserve(k);
  for (double q : pt.class_posterior.values) {
    out.values.push_back(q + decay * (uniform - q));
  }
  return out;
}

ProbVector bayes_iter_recursive(const OraclePoint& pt, int t) {
  check_point(pt, "bayes_iter_recursive");
  if (t < 0) throw std::invalid_argument("bayes_iter_recursive: t must be >= 0");
  const std::size_t k = pt.class_posterior.size();
  if (pt.p_in_density == 0.0) return uniform_prob(k);
  const double denom = pt.p_in_density + pt.p_all_density;
  ProbVector p = uniform_prob(k);  // round 0 trains against the uniform target
  for (int s = 0; s <= t; ++s) {
    ProbVector next;
    next.values.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      next.values.push_back((pt.p_in_density * pt.class_posterior.values[j] +
                             pt.p_all_density * p.values[j]) /
                            denom);
    }
    p = std::move(next);
  }
  return p;
}

ProbVector bayes_limit(const OraclePoint& pt) {
  check_point(pt, "bayes_limit");
  if (pt.p_in_density > 0.0) return pt.class_posterior;
  return uniform_prob(pt.class_posterior.size());
}

std::vector<EvalPoint> make_evaluation_points(
    const synth::WorldSpec& world,
    const std::vector<const std::vector<std::vector<double>>*>& feature_sets,
    std::size_t n_samples, std::uint64_t seed, std::size_t grid_side) {
  std::vector<EvalPoint> points;
  if (world.d == 2 && grid_side >= 2) {
    std::vector<double> lo(2, std::numeric_limits<double>::infinity());
    std::vector<double> hi(2, -std::numeric_limits<double>::infinity());
    bool any = false;
    for (const auto* set : feature_sets) {
      for (const auto& x : *set) {
        any = true;
        for (int j = 0; j < 2; ++j) {
          lo[j] = std::min(lo[j], x[j]);
          hi[j] = std::max(hi[j], x[j]);
        }
      }
    }
    if (!any) throw std::invalid_argument("make_evaluation_points: no features for bounding box");
    for (std::size_t a = 0; a < grid_side; ++a) {
      for (std::size_t b = 0; b < grid_side; ++b) {
        const double fx = static_cast<double>(a) / static_cast<double>(grid_side - 1);
        const double fy = static_cast<double>(b) / static_cast<double>(grid_side - 1);
        std::vector<double> x{lo[0] + fx * (hi[0] - lo[0]), lo[1] + fy * (hi[1] - lo[1])};
        points.push_back({std::move(x), {}});
      }
    }
  }
  if (n_samples > 0) {
    UnlabeledDataset fresh =
        synth::sample_unlabeled(world, n_samples, derive_seed(seed, "oracle_points"));
    for (auto& s : fresh.samples) points.push_back({std::move(s.z), {}});
  }
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      points[i].oracle = point_at(world, points[i].x);
    }
  });
  return points;
}

double oracle_gap(const Predictor& predictor, const std::vector<EvalPoint>& points, int t) {
  if (points.empty()) throw std::invalid_argument("oracle_gap: empty evaluation set");
  std::vector<double> l1(points.size());
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ProbVector target =
          t < 0 ? bayes_base(points[i].oracle) : bayes_iter_closed(points[i].oracle, t);
      const ProbVector pred = predictor(points[i].x);
      if (pred.size() != target.size()) {
        throw std::invalid_argument("oracle_gap: predictor arity mismatch");
      }
      double s = 0.0;
      for (std::size_t j = 0; j < target.size(); ++j) {
        s += std::fabs(pred.values[j] - target.values[j]);
      }
      l1[i] = s;
    }
  });
  double total = 0.0;
  for (double v : l1) total += v;  // fixed order, independent of workers
  return total / static_cast<double>(points.size());
}

}  // namespace odst::oracle
