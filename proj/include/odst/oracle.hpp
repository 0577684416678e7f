#pragma once

// Exact population-level predictions for the uniform-outlier training
// objective and its iterated self-training refinements, plus the gap between
// a trained model and those targets.

#include <cstdint>
#include <functional>
#include <vector>

#include "odst/core.hpp"
#include "odst/synth.hpp"

namespace odst::oracle {

struct OraclePoint {
  double p_in_density = 0.0;        // >= 0
  double p_all_density = 0.0;       // >= 0
  ProbVector class_posterior;       // posterior of the in-distribution task
};

// Point evaluated against a world; posterior falls back to uniform when the
// in-density underflows.
OraclePoint point_at(const synth::WorldSpec& world, const std::vector<double>& x);

// Fraction of the local density mass owned by the pool marginal:
// r = p_all / (p_in + p_all); r = 1 when p_in underflows to 0.
double mix_ratio(const OraclePoint& pt);

// Minimizer of the base objective:
// (p_in(k|x) p_in(x) + p_all(x)/K) / (p_in(x) + p_all(x)); uniform when both
// densities vanish.
ProbVector bayes_base(const OraclePoint& pt);

// Prediction after t refinement rounds, closed form:
// p_in(k|x) + r^(t+1) (1/K - p_in(k|x)).
ProbVector bayes_iter_closed(const OraclePoint& pt, int t);

// Same quantity built by unrolling the one-step update
// p_{s+1} = (p_in p_in(k|x) + p_all p_s) / (p_in + p_all); serves as the
// independent reference for the closed form.
ProbVector bayes_iter_recursive(const OraclePoint& pt, int t);

// t -> infinity limit: p_in(k|x) when p_in(x) > 0, uniform otherwise.
ProbVector bayes_limit(const OraclePoint& pt);

// Mean L1 distance between predictor(x) and the target at each point.
// Target is bayes_base for t < 0, bayes_iter_closed(t) otherwise.
using Predictor = std::function<ProbVector(const std::vector<double>&)>;

struct EvalPoint {
  std::vector<double> x;
  OraclePoint oracle;
};

// Fixed evaluation set: a grid_side x grid_side grid over the bounding box of
// the supplied feature sets (two-dimensional worlds) plus n_samples fresh
// pool draws.
std::vector<EvalPoint> make_evaluation_points(
    const synth::WorldSpec& world,
    const std::vector<const std::vector<std::vector<double>>*>& feature_sets,
    std::size_t n_samples, std::uint64_t seed, std::size_t grid_side = 101);

double oracle_gap(const Predictor& predictor, const std::vector<EvalPoint>& points, int t);

}  // namespace odst::oracle
