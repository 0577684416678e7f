#pragma once

// Pool annotation with the calibrated teacher, per-class acceptance
// thresholds, top-k selection with seeded repetition, and the soft targets
// handed to the student.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "odst/calib.hpp"
#include "odst/core.hpp"
#include "odst/model.hpp"

namespace odst::select {

// Sentinel for "no confidence qualifies": comparisons against it accept
// nothing.
inline constexpr double kAboveOne = std::numeric_limits<double>::infinity();

inline bool is_above_one(double threshold) { return std::isinf(threshold); }

struct PoolAnnotation {
  std::vector<std::uint32_t> predicted;
  std::vector<double> confidence;   // max calibrated probability
  std::vector<ProbVector> probs;    // full calibrated vector

  std::size_t size() const { return predicted.size(); }
};

// Calibrated teacher predictions for a feature list / the unlabeled pool.
PoolAnnotation annotate(const model::Mlp& m, const calib::Calibration& cal,
                        const std::vector<std::vector<double>>& xs);
PoolAnnotation pseudo_label_pool(const model::Mlp& m, const calib::Calibration& cal,
                                 const UnlabeledDataset& pool);
PoolAnnotation annotate_labeled(const model::Mlp& m, const calib::Calibration& cal,
                                const LabeledDataset& ds);

// alpha-quantile (nearest-rank, ceiling) of the class-c probability over all
// outlier validation samples.
double ood_threshold(const PoolAnnotation& ood_val, std::size_t cls, double alpha);

// Smallest observed class-c probability theta such that labeled validation
// samples with p(c|x) >= theta have one-vs-all precision >= alpha; kAboveOne
// when no prefix qualifies.
double id_threshold(const PoolAnnotation& in_val, const std::vector<std::uint32_t>& labels,
                    std::size_t cls, double alpha);

struct SelectionThresholds {
  std::vector<double> ood;    // zero when the mode does not use it
  std::vector<double> id;
  std::vector<double> final;  // max of the rules in use
  bool uses_ood = true;
};

SelectionThresholds compute_thresholds(const PoolAnnotation& in_val,
                                       const std::vector<std::uint32_t>& in_labels,
                                       const PoolAnnotation& ood_val, double alpha,
                                       bool use_ood);

// Per-class budget after t refinement rounds: floor(5 N (t+1) / K).
std::uint64_t k_schedule(std::uint64_t n_labeled, std::uint32_t num_classes, int t);

struct SelectedSample {
  std::size_t pool_index = 0;
  ProbVector q;                    // calibrated teacher prediction
  std::uint32_t repetitions = 1;   // total copies fed to the student
};

struct ClassSelectionStats {
  std::uint64_t above_threshold = 0;  // candidates passing the final threshold
  std::uint64_t accepted_unique = 0;  // distinct samples kept (<= k)
  std::uint64_t repetitions = 0;      // extra copies added to reach k
};

struct SelectionResult {
  std::vector<SelectedSample> selected;       // grouped by class, confidence-sorted
  std::vector<ClassSelectionStats> per_class;
  std::vector<std::string> warnings;          // e.g. classes that accepted nothing
};

// Per class: keep the k most confident pool samples predicted as that class
// with confidence >= final threshold (ties by smaller pool index). When some
// but fewer than k qualify, repeat accepted samples uniformly (seeded) until
// the class total reaches k; a class with no candidates contributes nothing
// and is reported in `warnings`.
SelectionResult select_topk(const PoolAnnotation& pool, const SelectionThresholds& thresholds,
                            std::uint64_t k, std::uint64_t seed);

enum class VRule {
  kDamped,   // 0.5/K + 0.5 * p; max entry bounded by 1/2 + 1/(2K)
  kUniform,  // hard-uniform ablation
  kRaw,      // no-damping ablation
};

VRule v_rule_for(model::Mode mode);

struct PseudoLabels {
  // Selected entries mirror SelectionResult::selected (q plus duplicates).
  model::SoftDataset selected;
  // One entry per unselected pool sample.
  model::SoftDataset rest;
  std::vector<std::size_t> rest_index;  // pool index per rest entry
  double max_rest_confidence = 0.0;     // max entry over all rest targets
};

// Materializes q for the selection and v for the remaining pool under the
// given rule. Feature vectors are copied out of `pool`.
PseudoLabels assign_pseudo_labels(const UnlabeledDataset& pool, const PoolAnnotation& ann,
                                  const SelectionResult& sel, VRule rule);

}  // namespace odst::select
