#pragma once

// Evaluation: test error, separation of in/out confidence (rank-based with
// tie correction), and selection quality measured against the hidden sample
// provenance.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odst/calib.hpp"
#include "odst/core.hpp"
#include "odst/model.hpp"
#include "odst/select.hpp"

namespace odst::metrics {

// Argmax misclassification fraction (temperature never changes the argmax).
double test_error(const model::Mlp& m, const calib::Calibration& cal,
                  const LabeledDataset& test);

// P(score_in > score_out) + 0.5 P(tie), computed from average ranks; equal
// to the all-pairs count for every input.
double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores);

// Fraction of distinct selected samples whose generator component is
// in-distribution; empty selection yields nullopt.
std::optional<double> selection_precision(const select::SelectionResult& sel,
                                          const UnlabeledDataset& pool);

// Distinct selected in-distribution samples / in-distribution samples in the
// pool.
std::optional<double> selection_recall(const select::SelectionResult& sel,
                                       const UnlabeledDataset& pool);

// Among distinct selected in-distribution samples: fraction whose q-argmax
// equals the generating component's class. nullopt when none qualify.
std::optional<double> label_accuracy(const select::SelectionResult& sel, const UnlabeledDataset& pool);

struct IterationReport {
  int iteration = 0;  // 0 is the base teacher
  double test_error = 0.0;
  double auroc = 0.0;
  double ece_before = 0.0;
  double ece_after = 0.0;
  double temperature = 1.0;
  std::vector<std::uint64_t> accepted;  // per class, empty counts as zeros
  std::optional<double> selection_precision;
  std::optional<double> selection_recall;
};

// CSV round-trip with exact double round-trip formatting. The header is
// iteration,test_error,auroc,ece_before,ece_after,temperature,
// accepted_0..accepted_{K-1},selection_precision,selection_recall.
std::string report_csv(const std::vector<IterationReport>& rows, std::uint32_t num_classes);
std::vector<IterationReport> parse_report_csv(const std::string& csv);

}  // namespace odst::metrics
