#pragma once

// End-to-end orchestration: config surface, data generation, the base
// teacher plus refinement rounds, state persistence with resume, report
// emission, and multi-mode comparisons over shared data.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odst/calib.hpp"
#include "odst/core.hpp"
#include "odst/metrics.hpp"
#include "odst/model.hpp"
#include "odst/report.hpp"
#include "odst/select.hpp"
#include "odst/synth.hpp"

namespace odst::runner {

struct ExperimentConfig {
  synth::WorldSpec world = synth::default_ring_world();
  std::size_t n = 200;           // labeled training samples
  std::size_t m = 200000;        // unlabeled pool
  std::size_t n_in_val = 2000;
  std::size_t n_ood_val = 5000;
  std::size_t n_test = 10000;
  std::size_t n_ood_test = 10000;
  bool ood_far = false;          // add the shifted outlier evaluation set
  double alpha = 0.98;
  int iterations = 3;
  model::Mode mode = model::Mode::kOdst;
  model::TrainConfig train;
  std::uint64_t seed = 1;
};

void validate_config(const ExperimentConfig& cfg);

// JSON surface. Keys: seed, mode, alpha, iterations, n, m, n_in_val,
// n_ood_val, n_test, n_ood_test, ood_far, world{preset | d,pi_in,
// in_components,out_components}, train{epochs,batch_size,learning_rate,
// lr_decay_epochs,lr_decay_factor,momentum,weight_decay,lambda,hidden,
// warm_start}. Unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);  // canonical, resolved
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

struct GeneratedData {
  LabeledDataset train;
  UnlabeledDataset pool;
  LabeledDataset in_val;
  UnlabeledDataset ood_val;
  LabeledDataset test;
  UnlabeledDataset ood_test;
  std::optional<UnlabeledDataset> ood_far;
};

// Depends only on (world, counts, seed); modes share data by construction.
GeneratedData generate_data(const ExperimentConfig& cfg);
std::map<std::string, std::uint64_t> data_checksums(const GeneratedData& data);

struct RunOptions {
  bool resume = true;     // pick up state.json in out_dir when present
  int stop_after = -1;    // stop once this many refinement rounds completed
  bool quiet = true;      // suppress progress lines on stderr
};

struct RunResult {
  std::vector<metrics::IterationReport> history;  // base row + one per round
  std::vector<report::SelectionCsvRow> selection_rows;
  std::map<std::string, std::uint64_t> checksums;
  double max_rest_confidence = 0.0;  // largest unselected-pool target entry seen
  std::vector<std::string> warnings;
  std::string out_dir;
};

// Runs (or resumes) the configured experiment, writing metrics.csv,
// selection.csv, charts, per-round checkpoints/dumps and state.json into
// out_dir. Every failure carries a [stage] tag; the last completed round
// stays on disk.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         const RunOptions& opts = {});

struct CompareRunRow {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t train_checksum = 0;
  double base_test_error = 0.0;
  double final_test_error = 0.0;
  double final_auroc = 0.0;
};

struct CompareSummaryRow {
  std::string mode;
  std::size_t num_seeds = 0;
  double base_error_mean = 0.0, base_error_sd = 0.0;
  double final_error_mean = 0.0, final_error_sd = 0.0;
  double final_auroc_mean = 0.0, final_auroc_sd = 0.0;
};

struct CompareResult {
  std::vector<CompareRunRow> runs;
  std::vector<CompareSummaryRow> summary;
};

// One sub-run per (mode, seed) under out_root; data seeds are shared, so a
// mismatch in dataset checksums across modes aborts. Writes compare.csv and
// compare_runs.csv.
CompareResult compare_modes(const ExperimentConfig& base_cfg,
                            const std::vector<model::Mode>& modes,
                            const std::vector<std::uint64_t>& seeds,
                            const std::string& out_root, const RunOptions& opts = {});

// (Re)writes metrics.csv, selection.csv and the SVG charts from history.
void emit_report(const std::vector<metrics::IterationReport>& history,
                 const std::vector<report::SelectionCsvRow>& selection_rows,
                 std::uint32_t num_classes, const std::string& out_dir);

}  // namespace odst::runner
