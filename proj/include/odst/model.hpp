#pragma once

// Fully-connected tanh classifier, exact batch backprop, the two training
// objectives (labeled-only and labeled + uniform-target pool batches), the
// student objectives built from pseudo-labels, and checkpoint I/O.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odst/core.hpp"

namespace odst::model {

enum class Mode {
  kBaseOe,        // labeled CE + uniform CE on pool batches
  kBaseCe,        // labeled CE only
  kOdst,          // pseudo-labeled two-stream student
  kSt,            // merged labeled+selected batches, no pool term
  kStOt,          // as kSt but selection also applies the outlier threshold
  kAblateHardU,   // kOdst with uniform targets on the unselected pool
  kAblateNoSmooth,// kOdst without damping of unselected pool targets
  kNonIterative,  // kOdst run as a single refinement round
};

const char* mode_name(Mode m);
Mode mode_from_name(std::string_view name);

bool is_base_mode(Mode m);
// Student objective: true when the mode trains on merged labeled+selected
// batches only (no unselected-pool stream).
bool merged_objective(Mode m);

struct TrainConfig {
  Mode mode = Mode::kBaseOe;
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 0.1;
  std::vector<int> lr_decay_epochs = {80, 120, 160};
  double lr_decay_factor = 0.1;
  double momentum = 0.9;          // Nesterov
  double weight_decay = 5e-4;
  double lambda = 1.0;            // weight of selected samples in merged modes
  std::vector<std::uint32_t> hidden = {64, 64};
  bool warm_start = false;        // students start from the teacher instead of scratch
  std::uint64_t seed = 0;
};

struct Mlp {
  std::vector<std::uint32_t> layer_sizes;       // input, hidden..., classes
  std::vector<std::vector<double>> weights;     // row-major [in][out] per layer
  std::vector<std::vector<double>> biases;
  // Optional input standardization, fitted on the training features.
  std::vector<double> input_mean;
  std::vector<double> input_scale;

  std::uint32_t input_dim() const { return layer_sizes.front(); }
  std::uint32_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_params() const;
};

Mlp make_mlp(const std::vector<std::uint32_t>& layer_sizes, std::uint64_t seed);

// Logits for one input; throws on dimension mismatch or non-finite input.
std::vector<double> forward(const Mlp& m, const std::vector<double>& x);

// Numerically stable softmax; throws on non-finite logits.
ProbVector softmax(const std::vector<double>& logits);

// Cross-entropy of logits against a soft target, computed in log space.
double ce_soft(const ProbVector& target, const std::vector<double>& logits);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

Gradients zero_gradients(const Mlp& m);

// Accumulates d(mean weighted CE)/d(params) over the batch into `grad`:
// each sample contributes weight[i]/denom. Returns the same weighted mean CE.
double backward(const Mlp& m, const std::vector<std::vector<double>>& xs,
                const std::vector<ProbVector>& targets,
                const std::vector<double>& weights, double denom, Gradients& grad);

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
};

// Central-difference check of backward on one batch. Relative error uses
// max(|analytic|, |numeric|, 0.01) as denominator so near-zero entries are
// compared on an absolute scale.
GradCheckReport grad_check(const Mlp& m, const std::vector<std::vector<double>>& xs,
                           const std::vector<ProbVector>& targets, double step,
                           double tolerance);

// Features plus soft targets; `weight` may be empty (all ones).
struct SoftDataset {
  std::vector<std::vector<double>> x;
  std::vector<ProbVector> target;
  std::vector<double> weight;

  std::size_t size() const { return x.size(); }
};

struct StepInfo {
  std::size_t step = 0;
  const Mlp* model = nullptr;                  // parameters before the update
  const std::vector<std::size_t>* batch1 = nullptr;
  const std::vector<std::size_t>* batch2 = nullptr;
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainHooks {
  std::function<void(const StepInfo&)> on_step;
  std::function<void(std::string_view)> on_warning;
};

// Base teacher. cfg.mode must be kBaseOe or kBaseCe; kBaseOe draws one
// labeled batch plus one equally sized pool batch with uniform targets per
// step. When in_val is given, returns the parameters with the best
// validation error among the final 20% of epochs.
Mlp train_base(const LabeledDataset& labeled, const UnlabeledDataset& pool,
               const TrainConfig& cfg, const LabeledDataset* in_val = nullptr,
               const TrainHooks& hooks = {});

// Student round. `selected` carries teacher labels q (duplicates included),
// `rest` carries the damped targets v for the unselected pool. Merged modes
// ignore `rest` and weight selected samples by cfg.lambda. `teacher` is only
// used when cfg.warm_start is set.
Mlp train_student(const LabeledDataset& labeled, const SoftDataset& selected,
                  const SoftDataset& rest, const TrainConfig& cfg,
                  const LabeledDataset* in_val = nullptr, const Mlp* teacher = nullptr,
                  const TrainHooks& hooks = {});

// Fraction of samples whose argmax logit differs from the label.
double error_rate(const Mlp& m, const LabeledDataset& ds);

std::uint64_t params_checksum(const Mlp& m);

// Checkpoint (magic "ODSTMODL"): header with layer sizes, then the
// standardization block and row-major parameter blocks, all f64.
void save_model(const std::string& path, const Mlp& m);
Mlp load_model(const std::string& path);

}  // namespace odst::model
