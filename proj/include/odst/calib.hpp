#pragma once

// Confidence calibration: expected calibration error over equal-width
// confidence bins, and a temperature fitted by direct ECE minimization.

#include <cstdint>
#include <string>
#include <vector>

#include "odst/core.hpp"
#include "odst/model.hpp"

namespace odst::calib {

inline constexpr int kDefaultBins = 15;
inline constexpr double kTempMin = 0.05;
inline constexpr double kTempMax = 20.0;
inline constexpr int kTempGridPoints = 400;

struct Calibration {
  double temperature = 1.0;  // in [kTempMin, kTempMax]
};

// Binned |accuracy - mean confidence| weighted by bin occupancy; confidence
// is the max entry, a prediction counts as correct when its argmax equals
// the label. Bin b covers [b/bins, (b+1)/bins), the last bin includes 1.
double ece(const std::vector<ProbVector>& predictions,
           const std::vector<std::uint32_t>& labels, int bins = kDefaultBins);

// softmax(logits / T).
ProbVector apply_temperature(const std::vector<double>& logits, const Calibration& cal);

// Minimizes ece(softmax(logits/T), labels) over a log-spaced grid (with T=1
// always included) followed by one golden-section refinement around the best
// grid point. The returned ECE never exceeds the T=1 value.
Calibration fit_temperature(const std::vector<std::vector<double>>& logits,
                            const std::vector<std::uint32_t>& labels,
                            int bins = kDefaultBins);

// The fitting grid, exposed so callers can reason about its resolution.
std::vector<double> temperature_grid();

// Calibrated probabilities of a model on one input / many inputs.
ProbVector predict(const model::Mlp& m, const std::vector<double>& x, const Calibration& cal);
std::vector<ProbVector> predict_many(const model::Mlp& m,
                                     const std::vector<std::vector<double>>& xs,
                                     const Calibration& cal);

// Sidecar record stored next to a model checkpoint (magic "ODSTCALB").
void save_calibration(const std::string& path, const Calibration& cal);
Calibration load_calibration(const std::string& path);

}  // namespace odst::calib
