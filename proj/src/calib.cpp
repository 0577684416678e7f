#include "odst/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace odst::calib {

double ece(const std::vector<ProbVector>& predictions,
           const std::vector<std::uint32_t>& labels, int bins) {
  if (predictions.empty()) throw std::invalid_argument("ece: empty prediction set");
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("ece: prediction/label count mismatch");
  }
  if (bins < 1) throw std::invalid_argument("ece: need at least one bin");
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    require_prob(predictions[i], "ece");
    if (labels[i] >= predictions[i].size()) {
      throw std::out_of_range("ece: label out of class range");
    }
    const std::size_t arg = predictions[i].argmax();
    const double conf = predictions[i].values[arg];
    int b = static_cast<int>(conf * bins);
    if (b >= bins) b = bins - 1;  // confidence exactly 1.0
    conf_sum[b] += conf;
    acc_sum[b] += (arg == labels[i]) ? 1.0 : 0.0;
    count[b] += 1;
  }
  const double n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double cnt = static_cast<double>(count[b]);
    total += (cnt / n) * std::fabs(acc_sum[b] / cnt - conf_sum[b] / cnt);
  }
  return total;
}

ProbVector apply_temperature(const std::vector<double>& logits, const Calibration& cal) {
  if (!(cal.temperature >= kTempMin && cal.temperature <= kTempMax)) {
    throw std::invalid_argument("apply_temperature: temperature out of range");
  }
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / cal.temperature;
  return model::softmax(scaled);
}

std::vector<double> temperature_grid() {
  std::vector<double> grid;
  grid.reserve(kTempGridPoints + 1);
  const double lo = std::log(kTempMin);
  const double hi = std::log(kTempMax);
  for (int i = 0; i < kTempGridPoints; ++i) {
    grid.push_back(std::exp(lo + (hi - lo) * i / (kTempGridPoints - 1)));
  }
  grid.push_back(1.0);  // the identity temperature is always a candidate
  std::sort(grid.begin(), grid.end());
  return grid;
}

Calibration fit_temperature(const std::vector<std::vector<double>>& logits,
                            const std::vector<std::uint32_t>& labels, int bins) {
  if (logits.empty()) throw std::invalid_argument("fit_temperature: empty logit set");
  if (logits.size() != labels.size()) {
    throw std::invalid_argument("fit_temperature: logit/label count mismatch");
  }
  auto objective = [&](double t) {
    std::vector<ProbVector> preds;
    preds.reserve(logits.size());
    Calibration cal{t};
    for (const auto& l : logits) preds.push_back(apply_temperature(l, cal));
    return ece(preds, labels, bins);
  };

  const std::vector<double> grid = temperature_grid();
  double best_t = grid.front();
  double best_e = objective(best_t);
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double e = objective(grid[i]);
    if (e < best_e) {
      best_e = e;
      best_t = grid[i];
      best_i = i;
    }
  }

  // One golden-section pass between the neighbors of the best grid point.
  // The objective is piecewise constant, so we keep the best point ever seen
  // rather than trusting unimodality.
  double a = grid[best_i == 0 ? 0 : best_i - 1];
  double b = grid[std::min(best_i + 1, grid.size() - 1)];
  const double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int iter = 0; iter < 48 && (b - a) > 1e-12; ++iter) {
    if (fc < best_e) { best_e = fc; best_t = c; }
    if (fd < best_e) { best_e = fd; best_t = d; }
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  return Calibration{best_t};
}

ProbVector predict(const model::Mlp& m, const std::vector<double>& x, const Calibration& cal) {
  return apply_temperature(model::forward(m, x), cal);
}

std::vector<ProbVector> predict_many(const model::Mlp& m,
                                     const std::vector<std::vector<double>>& xs,
                                     const Calibration& cal) {
  std::vector<ProbVector> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = apply_temperature(model::forward(m, xs[i]), cal);
    }
  });
  return out;
}

namespace {
constexpr char kCalibMagic[8] = {'O', 'D', 'S', 'T', 'C', 'A', 'L', 'B'};
constexpr std::uint32_t kCalibVersion = 1;
}  // namespace

void save_calibration(const std::string& path, const Calibration& cal) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kCalibMagic, 8);
  f.write(reinterpret_cast<const char*>(&kCalibVersion), 4);
  f.write(reinterpret_cast<const char*>(&cal.temperature), 8);
  if (!f) throw std::runtime_error("write failed: " + path);
}

Calibration load_calibration(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCalibMagic, 8) != 0) {
    throw std::runtime_error(path + ": bad calibration magic");
  }
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  if (!f || version != kCalibVersion) {
    throw std::runtime_error(path + ": unsupported calibration version");
  }
  Calibration cal;
  f.read(reinterpret_cast<char*>(&cal.temperature), 8);
  if (!f) throw std::runtime_error(path + ": calibration file truncated");
  return cal;
}

}  // namespace odst::calib
