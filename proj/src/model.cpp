#include "odst/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace odst::model {

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kBaseOe: return "BASE_OE";
    case Mode::kBaseCe: return "BASE_CE";
    case Mode::kOdst: return "ODST";
    case Mode::kSt: return "ST";
    case Mode::kStOt: return "ST_OT";
    case Mode::kAblateHardU: return "ABLATE_HARD_U";
    case Mode::kAblateNoSmooth: return "ABLATE_NO_SMOOTH";
    case Mode::kNonIterative: return "NON_ITERATIVE";
  }
  return "?";
}

Mode mode_from_name(std::string_view name) {
  for (Mode m : {Mode::kBaseOe, Mode::kBaseCe, Mode::kOdst, Mode::kSt, Mode::kStOt,
                 Mode::kAblateHardU, Mode::kAblateNoSmooth, Mode::kNonIterative}) {
    if (name == mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown mode: " + std::string(name));
}

bool is_base_mode(Mode m) { return m == Mode::kBaseOe || m == Mode::kBaseCe; }

bool merged_objective(Mode m) { return m == Mode::kSt || m == Mode::kStOt; }

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

Mlp make_mlp(const std::vector<std::uint32_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("make_mlp: need at least input and output layers");
  }
  for (auto s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("make_mlp: zero-width layer");
  }
  if (layer_sizes.back() < 2) {
    throw std::invalid_argument("make_mlp: need at least 2 classes");
  }
  Mlp m;
  m.layer_sizes = layer_sizes;
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const double std_dev = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = std_dev * rng.normal();
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

namespace {

void standardize(const Mlp& m, const std::vector<double>& x, std::vector<double>& out) {
  out.resize(x.size());
  if (m.input_mean.empty()) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = (x[j] - m.input_mean[j]) * m.input_scale[j];
  }
}

// Activations of every layer for one input; acts[0] is the standardized
// input, acts.back() the logits.
void forward_acts(const Mlp& m, const std::vector<double>& x,
                  std::vector<std::vector<double>>& acts) {
  const std::size_t num_layers = m.weights.size();
  acts.resize(num_layers + 1);
  standardize(m, x, acts[0]);
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t in = m.layer_sizes[l];
    const std::size_t out = m.layer_sizes[l + 1];
    auto& z = acts[l + 1];
    z.assign(m.biases[l].begin(), m.biases[l].end());
    const double* w = m.weights[l].data();
    const auto& a = acts[l];
    for (std::size_t i = 0; i < in; ++i) {
      const double ai = a[i];
      const double* row = w + i * out;
      for (std::size_t j = 0; j < out; ++j) z[j] += ai * row[j];
    }
    if (l + 1 < num_layers) {
      for (double& v : z) v = std::tanh(v);
    }
  }
}

void check_input(const Mlp& m, const std::vector<double>& x) {
  if (x.size() != m.input_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");
  }
}

}  // namespace

std::vector<double> forward(const Mlp& m, const std::vector<double>& x) {
  check_input(m, x);
  std::vector<std::vector<double>> acts;
  forward_acts(m, x, acts);
  return acts.back();
}

ProbVector softmax(const std::vector<double>& logits) {
  if (logits.size() < 2) throw std::invalid_argument("softmax: need at least 2 logits");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
    mx = std::max(mx, v);
  }
  ProbVector p;
  p.values.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p.values[i] = std::exp(logits[i] - mx);
    sum += p.values[i];
  }
  for (double& v : p.values) v /= sum;
  return p;
}

double ce_soft(const ProbVector& target, const std::vector<double>& logits) {
  require_prob(target, "ce_soft");
  if (target.size() != logits.size()) {
    throw std::invalid_argument("ce_soft: arity mismatch");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("ce_soft: non-finite logit");
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  double dot = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) dot += target.values[i] * logits[i];
  return lse - dot;
}

Gradients zero_gradients(const Mlp& m) {
  Gradients g;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    g.weights.emplace_back(m.weights[l].size(), 0.0);
    g.biases.emplace_back(m.biases[l].size(), 0.0);
  }
  return g;
}

double backward(const Mlp& m, const std::vector<std::vector<double>>& xs,
                const std::vector<ProbVector>& targets,
                const std::vector<double>& weights, double denom, Gradients& grad) {
  if (xs.size() != targets.size()) throw std::invalid_argument("backward: batch size mismatch");
  if (!weights.empty() && weights.size() != xs.size()) {
    throw std::invalid_argument("backward: weight count mismatch");
  }
  if (!(denom > 0.0)) throw std::invalid_argument("backward: denom must be positive");
  const std::size_t num_layers = m.weights.size();
  double loss = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, delta_prev;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    check_input(m, xs[s]);
    const double f = (weights.empty() ? 1.0 : weights[s]) / denom;
    forward_acts(m, xs[s], acts);
    const auto& logits = acts.back();
    loss += f * ce_soft(targets[s], logits);
    const ProbVector p = softmax(logits);
    delta.resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      delta[j] = f * (p.values[j] - targets[s].values[j]);
    }
    for (std::size_t l = num_layers; l-- > 0;) {
      const std::size_t in = m.layer_sizes[l];
      const std::size_t out = m.layer_sizes[l + 1];
      const auto& a = acts[l];
      double* gw = grad.weights[l].data();
      for (std::size_t i = 0; i < in; ++i) {
        const double ai = a[i];
        double* row = gw + i * out;
        for (std::size_t j = 0; j < out; ++j) row[j] += ai * delta[j];
      }
      for (std::size_t j = 0; j < out; ++j) grad.biases[l][j] += delta[j];
      if (l > 0) {
        const double* w = m.weights[l].data();
        delta_prev.assign(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
          const double* row = w + i * out;
          double acc = 0.0;
          for (std::size_t j = 0; j < out; ++j) acc += row[j] * delta[j];
          delta_prev[i] = acc * (1.0 - a[i] * a[i]);  // tanh'
        }
        std::swap(delta, delta_prev);
      }
    }
  }
  return loss;
}

GradCheckReport grad_check(const Mlp& m, const std::vector<std::vector<double>>& xs,
                           const std::vector<ProbVector>& targets, double step,
                           double tolerance) {
  if (xs.empty()) throw std::invalid_argument("grad_check: empty batch");
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  Gradients analytic = zero_gradients(m);
  backward(m, xs, targets, {}, static_cast<double>(xs.size()), analytic);

  Mlp probe = m;
  auto loss_at = [&]() {
    double total = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      total += ce_soft(targets[s], forward(probe, xs[s]));
    }
    return total / static_cast<double>(xs.size());
  };
  GradCheckReport report;
  auto check_block = [&](std::vector<double>& params, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = loss_at();
      params[i] = saved - step;
      const double down = loss_at();
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic_v = grads[i];
      const double denom = std::max({std::fabs(analytic_v), std::fabs(numeric), 0.01});
      report.max_rel_error =
          std::max(report.max_rel_error, std::fabs(analytic_v - numeric) / denom);
    }
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    check_block(probe.weights[l], analytic.weights[l]);
    check_block(probe.biases[l], analytic.biases[l]);
  }
  report.pass = report.max_rel_error <= tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Borrowed views into the training pools; targets/weights are stored per
// stream, features point into the caller's datasets.
struct Stream {
  std::vector<const std::vector<double>*> x;
  std::vector<const ProbVector*> target;
  std::vector<double> weight;  // empty => all ones

  std::size_t size() const { return x.size(); }
};

// Cycles a reshuffled permutation so every pool entry is visited once per
// cycle; batches are always full-size.
class BatchCycler {
 public:
  BatchCycler(std::size_t n, std::uint64_t seed) : rng_(seed), perm_(n), pos_(n) {
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  }

  void fill(std::vector<std::size_t>& batch, std::size_t count) {
    batch.clear();
    while (batch.size() < count) {
      if (pos_ == perm_.size()) {
        rng_.shuffle(perm_);
        pos_ = 0;
      }
      batch.push_back(perm_[pos_++]);
    }
  }

 private:
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t pos_;
};

void fit_standardizer(Mlp& m, const std::vector<const Stream*>& streams) {
  const std::size_t d = m.input_dim();
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  std::size_t n = 0;
  for (const auto* s : streams) {
    for (const auto* x : s->x) {
      for (std::size_t j = 0; j < d; ++j) {
        mean[j] += (*x)[j];
        sq[j] += (*x)[j] * (*x)[j];
      }
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("train: no features to standardize");
  m.input_mean.resize(d);
  m.input_scale.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    m.input_mean[j] = mean[j] / static_cast<double>(n);
    const double var = std::max(sq[j] / static_cast<double>(n) - m.input_mean[j] * m.input_mean[j], 0.0);
    m.input_scale[j] = 1.0 / std::sqrt(var + 1e-12);
  }
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int d : cfg.lr_decay_epochs) {
    if (epoch > d) lr *= cfg.lr_decay_factor;
  }
  return lr;
}

Mlp train_core(Mlp m, const Stream& s1, const Stream& s2, const TrainConfig& cfg,
               const LabeledDataset* in_val, const TrainHooks& hooks) {
  if (s1.size() == 0) throw std::invalid_argument("train: empty primary stream");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw std::invalid_argument("train: momentum outside [0,1)");
  }

  const std::size_t batch = std::min<std::size_t>(cfg.batch_size, s1.size());
  const std::size_t steps_per_epoch = (s1.size() + batch - 1) / batch;

  BatchCycler cycler(s1.size(), derive_seed(cfg.seed, "stream1"));
  Rng rng2(derive_seed(cfg.seed, "stream2"));

  Gradients grad = zero_gradients(m);
  Gradients momentum = zero_gradients(m);

  std::vector<std::size_t> batch1, batch2;
  std::vector<std::vector<double>> xs1, xs2;
  std::vector<ProbVector> ts1, ts2;
  std::vector<double> ws1;

  Mlp best;
  double best_err = std::numeric_limits<double>::infinity();
  const int eval_span = std::max(1, cfg.epochs / 5);  // final 20% of epochs
  const int first_eval_epoch = cfg.epochs - eval_span + 1;

  std::size_t global_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    for (std::size_t step = 0; step < steps_per_epoch; ++step, ++global_step) {
      cycler.fill(batch1, batch);
      xs1.clear(); ts1.clear(); ws1.clear();
      for (std::size_t idx : batch1) {
        xs1.push_back(*s1.x[idx]);
        ts1.push_back(*s1.target[idx]);
        ws1.push_back(s1.weight.empty() ? 1.0 : s1.weight[idx]);
      }
      batch2.clear();
      if (s2.size() > 0) {
        for (std::size_t i = 0; i < batch; ++i) batch2.push_back(rng2.uniform_index(s2.size()));
        xs2.clear(); ts2.clear();
        for (std::size_t idx : batch2) {
          xs2.push_back(*s2.x[idx]);
          ts2.push_back(*s2.target[idx]);
        }
      }

      for (auto& block : grad.weights) std::fill(block.begin(), block.end(), 0.0);
      for (auto& block : grad.biases) std::fill(block.begin(), block.end(), 0.0);
      double loss = backward(m, xs1, ts1, ws1, static_cast<double>(xs1.size()), grad);
      if (!batch2.empty()) {
        loss += backward(m, xs2, ts2, {}, static_cast<double>(xs2.size()), grad);
      }

      if (hooks.on_step) {
        StepInfo info;
        info.step = global_step;
        info.model = &m;
        info.batch1 = &batch1;
        info.batch2 = &batch2;
        info.loss = loss;
        info.learning_rate = lr;
        hooks.on_step(info);
      }

      // Nesterov momentum with coupled weight decay.
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        auto update = [&](std::vector<double>& params, std::vector<double>& g,
                          std::vector<double>& buf) {
          for (std::size_t i = 0; i < params.size(); ++i) {
            const double gi = g[i] + cfg.weight_decay * params[i];
            buf[i] = cfg.momentum * buf[i] + gi;
            params[i] -= lr * (gi + cfg.momentum * buf[i]);
          }
        };
        update(m.weights[l], grad.weights[l], momentum.weights[l]);
        update(m.biases[l], grad.biases[l], momentum.biases[l]);
      }
    }

    if (in_val != nullptr && epoch >= first_eval_epoch) {
      const double err = error_rate(m, *in_val);
      if (err < best_err) {
        best_err = err;
        best = m;
      }
    }
  }
  if (in_val != nullptr) return best;
  return m;
}

std::vector<ProbVector> one_hot_targets(const LabeledDataset& ds) {
  std::vector<ProbVector> t;
  t.reserve(ds.samples.size());
  for (const auto& s : ds.samples) t.push_back(one_hot(s.y, ds.num_classes));
  return t;
}

}  // namespace

Mlp train_base(const LabeledDataset& labeled, const UnlabeledDataset& pool,
               const TrainConfig& cfg, const LabeledDataset* in_val,
               const TrainHooks& hooks) {
  if (!is_base_mode(cfg.mode)) {
    throw std::invalid_argument("train_base: mode must be BASE_OE or BASE_CE");
  }
  if (labeled.samples.empty()) throw std::invalid_argument("train_base: empty labeled set");
  if (cfg.mode == Mode::kBaseOe && pool.samples.empty()) {
    throw std::invalid_argument("train_base: BASE_OE needs a non-empty pool");
  }

  const auto targets = one_hot_targets(labeled);
  Stream s1;
  for (std::size_t i = 0; i < labeled.samples.size(); ++i) {
    s1.x.push_back(&labeled.samples[i].x);
    s1.target.push_back(&targets[i]);
  }

  const ProbVector uniform = uniform_prob(labeled.num_classes);
  Stream s2;
  if (cfg.mode == Mode::kBaseOe) {
    for (const auto& s : pool.samples) {
      s2.x.push_back(&s.z);
      s2.target.push_back(&uniform);
    }
  }

  std::vector<std::uint32_t> sizes;
  sizes.push_back(labeled.d);
  for (auto h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(labeled.num_classes);
  Mlp m = make_mlp(sizes, cfg.seed);
  std::vector<const Stream*> streams{&s1};
  if (s2.size() > 0) streams.push_back(&s2);
  fit_standardizer(m, streams);

  return train_core(std::move(m), s1, s2, cfg, in_val, hooks);
}

Mlp train_student(const LabeledDataset& labeled, const SoftDataset& selected,
                  const SoftDataset& rest, const TrainConfig& cfg,
                  const LabeledDataset* in_val, const Mlp* teacher,
                  const TrainHooks& hooks) {
  if (is_base_mode(cfg.mode)) {
    throw std::invalid_argument("train_student: base mode given");
  }
  if (labeled.samples.empty()) throw std::invalid_argument("train_student: empty labeled set");
  if (selected.size() == 0 && hooks.on_warning) {
    hooks.on_warning("train_student: empty selection, objective degenerates to the base form");
  }
  if (selected.target.size() != selected.x.size() || rest.target.size() != rest.x.size()) {
    throw std::invalid_argument("train_student: malformed soft dataset");
  }

  const auto targets = one_hot_targets(labeled);
  const bool merged = merged_objective(cfg.mode);

  // Stream 1 is the labeled set plus the selected samples (duplicates are
  // literal entries); merged modes weight selected entries by lambda and use
  // no second stream.
  Stream s1;
  for (std::size_t i = 0; i < labeled.samples.size(); ++i) {
    s1.x.push_back(&labeled.samples[i].x);
    s1.target.push_back(&targets[i]);
    s1.weight.push_back(1.0);
  }
  for (std::size_t i = 0; i < selected.size(); ++i) {
    require_prob(selected.target[i], "train_student: selected target");
    s1.x.push_back(&selected.x[i]);
    s1.target.push_back(&selected.target[i]);
    s1.weight.push_back(merged ? cfg.lambda : 1.0);
  }
  if (!merged) s1.weight.clear();  // unweighted

  Stream s2;
  if (!merged) {
    for (std::size_t i = 0; i < rest.size(); ++i) {
      require_prob(rest.target[i], "train_student: rest target");
      s2.x.push_back(&rest.x[i]);
      s2.target.push_back(&rest.target[i]);
    }
  }

  Mlp m;
  if (cfg.warm_start) {
    if (teacher == nullptr) {
      throw std::invalid_argument("train_student: warm start without a teacher");
    }
    m = *teacher;
  } else {
    std::vector<std::uint32_t> sizes;
    sizes.push_back(labeled.d);
    for (auto h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(labeled.num_classes);
    m = make_mlp(sizes, cfg.seed);
    std::vector<const Stream*> streams{&s1};
    if (s2.size() > 0) streams.push_back(&s2);
    fit_standardizer(m, streams);
  }

  return train_core(std::move(m), s1, s2, cfg, in_val, hooks);
}

double error_rate(const Mlp& m, const LabeledDataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("error_rate: empty dataset");
  std::vector<std::uint8_t> wrong(ds.samples.size(), 0);
  parallel_for(ds.samples.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::vector<double>> acts;
    for (std::size_t i = begin; i < end; ++i) {
      forward_acts(m, ds.samples[i].x, acts);
      const auto& logits = acts.back();
      std::size_t arg = 0;
      for (std::size_t j = 1; j < logits.size(); ++j) {
        if (logits[j] > logits[arg]) arg = j;
      }
      wrong[i] = arg != ds.samples[i].y;
    }
  });
  std::size_t errors = 0;
  for (auto w : wrong) errors += w;
  return static_cast<double>(errors) / static_cast<double>(ds.samples.size());
}

std::uint64_t params_checksum(const Mlp& m) {
  std::uint64_t h = 14695981039346656037ull;
  for (auto s : m.layer_sizes) h = fnv1a64(&s, sizeof s, h);
  auto mix = [&](const std::vector<double>& v) {
    h = fnv1a64(v.data(), v.size() * sizeof(double), h);
  };
  mix(m.input_mean);
  mix(m.input_scale);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    mix(m.weights[l]);
    mix(m.biases[l]);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kModelMagic[8] = {'O', 'D', 'S', 'T', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void save_model(const std::string& path, const Mlp& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kModelMagic, 8);
  auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  put32(kModelVersion);
  put32(static_cast<std::uint32_t>(m.layer_sizes.size()));
  for (auto s : m.layer_sizes) put32(s);
  const std::uint8_t has_scaler = m.input_mean.empty() ? 0 : 1;
  f.write(reinterpret_cast<const char*>(&has_scaler), 1);
  auto put_block = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  if (has_scaler) {
    put_block(m.input_mean);
    put_block(m.input_scale);
  }
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    put_block(m.weights[l]);
    put_block(m.biases[l]);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

Mlp load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kModelMagic, 8) != 0) {
    throw std::runtime_error(path + ": bad model magic");
  }
  auto get32 = [&]() {
    std::uint32_t v;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f) throw std::runtime_error(path + ": model file truncated");
    return v;
  };
  if (get32() != kModelVersion) throw std::runtime_error(path + ": unsupported model version");
  Mlp m;
  const std::uint32_t n_sizes = get32();
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error(path + ": bad layer count");
  m.layer_sizes.resize(n_sizes);
  for (auto& s : m.layer_sizes) s = get32();
  std::uint8_t has_scaler = 0;
  f.read(reinterpret_cast<char*>(&has_scaler), 1);
  auto get_block = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw std::runtime_error(path + ": model file truncated");
  };
  if (has_scaler) {
    get_block(m.input_mean, m.layer_sizes.front());
    get_block(m.input_scale, m.layer_sizes.front());
  }
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    std::vector<double> w, b;
    get_block(w, static_cast<std::size_t>(m.layer_sizes[l]) * m.layer_sizes[l + 1]);
    get_block(b, m.layer_sizes[l + 1]);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

}  // namespace odst::model
