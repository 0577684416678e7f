#include "odst/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace odst::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_components(const std::vector<ComponentSpec>& comps, std::uint32_t d,
                         const char* block) {
  if (comps.empty()) {
    throw std::invalid_argument(std::string("world: empty ") + block + " block");
  }
  double wsum = 0.0;
  for (const auto& c : comps) {
    if (c.mean.size() != d || c.var.size() != d) {
      throw std::invalid_argument(std::string("world: component dimension mismatch in ") + block);
    }
    for (double v : c.var) {
      if (!(v > 0.0)) {
        throw std::invalid_argument(std::string("world: degenerate covariance in ") + block);
      }
    }
    if (!(c.weight > 0.0)) {
      throw std::invalid_argument(std::string("world: non-positive component weight in ") + block);
    }
    wsum += c.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string("world: block weights must sum to 1 in ") + block);
  }
}

// log N(x; mean, diag(var))
double log_gauss(const std::vector<double>& x, const ComponentSpec& c) {
  double q = 0.0;
  double norm = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = x[j] - c.mean[j];
    q += t * t / c.var[j];
    norm += std::log(kTwoPi * c.var[j]);
  }
  return -0.5 * (q + norm);
}

// log sum_i w_i N(x; comp_i)
double log_mixture(const std::vector<ComponentSpec>& comps, const std::vector<double>& x,
                   std::vector<double>* log_terms = nullptr) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> local;
  std::vector<double>& terms = log_terms ? *log_terms : local;
  terms.resize(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    terms[i] = std::log(comps[i].weight) + log_gauss(x, comps[i]);
    mx = std::max(mx, terms[i]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

void check_point(const WorldSpec& world, const std::vector<double>& x) {
  if (x.size() != world.d) {
    throw std::invalid_argument("world: point dimension mismatch");
  }
}

std::size_t draw_component(Rng& rng, const std::vector<ComponentSpec>& comps) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    acc += comps[i].weight;
    if (u < acc) return i;
  }
  return comps.size() - 1;
}

std::vector<double> draw_point(Rng& rng, const ComponentSpec& c) {
  std::vector<double> x(c.mean.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = c.mean[j] + std::sqrt(c.var[j]) * rng.normal();
  }
  return x;
}

}  // namespace

void validate_world(const WorldSpec& world) {
  if (world.d == 0) throw std::invalid_argument("world: d must be positive");
  if (world.num_classes < 2) throw std::invalid_argument("world: need at least 2 classes");
  if (world.in_components.size() != world.num_classes) {
    throw std::invalid_argument("world: need exactly one in-component per class");
  }
  validate_components(world.in_components, world.d, "in");
  validate_components(world.out_components, world.d, "out");
  if (!(world.pi_in > 0.0 && world.pi_in < 1.0)) {
    throw std::invalid_argument("world: pi_in outside (0,1)");
  }
}

WorldSpec default_ring_world() {
  WorldSpec w;
  w.d = 2;
  w.num_classes = 4;
  w.pi_in = 0.05;
  for (int c = 0; c < 4; ++c) {
    const double a = kTwoPi * c / 4.0;
    w.in_components.push_back(
        {{2.0 * std::cos(a), 2.0 * std::sin(a)}, {0.35, 0.35}, 0.25});
  }
  // 12 components on an inner ring that overlaps the class region, 48 on an
  // outer ring; equal weights.
  const double wout = 1.0 / 60.0;
  for (int j = 0; j < 12; ++j) {
    const double a = kTwoPi * (j + 0.5) / 12.0;
    w.out_components.push_back(
        {{3.0 * std::cos(a), 3.0 * std::sin(a)}, {0.55, 0.55}, wout});
  }
  for (int j = 0; j < 48; ++j) {
    const double a = kTwoPi * j / 48.0;
    w.out_components.push_back(
        {{6.0 * std::cos(a), 6.0 * std::sin(a)}, {0.55, 0.55}, wout});
  }
  validate_world(w);
  return w;
}

WorldSpec far_ood_world() {
  WorldSpec w = default_ring_world();
  for (auto& c : w.out_components) {
    c.mean[0] += 10.0;
    c.mean[1] += 10.0;
  }
  return w;
}

WorldSpec world_from_preset(const std::string& name) {
  if (name == "default_ring") return default_ring_world();
  throw std::invalid_argument("unknown world preset: " + name);
}

double log_density_in(const WorldSpec& world, const std::vector<double>& x) {
  check_point(world, x);
  return log_mixture(world.in_components, x);
}

double log_density_out(const WorldSpec& world, const std::vector<double>& x) {
  check_point(world, x);
  return log_mixture(world.out_components, x);
}

double density_in(const WorldSpec& world, const std::vector<double>& x) {
  return std::exp(log_density_in(world, x));
}

double density_out(const WorldSpec& world, const std::vector<double>& x) {
  return std::exp(log_density_out(world, x));
}

double density_all(const WorldSpec& world, const std::vector<double>& x) {
  return world.pi_in * density_in(world, x) + (1.0 - world.pi_in) * density_out(world, x);
}

ProbVector posterior_in(const WorldSpec& world, const std::vector<double>& x) {
  check_point(world, x);
  if (density_in(world, x) == 0.0) return uniform_prob(world.num_classes);
  std::vector<double> log_terms;
  const double lse = log_mixture(world.in_components, x, &log_terms);
  ProbVector p;
  p.values.reserve(log_terms.size());
  for (double t : log_terms) p.values.push_back(std::exp(t - lse));
  return p;
}

LabeledDataset sample_labeled(const WorldSpec& world, std::size_t n, std::uint64_t seed,
                              DatasetRole role) {
  validate_world(world);
  if (n == 0) throw std::invalid_argument("sample_labeled: n must be positive");
  Rng rng(seed);
  LabeledDataset ds;
  ds.role = role;
  ds.d = world.d;
  ds.num_classes = world.num_classes;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = draw_component(rng, world.in_components);
    ds.samples.push_back({draw_point(rng, world.in_components[c]),
                          static_cast<std::uint32_t>(c)});
  }
  return ds;
}

UnlabeledDataset sample_unlabeled(const WorldSpec& world, std::size_t m, std::uint64_t seed) {
  validate_world(world);
  if (m == 0) throw std::invalid_argument("sample_unlabeled: m must be positive");
  Rng rng(seed);
  UnlabeledDataset ds;
  ds.role = DatasetRole::kUnlabeled;
  ds.d = world.d;
  ds.num_classes = world.num_classes;
  ds.samples.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.uniform() < world.pi_in) {
      const std::size_t c = draw_component(rng, world.in_components);
      ds.samples.emplace_back(draw_point(rng, world.in_components[c]),
                              static_cast<std::uint32_t>(c), true);
    } else {
      const std::size_t c = draw_component(rng, world.out_components);
      ds.samples.emplace_back(draw_point(rng, world.out_components[c]),
                              static_cast<std::uint32_t>(world.num_classes + c), false);
    }
  }
  return ds;
}

UnlabeledDataset sample_ood(const WorldSpec& world, std::size_t n, std::uint64_t seed) {
  validate_world(world);
  if (n == 0) throw std::invalid_argument("sample_ood: n must be positive");
  Rng rng(seed);
  UnlabeledDataset ds;
  ds.role = DatasetRole::kOodVal;
  ds.d = world.d;
  ds.num_classes = world.num_classes;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = draw_component(rng, world.out_components);
    ds.samples.emplace_back(draw_point(rng, world.out_components[c]),
                            static_cast<std::uint32_t>(world.num_classes + c), false);
  }
  return ds;
}

std::pair<LabeledDataset, UnlabeledDataset> make_validation_sets(
    const WorldSpec& world, std::size_t n_in, std::size_t n_ood, std::uint64_t seed) {
  LabeledDataset in_val =
      sample_labeled(world, n_in, derive_seed(seed, "in_val"), DatasetRole::kInVal);
  UnlabeledDataset ood_val = sample_ood(world, n_ood, derive_seed(seed, "ood_val"));
  return {std::move(in_val), std::move(ood_val)};
}

}  // namespace odst::synth
