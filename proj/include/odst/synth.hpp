#pragma once

// Gaussian-mixture world: an in-distribution mixture with one component per
// class plus a larger out-distribution mixture. The pool marginal mixes the
// two blocks with weight pi_in.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odst/core.hpp"

namespace odst::synth {

struct ComponentSpec {
  std::vector<double> mean;
  std::vector<double> var;  // diagonal covariance, entries > 0
  double weight = 0.0;      // within its block
};

struct WorldSpec {
  std::uint32_t d = 0;
  std::uint32_t num_classes = 0;              // K; class c is in_components[c]
  std::vector<ComponentSpec> in_components;   // exactly K entries
  std::vector<ComponentSpec> out_components;  // M - K entries
  double pi_in = 0.0;                         // in (0, 1)
};

// Throws std::invalid_argument on inconsistent dimensions, non-positive
// variances, weights that do not sum to 1 per block, or pi_in outside (0,1).
void validate_world(const WorldSpec& world);

// The default two-dimensional world: four class components on a small circle
// and sixty out-components on two rings, the inner one overlapping the class
// region. pi_in = 0.05.
WorldSpec default_ring_world();

// default_ring_world with every out-component mean shifted by a constant
// offset; used as an additional, easier outlier evaluation set.
WorldSpec far_ood_world();

// Densities (diagonal Gaussian mixtures, evaluated via log-sum-exp).
double log_density_in(const WorldSpec& world, const std::vector<double>& x);
double log_density_out(const WorldSpec& world, const std::vector<double>& x);
double density_in(const WorldSpec& world, const std::vector<double>& x);
double density_out(const WorldSpec& world, const std::vector<double>& x);

// pi_in * density_in + (1 - pi_in) * density_out.
double density_all(const WorldSpec& world, const std::vector<double>& x);

// Class posterior of the in-distribution mixture. Returns the uniform vector
// when density_in(x) underflows to zero.
ProbVector posterior_in(const WorldSpec& world, const std::vector<double>& x);

// Seeded samplers. Counts must be positive.
LabeledDataset sample_labeled(const WorldSpec& world, std::size_t n,
                              std::uint64_t seed, DatasetRole role = DatasetRole::kTrain);
UnlabeledDataset sample_unlabeled(const WorldSpec& world, std::size_t m, std::uint64_t seed);

// Samples drawn from the out-block only; every sample is out-of-distribution.
UnlabeledDataset sample_ood(const WorldSpec& world, std::size_t n, std::uint64_t seed);

// (in_val with labels, ood_val from out-components only).
std::pair<LabeledDataset, UnlabeledDataset> make_validation_sets(
    const WorldSpec& world, std::size_t n_in, std::size_t n_ood, std::uint64_t seed);

// World <-> JSON-ish config plumbing lives in experiment.cpp; here only the
// preset lookup used by it.
WorldSpec world_from_preset(const std::string& name);

}  // namespace odst::synth
