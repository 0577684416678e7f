#pragma once

// Core vocabulary: probability vectors, samples, datasets, seeded RNG,
// binary dataset I/O and small shared utilities.

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace odst {

// All probability sums are checked against this absolute tolerance.
inline constexpr double kSimplexTol = 1e-9;

// ---------------------------------------------------------------------------
// Probability vectors
// ---------------------------------------------------------------------------

struct ProbVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  std::size_t argmax() const;
  double max_entry() const;
};

// True iff size >= 2, every entry lies in [0,1] and the entries sum to 1
// within kSimplexTol.
bool validate_prob(const ProbVector& p);

// Throws std::invalid_argument when validate_prob fails.
void require_prob(const ProbVector& p, const char* where);

ProbVector uniform_prob(std::size_t k);

// Indicator vector; throws std::out_of_range for y >= k and
// std::invalid_argument for k < 2.
ProbVector one_hot(std::size_t y, std::size_t k);

// (1 - w) * p + w * uniform(K), w in [0,1].
ProbVector mix_with_uniform(const ProbVector& p, double w);

// ---------------------------------------------------------------------------
// Samples and datasets
// ---------------------------------------------------------------------------

struct LabeledSample {
  std::vector<double> x;
  std::uint32_t y = 0;
};

class ProvenanceView;

// Unlabeled pool point. Which mixture component generated the point (and
// whether that component is in-distribution) is recorded at sampling time
// but kept private: learning and selection code only ever sees `z`, while
// evaluation code goes through ProvenanceView.
class UnlabeledSample {
 public:
  std::vector<double> z;

  UnlabeledSample() = default;
  UnlabeledSample(std::vector<double> features, std::uint32_t component, bool in_dist)
      : z(std::move(features)), component_(component), in_dist_(in_dist) {}

 private:
  std::uint32_t component_ = 0;
  bool in_dist_ = false;
  friend class ProvenanceView;
};

enum class DatasetRole : std::uint8_t {
  kTrain = 0,
  kInVal = 1,
  kOodVal = 2,
  kTest = 3,
  kUnlabeled = 4,
};

const char* role_name(DatasetRole role);

struct LabeledDataset {
  DatasetRole role = DatasetRole::kTrain;
  std::uint32_t d = 0;
  std::uint32_t num_classes = 0;
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
};

struct UnlabeledDataset {
  DatasetRole role = DatasetRole::kUnlabeled;
  std::uint32_t d = 0;
  std::uint32_t num_classes = 0;  // classes of the in-distribution task
  std::vector<UnlabeledSample> samples;

  std::size_t size() const { return samples.size(); }
};

// Read access to generator provenance. Only evaluation/audit code may
// construct one; everything on the learning path works on features alone.
class ProvenanceView {
 public:
  explicit ProvenanceView(const UnlabeledDataset& ds) : ds_(&ds) {}

  std::size_t size() const { return ds_->samples.size(); }
  std::uint32_t component(std::size_t i) const { return ds_->samples[i].component_; }
  bool in_distribution(std::size_t i) const { return ds_->samples[i].in_dist_; }

 private:
  const UnlabeledDataset* ds_;
};

// ---------------------------------------------------------------------------
// Seeded RNG with labeled substreams
// ---------------------------------------------------------------------------

// Stable 64-bit seed derivation: independent substreams are addressed by a
// (seed, label[, index]) triple so that pipeline stages never share a stream
// and resumed runs can re-derive exactly the generators they need.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal();

  // Uniform over {0, ..., n-1} without modulo bias.
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

// Worker count: ODST_THREADS when set, otherwise the hardware count.
// Results never depend on it; parallel callers write to disjoint slots and
// chunk boundaries are fixed, so reductions happen in a fixed order.
int thread_count();

// Runs fn(begin, end) over [0, n) split into fixed-size chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Hashing / formatting
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t h = 14695981039346656037ull);

std::uint64_t checksum(const LabeledDataset& ds);
std::uint64_t checksum(const UnlabeledDataset& ds);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

// ---------------------------------------------------------------------------
// Binary dataset I/O (little-endian, magic "ODST")
// ---------------------------------------------------------------------------

void write_dataset(const std::string& path, const LabeledDataset& ds);
void write_dataset(const std::string& path, const UnlabeledDataset& ds);
LabeledDataset read_labeled_dataset(const std::string& path);
UnlabeledDataset read_unlabeled_dataset(const std::string& path);

}  // namespace odst
