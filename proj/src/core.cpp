#include "odst/core.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

namespace odst {

// ---------------------------------------------------------------------------
// Probability vectors
// ---------------------------------------------------------------------------

std::size_t ProbVector::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double ProbVector::max_entry() const { return values[argmax()]; }

bool validate_prob(const ProbVector& p) {
  if (p.values.size() < 2) return false;
  double sum = 0.0;
  for (double v : p.values) {
    if (!(v >= 0.0 && v <= 1.0)) return false;  // also rejects NaN
    sum += v;
  }
  return std::fabs(sum - 1.0) <= kSimplexTol;
}

void require_prob(const ProbVector& p, const char* where) {
  if (!validate_prob(p)) {
    throw std::invalid_argument(std::string(where) + ": invalid probability vector");
  }
}

ProbVector uniform_prob(std::size_t k) {
  if (k < 2) throw std::invalid_argument("uniform_prob: need k >= 2");
  ProbVector p;
  p.values.assign(k, 1.0 / static_cast<double>(k));
  return p;
}

ProbVector one_hot(std::size_t y, std::size_t k) {
  if (k < 2) throw std::invalid_argument("one_hot: need k >= 2");
  if (y >= k) throw std::out_of_range("one_hot: class index out of range");
  ProbVector p;
  p.values.assign(k, 0.0);
  p.values[y] = 1.0;
  return p;
}

ProbVector mix_with_uniform(const ProbVector& p, double w) {
  require_prob(p, "mix_with_uniform");
  if (!(w >= 0.0 && w <= 1.0)) {
    throw std::invalid_argument("mix_with_uniform: weight outside [0,1]");
  }
  const double u = w / static_cast<double>(p.size());
  ProbVector out;
  out.values.reserve(p.size());
  for (double v : p.values) out.values.push_back((1.0 - w) * v + u);
  return out;
}

const char* role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::kTrain: return "train";
    case DatasetRole::kInVal: return "in_val";
    case DatasetRole::kOodVal: return "ood_val";
    case DatasetRole::kTest: return "test";
    case DatasetRole::kUnlabeled: return "unlabeled";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

static std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = fnv1a64(label.data(), label.size());
  return splitmix64(seed ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return splitmix64(derive_seed(seed, label) ^ splitmix64(index + 0x51ed270b4851ull));
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // 1 - uniform() lies in (0, 1], so the log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

int thread_count() {
  if (const char* env = std::getenv("ODST_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t chunk = 1024;  // fixed; results never depend on workers
  const std::size_t num_chunks = (n + chunk - 1) / chunk;
  const int workers = std::min<int>(thread_count(), static_cast<int>(num_chunks));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&]() {
    try {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= num_chunks) return;
        const std::size_t begin = c * chunk;
        fn(begin, std::min(begin + chunk, n));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      next.store(num_chunks);  // stop handing out further chunks
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Hashing / formatting
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

struct Hasher {
  std::uint64_t h = 14695981039346656037ull;
  void bytes(const void* p, std::size_t n) { h = fnv1a64(p, n, h); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
};

}  // namespace

std::uint64_t checksum(const LabeledDataset& ds) {
  Hasher h;
  h.u32(static_cast<std::uint32_t>(ds.role));
  h.u32(ds.d);
  h.u32(ds.num_classes);
  h.u64(ds.samples.size());
  for (const auto& s : ds.samples) {
    for (double v : s.x) h.f64(v);
    h.u32(s.y);
  }
  return h.h;
}

std::uint64_t checksum(const UnlabeledDataset& ds) {
  Hasher h;
  h.u32(static_cast<std::uint32_t>(ds.role));
  h.u32(ds.d);
  h.u32(ds.num_classes);
  h.u64(ds.samples.size());
  ProvenanceView prov(ds);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    for (double v : ds.samples[i].z) h.f64(v);
    h.u32(prov.component(i));
    h.u32(prov.in_distribution(i) ? 1u : 0u);
  }
  return h.h;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: bad numeric field '" + s + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Binary dataset I/O
// ---------------------------------------------------------------------------
//
// Header: magic "ODST" | version u32 | role u8 | count u64 | d u32 | K u32.
// Records: d doubles, then a u32 class index for labeled roles, or a u32
// component index plus a u8 in-distribution flag for unlabeled roles.
// All fields little-endian.

namespace {

constexpr char kMagic[4] = {'O', 'D', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ofstream& f, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  put_bytes(f, &v, sizeof v);
}

void get_bytes(std::ifstream& f, void* p, std::size_t n) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!f) throw std::runtime_error("dataset file truncated");
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  get_bytes(f, &v, sizeof v);
  return v;
}

bool labeled_role(DatasetRole role) {
  return role == DatasetRole::kTrain || role == DatasetRole::kInVal ||
         role == DatasetRole::kTest;
}

struct Header {
  DatasetRole role;
  std::uint64_t count;
  std::uint32_t d;
  std::uint32_t k;
};

void write_header(std::ofstream& f, const Header& h) {
  put_bytes(f, kMagic, 4);
  put(f, kVersion);
  put(f, static_cast<std::uint8_t>(h.role));
  put(f, h.count);
  put(f, h.d);
  put(f, h.k);
}

Header read_header(std::ifstream& f, const std::string& path) {
  char magic[4];
  get_bytes(f, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": bad dataset magic");
  }
  const auto version = get<std::uint32_t>(f);
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported dataset version");
  }
  Header h{};
  h.role = static_cast<DatasetRole>(get<std::uint8_t>(f));
  h.count = get<std::uint64_t>(f);
  h.d = get<std::uint32_t>(f);
  h.k = get<std::uint32_t>(f);
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

}  // namespace

void write_dataset(const std::string& path, const LabeledDataset& ds) {
  if (!labeled_role(ds.role)) {
    throw std::invalid_argument("write_dataset: labeled data with unlabeled role");
  }
  auto f = open_out(path);
  write_header(f, {ds.role, ds.samples.size(), ds.d, ds.num_classes});
  for (const auto& s : ds.samples) {
    if (s.x.size() != ds.d) throw std::invalid_argument("write_dataset: dimension mismatch");
    put_bytes(f, s.x.data(), sizeof(double) * ds.d);
    put(f, s.y);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

void write_dataset(const std::string& path, const UnlabeledDataset& ds) {
  if (labeled_role(ds.role)) {
    throw std::invalid_argument("write_dataset: unlabeled data with labeled role");
  }
  auto f = open_out(path);
  write_header(f, {ds.role, ds.samples.size(), ds.d, ds.num_classes});
  ProvenanceView prov(ds);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    if (s.z.size() != ds.d) throw std::invalid_argument("write_dataset: dimension mismatch");
    put_bytes(f, s.z.data(), sizeof(double) * ds.d);
    put(f, prov.component(i));
    put(f, static_cast<std::uint8_t>(prov.in_distribution(i) ? 1 : 0));
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

LabeledDataset read_labeled_dataset(const std::string& path) {
  auto f = open_in(path);
  const Header h = read_header(f, path);
  if (!labeled_role(h.role)) {
    throw std::runtime_error(path + ": not a labeled dataset");
  }
  LabeledDataset ds;
  ds.role = h.role;
  ds.d = h.d;
  ds.num_classes = h.k;
  ds.samples.resize(h.count);
  for (auto& s : ds.samples) {
    s.x.resize(h.d);
    get_bytes(f, s.x.data(), sizeof(double) * h.d);
    s.y = get<std::uint32_t>(f);
    if (s.y >= h.k) throw std::runtime_error(path + ": class index out of range");
  }
  return ds;
}

UnlabeledDataset read_unlabeled_dataset(const std::string& path) {
  auto f = open_in(path);
  const Header h = read_header(f, path);
  if (labeled_role(h.role)) {
    throw std::runtime_error(path + ": not an unlabeled dataset");
  }
  UnlabeledDataset ds;
  ds.role = h.role;
  ds.d = h.d;
  ds.num_classes = h.k;
  ds.samples.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    std::vector<double> z(h.d);
    get_bytes(f, z.data(), sizeof(double) * h.d);
    const auto component = get<std::uint32_t>(f);
    const auto flag = get<std::uint8_t>(f);
    ds.samples.emplace_back(std::move(z), component, flag != 0);
  }
  return ds;
}

}  // namespace odst
