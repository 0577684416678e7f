#pragma once

// Near-duplicate removal against reference image sets: an exact
// nearest-neighbor pass in pixel space, a hard-removal radius, a candidate
// band, and a structural-similarity check for the candidates. A perceptual
// metric can be plugged in but no implementation ships.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odst/core.hpp"

namespace odst::dedup {

// Pixel values in [0,1]; 8-bit payloads are divided by 255 on load.
// Planar layout: channel plane after channel plane, each row-major.
struct ImageTensor {
  std::uint32_t h = 0, w = 0, c = 0;
  std::vector<float> pixels;

  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return plane_size() * c; }
  float at(std::uint32_t ch, std::uint32_t y, std::uint32_t x) const {
    return pixels[ch * plane_size() + static_cast<std::size_t>(y) * w + x];
  }
};

// Container I/O (magic "ODSTIMGS"): count u64, h u32, w u32, c u32, then
// count * h*w*c bytes of 8-bit pixels, little-endian header.
void write_images(const std::string& path, const std::vector<ImageTensor>& images);
std::vector<ImageTensor> read_images(const std::string& path);

struct NearestHit {
  std::size_t corpus_index = 0;
  std::size_t ref_index = 0;
  double distance = 0.0;
};

// For every corpus image whose nearest reference lies strictly within
// `radius` (Euclidean distance on raw pixel vectors): the true nearest
// reference and distance. Exact; ties resolved to the smaller reference
// index. `blocked` tiles the pair loop for cache locality but performs the
// identical per-pair arithmetic in the identical order, so its output is
// bit-identical to the plain double loop.
std::vector<NearestHit> nn_within_radius(const std::vector<ImageTensor>& corpus,
                                         const std::vector<ImageTensor>& refs, double radius,
                                         bool blocked = true);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), dynamic
// range 1, per-channel maps averaged. Requires h, w >= 11.
double ssim(const ImageTensor& a, const ImageTensor& b);

class PerceptualMetric {
 public:
  virtual ~PerceptualMetric() = default;
  virtual double distance(const ImageTensor& a, const ImageTensor& b) const = 0;
};

struct DedupConfig {
  double hard_radius = 3.0;            // stage 1: remove unconditionally
  double candidate_radius = 2000.0 / 255.0;  // stage 2: flag for inspection
  double ssim_dist_max = 0.4;          // stage 3: remove when 1 - ssim < this
  double perceptual_dist_max = 0.025;  // stage 3, only with a plugged metric
  const PerceptualMetric* perceptual = nullptr;
};

struct RemovalRecord {
  std::size_t corpus_index = 0;
  int stage = 0;  // 1 or 3
  std::size_t ref_index = 0;
  double l2 = 0.0;
  std::optional<double> ssim_dist;       // 1 - ssim, stage 3 only
  std::optional<double> perceptual_dist; // only with a plugged metric
};

struct DedupResult {
  std::vector<std::uint8_t> removed;  // one flag per corpus image
  std::vector<RemovalRecord> audit;
};

// Stage 1 removes everything strictly within hard_radius of a reference.
// Stage 2 flags the band [hard_radius, candidate_radius) as candidates.
// Stage 3 removes a candidate when 1 - ssim(x, nearest ref) < ssim_dist_max,
// additionally requiring perceptual distance < perceptual_dist_max when a
// metric is plugged in.
DedupResult dedup_run(const std::vector<ImageTensor>& corpus,
                      const std::vector<ImageTensor>& refs, const DedupConfig& cfg);

}  // namespace odst::dedup
