#include "odst/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace odst::dedup {

// ---------------------------------------------------------------------------
// Container I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kImgMagic[8] = {'O', 'D', 'S', 'T', 'I', 'M', 'G', 'S'};

void check_shape(const ImageTensor& img) {
  if (img.h == 0 || img.w == 0 || img.c == 0) {
    throw std::invalid_argument("image: empty shape");
  }
  if (img.pixels.size() != img.size()) {
    throw std::invalid_argument("image: pixel buffer does not match shape");
  }
}

}  // namespace

void write_images(const std::string& path, const std::vector<ImageTensor>& images) {
  if (images.empty()) throw std::invalid_argument("write_images: empty set");
  const auto& first = images.front();
  check_shape(first);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kImgMagic, 8);
  const std::uint64_t count = images.size();
  f.write(reinterpret_cast<const char*>(&count), 8);
  f.write(reinterpret_cast<const char*>(&first.h), 4);
  f.write(reinterpret_cast<const char*>(&first.w), 4);
  f.write(reinterpret_cast<const char*>(&first.c), 4);
  std::vector<std::uint8_t> bytes(first.size());
  for (const auto& img : images) {
    check_shape(img);
    if (img.h != first.h || img.w != first.w || img.c != first.c) {
      throw std::invalid_argument("write_images: mixed shapes");
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      const float v = img.pixels[i];
      if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("write_images: pixel outside [0,1]");
      bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<ImageTensor> read_images(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kImgMagic, 8) != 0) {
    throw std::runtime_error(path + ": bad image container magic");
  }
  std::uint64_t count = 0;
  std::uint32_t h = 0, w = 0, c = 0;
  f.read(reinterpret_cast<char*>(&count), 8);
  f.read(reinterpret_cast<char*>(&h), 4);
  f.read(reinterpret_cast<char*>(&w), 4);
  f.read(reinterpret_cast<char*>(&c), 4);
  if (!f) throw std::runtime_error(path + ": image container truncated");
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  if (n == 0) throw std::runtime_error(path + ": empty image shape");
  std::vector<ImageTensor> images(count);
  std::vector<std::uint8_t> bytes(n);
  for (auto& img : images) {
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error(path + ": image container truncated");
    img.h = h;
    img.w = w;
    img.c = c;
    img.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
    }
  }
  return images;
}

// ---------------------------------------------------------------------------
// Exact nearest neighbor within a radius
// ---------------------------------------------------------------------------

namespace {

// Both search paths share this exact arithmetic: squared norms accumulated
// once, per pair ||a||^2 + ||b||^2 - 2 a.b with the dot product accumulated
// in index order. Products of floats are exact in double.
double sq_norm(const ImageTensor& img) {
  double s = 0.0;
  for (float v : img.pixels) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

double pair_sq_dist(const ImageTensor& a, const ImageTensor& b, double na, double nb) {
  const float* pa = a.pixels.data();
  const float* pb = b.pixels.data();
  const std::size_t n = a.pixels.size();
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(pa[i]) * static_cast<double>(pb[i]);
  }
  return na + nb - 2.0 * dot;
}

void check_search_inputs(const std::vector<ImageTensor>& corpus,
                         const std::vector<ImageTensor>& refs, double radius) {
  if (corpus.empty() || refs.empty()) {
    throw std::invalid_argument("nn_within_radius: empty corpus or reference set");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("nn_within_radius: radius must be positive");
  const auto& first = corpus.front();
  for (const auto& img : corpus) {
    check_shape(img);
    if (img.size() != first.size()) throw std::invalid_argument("nn_within_radius: mixed sizes");
  }
  for (const auto& img : refs) {
    check_shape(img);
    if (img.size() != first.size()) throw std::invalid_argument("nn_within_radius: mixed sizes");
  }
}

}  // namespace

std::vector<NearestHit> nn_within_radius(const std::vector<ImageTensor>& corpus,
                                         const std::vector<ImageTensor>& refs, double radius,
                                         bool blocked) {
  check_search_inputs(corpus, refs, radius);
  std::vector<double> corpus_norm(corpus.size()), ref_norm(refs.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus_norm[i] = sq_norm(corpus[i]);
  for (std::size_t j = 0; j < refs.size(); ++j) ref_norm[j] = sq_norm(refs[j]);

  std::vector<double> best(corpus.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_ref(corpus.size(), 0);

  if (blocked) {
    // Tiles keep a working set of a few hundred KB; per-corpus scans still
    // visit reference tiles in ascending index order, so the sequence of
    // strict-improvement updates matches the plain loop exactly.
    const std::size_t tile = 64;
    const std::size_t corpus_tiles = (corpus.size() + tile - 1) / tile;
    parallel_for(corpus_tiles, [&](std::size_t t_begin, std::size_t t_end) {
      for (std::size_t t = t_begin; t < t_end; ++t) {
        const std::size_t i0 = t * tile;
        const std::size_t i1 = std::min(i0 + tile, corpus.size());
        for (std::size_t j0 = 0; j0 < refs.size(); j0 += tile) {
          const std::size_t j1 = std::min(j0 + tile, refs.size());
          for (std::size_t i = i0; i < i1; ++i) {
            for (std::size_t j = j0; j < j1; ++j) {
              const double d = pair_sq_dist(corpus[i], refs[j], corpus_norm[i], ref_norm[j]);
              if (d < best[i]) {
                best[i] = d;
                best_ref[i] = j;
              }
            }
          }
        }
      }
    });
  } else {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (std::size_t j = 0; j < refs.size(); ++j) {
        const double d = pair_sq_dist(corpus[i], refs[j], corpus_norm[i], ref_norm[j]);
        if (d < best[i]) {
          best[i] = d;
          best_ref[i] = j;
        }
      }
    }
  }

  const double radius_sq = radius * radius;
  std::vector<NearestHit> hits;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (best[i] < radius_sq) {
      hits.push_back({i, best_ref[i], std::sqrt(std::max(best[i], 0.0))});
    }
  }
  return hits;
}

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> kernel = [] {
    std::vector<double> k(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double t = i - (kWindow - 1) / 2.0;
      k[i] = std::exp(-t * t / (2.0 * kSigma * kSigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

// Valid-region separable Gaussian filter of an h x w plane.
// in: row-major h x w doubles; out: (h-10) x (w-10).
void gauss_valid(const std::vector<double>& in, std::uint32_t h, std::uint32_t w,
                 std::vector<double>& tmp, std::vector<double>& out) {
  const auto& k = gaussian_kernel();
  const std::uint32_t wo = w - (kWindow - 1);
  const std::uint32_t ho = h - (kWindow - 1);
  tmp.assign(static_cast<std::size_t>(h) * wo, 0.0);
  for (std::uint32_t y = 0; y < h; ++y) {
    const double* row = in.data() + static_cast<std::size_t>(y) * w;
    double* trow = tmp.data() + static_cast<std::size_t>(y) * wo;
    for (std::uint32_t x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kWindow; ++t) acc += k[t] * row[x + t];
      trow[x] = acc;
    }
  }
  out.assign(static_cast<std::size_t>(ho) * wo, 0.0);
  for (std::uint32_t y = 0; y < ho; ++y) {
    double* orow = out.data() + static_cast<std::size_t>(y) * wo;
    for (int t = 0; t < kWindow; ++t) {
      const double* trow = tmp.data() + static_cast<std::size_t>(y + t) * wo;
      const double kt = k[t];
      for (std::uint32_t x = 0; x < wo; ++x) orow[x] += kt * trow[x];
    }
  }
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b) {
  check_shape(a);
  check_shape(b);
  if (a.h != b.h || a.w != b.w || a.c != b.c) {
    throw std::invalid_argument("ssim: shape mismatch");
  }
  if (a.h < kWindow || a.w < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the filter window");
  }
  const std::size_t plane = a.plane_size();
  std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
  std::vector<double> mu1, mu2, m11, m22, m12, tmp;
  double channel_mean_sum = 0.0;
  for (std::uint32_t ch = 0; ch < a.c; ++ch) {
    const float* xa = a.pixels.data() + ch * plane;
    const float* xb = b.pixels.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      pa[i] = xa[i];
      pb[i] = xb[i];
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    gauss_valid(pa, a.h, a.w, tmp, mu1);
    gauss_valid(pb, a.h, a.w, tmp, mu2);
    gauss_valid(paa, a.h, a.w, tmp, m11);
    gauss_valid(pbb, a.h, a.w, tmp, m22);
    gauss_valid(pab, a.h, a.w, tmp, m12);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      const double mu12 = mu1[i] * mu2[i];
      const double s1 = m11[i] - mu1[i] * mu1[i];
      const double s2 = m22[i] - mu2[i] * mu2[i];
      const double s12 = m12[i] - mu12;
      const double num = (2.0 * mu12 + kC1) * (2.0 * s12 + kC2);
      const double den = (mu1[i] * mu1[i] + mu2[i] * mu2[i] + kC1) * (s1 + s2 + kC2);
      acc += num / den;
    }
    channel_mean_sum += acc / static_cast<double>(mu1.size());
  }
  return channel_mean_sum / static_cast<double>(a.c);
}

// ---------------------------------------------------------------------------
// Staged pipeline
// ---------------------------------------------------------------------------

DedupResult dedup_run(const std::vector<ImageTensor>& corpus,
                      const std::vector<ImageTensor>& refs, const DedupConfig& cfg) {
  if (!(cfg.hard_radius > 0.0) || !(cfg.candidate_radius > cfg.hard_radius)) {
    throw std::invalid_argument("dedup_run: need 0 < hard_radius < candidate_radius");
  }
  if (!(cfg.ssim_dist_max > 0.0)) {
    throw std::invalid_argument("dedup_run: ssim_dist_max must be positive");
  }

  // One exact pass with the wider radius serves stages 1 and 2.
  const auto hits = nn_within_radius(corpus, refs, cfg.candidate_radius);

  DedupResult result;
  result.removed.assign(corpus.size(), 0);

  std::vector<const NearestHit*> candidates;
  for (const auto& hit : hits) {
    if (hit.distance < cfg.hard_radius) {
      result.removed[hit.corpus_index] = 1;
      result.audit.push_back({hit.corpus_index, 1, hit.ref_index, hit.distance,
                              std::nullopt, std::nullopt});
    } else {
      candidates.push_back(&hit);
    }
  }

  std::vector<double> ssim_dist(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ssim_dist[i] = 1.0 - ssim(corpus[candidates[i]->corpus_index], refs[candidates[i]->ref_index]);
    }
  });

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& hit = *candidates[i];
    std::optional<double> perceptual;
    bool remove = ssim_dist[i] < cfg.ssim_dist_max;
    if (cfg.perceptual != nullptr) {
      perceptual = cfg.perceptual->distance(corpus[hit.corpus_index], refs[hit.ref_index]);
      remove = remove && *perceptual < cfg.perceptual_dist_max;
    }
    if (remove) {
      result.removed[hit.corpus_index] = 1;
      result.audit.push_back({hit.corpus_index, 3, hit.ref_index, hit.distance,
                              ssim_dist[i], perceptual});
    }
  }
  return result;
}

}  // namespace odst::dedup
