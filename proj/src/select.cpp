#include "odst/select.hpp"

#include <algorithm>
#include <cmath>

namespace odst::select {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("threshold: alpha outside (0,1)");
  }
}

PoolAnnotation annotate_impl(const model::Mlp& m, const calib::Calibration& cal,
                             const std::vector<const std::vector<double>*>& xs) {
  PoolAnnotation ann;
  ann.predicted.resize(xs.size());
  ann.confidence.resize(xs.size());
  ann.probs.resize(xs.size());
  parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ProbVector p = calib::apply_temperature(model::forward(m, *xs[i]), cal);
      const std::size_t arg = p.argmax();
      ann.predicted[i] = static_cast<std::uint32_t>(arg);
      ann.confidence[i] = p.values[arg];
      ann.probs[i] = std::move(p);
    }
  });
  return ann;
}

}  // namespace

PoolAnnotation annotate(const model::Mlp& m, const calib::Calibration& cal,
                        const std::vector<std::vector<double>>& xs) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(xs.size());
  for (const auto& x : xs) ptrs.push_back(&x);
  return annotate_impl(m, cal, ptrs);
}

PoolAnnotation pseudo_label_pool(const model::Mlp& m, const calib::Calibration& cal,
                                 const UnlabeledDataset& pool) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(pool.samples.size());
  for (const auto& s : pool.samples) ptrs.push_back(&s.z);
  return annotate_impl(m, cal, ptrs);
}

PoolAnnotation annotate_labeled(const model::Mlp& m, const calib::Calibration& cal,
                                const LabeledDataset& ds) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(ds.samples.size());
  for (const auto& s : ds.samples) ptrs.push_back(&s.x);
  return annotate_impl(m, cal, ptrs);
}

double ood_threshold(const PoolAnnotation& ood_val, std::size_t cls, double alpha) {
  check_alpha(alpha);
  if (ood_val.size() == 0) throw std::invalid_argument("ood_threshold: empty validation set");
  std::vector<double> scores;
  scores.reserve(ood_val.size());
  for (const auto& p : ood_val.probs) {
    if (cls >= p.size()) throw std::out_of_range("ood_threshold: class out of range");
    scores.push_back(p.values[cls]);
  }
  const double n = static_cast<double>(scores.size());
  // Nearest-rank (ceiling) quantile. The small slack absorbs the binary
  // representation of round-number alphas (e.g. 0.998 * 5000 lands a hair
  // above the exact integer product).
  auto rank = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9 * n));
  if (rank < 1) rank = 1;
  if (rank > scores.size()) rank = scores.size();
  std::nth_element(scores.begin(), scores.begin() + (rank - 1), scores.end());
  return scores[rank - 1];
}

double id_threshold(const PoolAnnotation& in_val, const std::vector<std::uint32_t>& labels,
                    std::size_t cls, double alpha) {
  check_alpha(alpha);
  if (in_val.size() == 0) throw std::invalid_argument("id_threshold: empty validation set");
  if (in_val.size() != labels.size()) {
    throw std::invalid_argument("id_threshold: annotation/label count mismatch");
  }
  std::vector<std::pair<double, bool>> scored;  // (p(c|x), label == c)
  scored.reserve(in_val.size());
  for (std::size_t i = 0; i < in_val.size(); ++i) {
    if (cls >= in_val.probs[i].size()) throw std::out_of_range("id_threshold: class out of range");
    scored.emplace_back(in_val.probs[i].values[cls], labels[i] == cls);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  // Scan prefixes {score >= theta}. Equal scores enter together because a
  // threshold cannot separate them. The last qualifying theta is the
  // smallest, which maximizes recall at precision alpha.
  double best = kAboveOne;
  std::size_t total = 0, positive = 0, i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      total += 1;
      positive += scored[j].second ? 1 : 0;
      ++j;
    }
    if (static_cast<double>(positive) >= alpha * static_cast<double>(total)) {
      best = scored[i].first;
    }
    i = j;
  }
  return best;
}

SelectionThresholds compute_thresholds(const PoolAnnotation& in_val,
                                       const std::vector<std::uint32_t>& in_labels,
                                       const PoolAnnotation& ood_val, double alpha,
                                       bool use_ood) {
  if (in_val.size() == 0) throw std::invalid_argument("compute_thresholds: empty in_val");
  const std::size_t k = in_val.probs.front().size();
  SelectionThresholds t;
  t.uses_ood = use_ood;
  t.ood.resize(k, 0.0);
  t.id.resize(k, 0.0);
  t.final.resize(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    t.id[c] = id_threshold(in_val, in_labels, c, alpha);
    if (use_ood) t.ood[c] = ood_threshold(ood_val, c, alpha);
    t.final[c] = std::max(t.ood[c], t.id[c]);
  }
  return t;
}

std::uint64_t k_schedule(std::uint64_t n_labeled, std::uint32_t num_classes, int t) {
  if (num_classes < 2) throw std::invalid_argument("k_schedule: need at least 2 classes");
  if (t < 0) throw std::invalid_argument("k_schedule: t must be >= 0");
  return 5ull * n_labeled * (static_cast<std::uint64_t>(t) + 1ull) / num_classes;
}

SelectionResult select_topk(const PoolAnnotation& pool, const SelectionThresholds& thresholds,
                            std::uint64_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("select_topk: k must be positive");
  const std::size_t num_classes = thresholds.final.size();
  SelectionResult result;
  result.per_class.resize(num_classes);

  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool.predicted[i] == c && pool.confidence[i] >= thresholds.final[c]) {
        candidates.push_back(i);
      }
    }
    auto& stats = result.per_class[c];
    stats.above_threshold = candidates.size();
    if (candidates.empty()) {
      result.warnings.push_back("class " + std::to_string(c) +
                                ": nothing above threshold, contributing no samples");
      continue;
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      if (pool.confidence[a] != pool.confidence[b]) {
        return pool.confidence[a] > pool.confidence[b];
      }
      return a < b;
    });
    if (candidates.size() > k) candidates.resize(k);
    stats.accepted_unique = candidates.size();

    const std::size_t base = result.selected.size();
    for (std::size_t idx : candidates) {
      result.selected.push_back({idx, pool.probs[idx], 1});
    }
    if (candidates.size() < k) {
      // Uniform repetition over the accepted list, one independent stream
      // per class.
      Rng rng(derive_seed(seed, "repeat", c));
      const std::uint64_t extra = k - candidates.size();
      for (std::uint64_t r = 0; r < extra; ++r) {
        result.selected[base + rng.uniform_index(candidates.size())].repetitions += 1;
      }
      stats.repetitions = extra;
    }
  }
  return result;
}

VRule v_rule_for(model::Mode mode) {
  switch (mode) {
    case model::Mode::kAblateHardU: return VRule::kUniform;
    case model::Mode::kAblateNoSmooth: return VRule::kRaw;
    default: return VRule::kDamped;
  }
}

PseudoLabels assign_pseudo_labels(const UnlabeledDataset& pool, const PoolAnnotation& ann,
                                  const SelectionResult& sel, VRule rule) {
  if (ann.size() != pool.samples.size()) {
    throw std::invalid_argument("assign_pseudo_labels: annotation/pool size mismatch");
  }
  PseudoLabels out;
  std::vector<bool> in_selection(pool.samples.size(), false);
  for (const auto& s : sel.selected) {
    if (s.pool_index >= pool.samples.size()) {
      throw std::out_of_range("assign_pseudo_labels: selection index out of range");
    }
    in_selection[s.pool_index] = true;
    require_prob(s.q, "assign_pseudo_labels: q");
    for (std::uint32_t r = 0; r < s.repetitions; ++r) {
      out.selected.x.push_back(pool.samples[s.pool_index].z);
      out.selected.target.push_back(s.q);
    }
  }
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    if (in_selection[i]) continue;
    ProbVector v;
    switch (rule) {
      case VRule::kDamped: v = mix_with_uniform(ann.probs[i], 0.5); break;
      case VRule::kUniform: v = uniform_prob(ann.probs[i].size()); break;
      case VRule::kRaw: v = ann.probs[i]; break;
    }
    out.max_rest_confidence = std::max(out.max_rest_confidence, v.max_entry());
    out.rest.x.push_back(pool.samples[i].z);
    out.rest.target.push_back(std::move(v));
    out.rest_index.push_back(i);
  }
  return out;
}

}  // namespace odst::select
