#include "odst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace odst::metrics {

double test_error(const model::Mlp& m, const calib::Calibration& cal,
                  const LabeledDataset& test) {
  (void)cal;  // argmax-invariant; kept for interface symmetry
  return model::error_rate(m, test);
}

double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
  if (in_scores.empty() || out_scores.empty()) {
    throw std::invalid_argument("auroc: both score sets must be non-empty");
  }
  struct Entry {
    double score;
    bool is_in;
  };
  std::vector<Entry> all;
  all.reserve(in_scores.size() + out_scores.size());
  for (double s : in_scores) {
    if (std::isnan(s)) throw std::invalid_argument("auroc: NaN score");
    all.push_back({s, true});
  }
  for (double s : out_scores) {
    if (std::isnan(s)) throw std::invalid_argument("auroc: NaN score");
    all.push_back({s, false});
  }
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Sum of average ranks of the in-set; tie groups share the mean rank, so
  // every tied in/out pair contributes exactly 1/2.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].is_in) rank_sum += avg_rank;
    }
    i = j;
  }
  const double n = static_cast<double>(in_scores.size());
  const double m = static_cast<double>(out_scores.size());
  return (rank_sum - n * (n + 1.0) / 2.0) / (n * m);
}

namespace {

std::set<std::size_t> distinct_selected(const select::SelectionResult& sel, std::size_t pool_size) {
  std::set<std::size_t> idx;
  for (const auto& s : sel.selected) {
    if (s.pool_index >= pool_size) {
      throw std::out_of_range("selection metrics: pool index out of range");
    }
    idx.insert(s.pool_index);
  }
  return idx;
}

}  // namespace

std::optional<double> selection_precision(const select::SelectionResult& sel,
                                          const UnlabeledDataset& pool) {
  const auto idx = distinct_selected(sel, pool.samples.size());
  if (idx.empty()) return std::nullopt;
  ProvenanceView prov(pool);
  std::size_t in_dist = 0;
  for (std::size_t i : idx) in_dist += prov.in_distribution(i) ? 1 : 0;
  return static_cast<double>(in_dist) / static_cast<double>(idx.size());
}

std::optional<double> selection_recall(const select::SelectionResult& sel,
                                       const UnlabeledDataset& pool) {
  ProvenanceView prov(pool);
  std::size_t pool_in = 0;
  for (std::size_t i = 0; i < prov.size(); ++i) pool_in += prov.in_distribution(i) ? 1 : 0;
  if (pool_in == 0) return std::nullopt;
  const auto idx = distinct_selected(sel, pool.samples.size());
  std::size_t hit = 0;
  for (std::size_t i : idx) hit += prov.in_distribution(i) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pool_in);
}

std::optional<double> label_accuracy(const select::SelectionResult& sel, const UnlabeledDataset& pool) {
  ProvenanceView prov(pool);
  std::set<std::size_t> seen;
  std::size_t considered = 0, correct = 0;
  for (const auto& s : sel.selected) {
    if (s.pool_index >= pool.samples.size()) {
      throw std::out_of_range("label_accuracy: pool index out of range");
    }
    if (!seen.insert(s.pool_index).second) continue;
    if (!prov.in_distribution(s.pool_index)) continue;
    considered += 1;
    // In-distribution components are indexed by their class.
    if (s.q.argmax() == prov.component(s.pool_index)) correct += 1;
  }
  if (considered == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(considered);
}

// ---------------------------------------------------------------------------
// Report CSV
// ---------------------------------------------------------------------------

namespace {

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string report_csv(const std::vector<IterationReport>& rows, std::uint32_t num_classes) {
  std::ostringstream out;
  out << "iteration,test_error,auroc,ece_before,ece_after,temperature";
  for (std::uint32_t c = 0; c < num_classes; ++c) out << ",accepted_" << c;
  out << ",selection_precision,selection_recall\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << format_double(r.test_error) << ',' << format_double(r.auroc)
        << ',' << format_double(r.ece_before) << ',' << format_double(r.ece_after) << ','
        << format_double(r.temperature);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      out << ',' << (c < r.accepted.size() ? r.accepted[c] : 0);
    }
    out << ',' << optional_field(r.selection_precision) << ','
        << optional_field(r.selection_recall) << '\n';
  }
  return out.str();
}

std::vector<IterationReport> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("report csv: empty input");
  const auto header = split_line(line);
  if (header.size() < 8 || header[0] != "iteration") {
    throw std::invalid_argument("report csv: bad header");
  }
  const std::size_t num_classes = header.size() - 8;
  std::vector<IterationReport> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != header.size()) throw std::invalid_argument("report csv: ragged row");
    IterationReport r;
    r.iteration = static_cast<int>(parse_double(f[0]));
    r.test_error = parse_double(f[1]);
    r.auroc = parse_double(f[2]);
    r.ece_before = parse_double(f[3]);
    r.ece_after = parse_double(f[4]);
    r.temperature = parse_double(f[5]);
    for (std::size_t c = 0; c < num_classes; ++c) {
      r.accepted.push_back(static_cast<std::uint64_t>(parse_double(f[6 + c])));
    }
    const auto& prec = f[6 + num_classes];
    const auto& rec = f[7 + num_classes];
    if (!prec.empty()) r.selection_precision = parse_double(prec);
    if (!rec.empty()) r.selection_recall = parse_double(rec);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace odst::metrics
