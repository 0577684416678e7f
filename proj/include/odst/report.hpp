#pragma once

// Run artifacts: the per-class selection table and small self-contained SVG
// line charts. All numeric fields use shortest round-trip formatting so
// identical runs emit identical bytes.

#include <cstdint>
#include <string>
#include <vector>

namespace odst::report {

struct SelectionCsvRow {
  int iteration = 0;
  std::uint32_t cls = 0;
  std::uint64_t accepted_unique = 0;
  std::uint64_t above_threshold = 0;
  std::uint64_t repetitions = 0;
  double id_threshold = 0.0;
  double ood_threshold = 0.0;
  double final_threshold = 0.0;
};

std::string selection_csv(const std::vector<SelectionCsvRow>& rows);
std::vector<SelectionCsvRow> parse_selection_csv(const std::string& csv);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Simple line chart; axes are scaled to the data with a small margin.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace odst::report
