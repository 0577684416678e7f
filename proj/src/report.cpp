#include "odst/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "odst/core.hpp"

namespace odst::report {

namespace {

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

constexpr const char* kSelectionHeader =
    "iteration,class,accepted_unique,above_threshold,repetitions,"
    "id_threshold,ood_threshold,final_threshold";

std::string threshold_field(double v) {
  // The sentinel for "nothing qualifies" serializes as inf.
  if (std::isinf(v)) return "inf";
  return format_double(v);
}

double parse_threshold(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  return parse_double(s);
}

}  // namespace

std::string selection_csv(const std::vector<SelectionCsvRow>& rows) {
  std::ostringstream out;
  out << kSelectionHeader << '\n';
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.cls << ',' << r.accepted_unique << ',' << r.above_threshold
        << ',' << r.repetitions << ',' << threshold_field(r.id_threshold) << ','
        << threshold_field(r.ood_threshold) << ',' << threshold_field(r.final_threshold) << '\n';
  }
  return out.str();
}

std::vector<SelectionCsvRow> parse_selection_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kSelectionHeader) {
    throw std::invalid_argument("selection csv: bad header");
  }
  std::vector<SelectionCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 8) throw std::invalid_argument("selection csv: ragged row");
    SelectionCsvRow r;
    r.iteration = static_cast<int>(parse_double(f[0]));
    r.cls = static_cast<std::uint32_t>(parse_double(f[1]));
    r.accepted_unique = static_cast<std::uint64_t>(parse_double(f[2]));
    r.above_threshold = static_cast<std::uint64_t>(parse_double(f[3]));
    r.repetitions = static_cast<std::uint64_t>(parse_double(f[4]));
    r.id_threshold = parse_threshold(f[5]);
    r.ood_threshold = parse_threshold(f[6]);
    r.final_threshold = parse_threshold(f[7]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 150;  // room for the legend
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 48;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  std::size_t points = 0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("svg: ragged series");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw std::invalid_argument("svg: non-finite coordinate");
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
      ++points;
    }
  }
  if (points == 0) throw std::invalid_argument("svg: no data points");
  if (!(x_min <= x_max)) {  // no points at all
    x_min = 0; x_max = 1; y_min = 0; y_max = 1;
  }
  if (x_max == x_min) { x_max += 1.0; x_min -= 1.0; }
  if (y_max == y_min) { y_max += (y_max == 0.0 ? 1.0 : std::fabs(y_max) * 0.1);
                        y_min -= (y_min == 0.0 ? 1.0 : std::fabs(y_min) * 0.1); }
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (y_max - y) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // Frame and ticks.
  svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / ticks;
    const double fy = y_min + (y_max - y_min) * t / ticks;
    const double gx = px(fx);
    const double gy = py(fy);
    svg << "<line x1=\"" << fmt_coord(gx) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << fmt_coord(gx) << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << fmt_coord(gx) << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(fx) << "</text>\n";
    svg << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << fmt_coord(gy) << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << fmt_coord(gy) << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt_coord(gy + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(fy)
        << "</text>\n";
  }
  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << kMarginTop + plot_h / 2 << ")\">" << y_label
      << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt_coord(px(series[s].x[i])) << ',' << fmt_coord(py(series[s].y[i]));
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      svg << "<circle cx=\"" << fmt_coord(px(series[s].x[i])) << "\" cy=\""
          << fmt_coord(py(series[s].y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kMarginTop + 14.0 * (s + 1);
    svg << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << fmt_coord(ly - 4)
        << "\" x2=\"" << kWidth - kMarginRight + 30 << "\" y2=\"" << fmt_coord(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << kWidth - kMarginRight + 35 << "\" y=\"" << fmt_coord(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace odst::report
