#include "mecopt/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mecopt {
namespace {

constexpr double kWidth = 820.0;
constexpr double kHeight = 640.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 620.0;
constexpr double kTopA = 50.0;
constexpr double kBottomA = 290.0;
constexpr double kTopB = 370.0;
constexpr double kBottomB = 600.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v, int decimals = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double scale(double v, double lo, double hi, double out_lo, double out_hi) {
  if (hi <= lo) return (out_lo + out_hi) / 2.0;
  return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
}

void axes(std::ostringstream& os, double top, double bottom, const std::string& title,
          const std::string& ylabel, double y_lo, double y_hi, int y_decimals,
          std::size_t max_iter) {
  os << "<text x=\"" << num(kLeft) << "\" y=\"" << num(top - 14) << "\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(kRight)
     << "\" y2=\"" << num(bottom) << "\" stroke=\"#000\"/>\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(top) << "\" x2=\"" << num(kLeft)
     << "\" y2=\"" << num(bottom) << "\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + (y_hi - y_lo) * k / 4.0;
    const double y = scale(v, y_lo, y_hi, bottom, top);
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
       << "\" font-size=\"10\" text-anchor=\"end\">" << num(v, y_decimals) << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, max_iter / 10);
  for (std::size_t it = 1; it <= max_iter; it += step) {
    const double x = scale(static_cast<double>(it), 1.0, static_cast<double>(max_iter), kLeft, kRight);
    os << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 14)
       << "\" font-size=\"10\" text-anchor=\"middle\">" << it << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"" << num(bottom + 30)
     << "\" font-size=\"11\" text-anchor=\"middle\">iteration</text>\n";
  os << "<text x=\"18\" y=\"" << num((top + bottom) / 2) << "\" font-size=\"11\" "
     << "text-anchor=\"middle\" transform=\"rotate(-90 18 " << num((top + bottom) / 2) << ")\">"
     << escape_xml(ylabel) << "</text>\n";
}

}  // namespace

PlotOutput render_svg(const std::vector<PlotSeries>& series) {
  PlotOutput out;
  std::size_t max_iter = 0;
  double best_lo = std::numeric_limits<double>::infinity();
  double best_hi = -std::numeric_limits<double>::infinity();
  std::uint64_t index_space = 1;
  bool any_candidate = false;
  for (const auto& s : series) {
    max_iter = std::max(max_iter, s.trajectory.records.size());
    if (const auto space = index_space_size(s.trajectory.num_servers, s.trajectory.num_users)) {
      index_space = std::max(index_space, *space);
    }
    if (s.trajectory.total_evaluations == 0) {
      out.warnings.push_back("series \"" + s.label + "\" has no evaluated candidates");
    }
    for (const auto& r : s.trajectory.records) {
      any_candidate |= !r.candidates.empty();
      if (r.best_so_far) {
        best_lo = std::min(best_lo, r.best_so_far->objective_s);
        best_hi = std::max(best_hi, r.best_so_far->objective_s);
      }
    }
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth, 0) << "\" height=\""
     << num(kHeight, 0) << "\" viewBox=\"0 0 " << num(kWidth, 0) << ' ' << num(kHeight, 0)
     << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";

  if (series.empty() || !any_candidate) {
    if (series.empty()) out.warnings.push_back("no trajectories to plot");
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight / 2)
       << "\" font-size=\"16\" text-anchor=\"middle\" class=\"placeholder\">"
       << "no data to plot</text>\n</svg>\n";
    out.svg = os.str();
    return out;
  }

  // Pad the latency axis so a flat line is not drawn on the frame.
  const double pad = best_hi > best_lo ? 0.05 * (best_hi - best_lo) : 0.05 * std::max(best_hi, 1e-3);
  const double y_lo = std::max(0.0, best_lo - pad);
  const double y_hi = best_hi + pad;

  axes(os, kTopA, kBottomA, "(a) best-so-far maximum latency", "max latency [s]", y_lo, y_hi, 3,
       max_iter);
  axes(os, kTopB, kBottomB, "(b) candidate allocation index per iteration", "allocation index",
       0.0, static_cast<double>(index_space - 1), 0, max_iter);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    std::ostringstream points;
    bool first = true;
    for (const auto& r : s.trajectory.records) {
      if (!r.best_so_far) continue;
      const double x = scale(static_cast<double>(r.iteration), 1.0, static_cast<double>(max_iter),
                             kLeft, kRight);
      const double y = scale(r.best_so_far->objective_s, y_lo, y_hi, kBottomA, kTopA);
      points << (first ? "" : " ") << num(x) << ',' << num(y);
      first = false;
    }
    os << "<polyline class=\"series\" data-label=\"" << escape_xml(s.label)
       << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
       << points.str() << "\"/>\n";

    for (const auto& r : s.trajectory.records) {
      const double x = scale(static_cast<double>(r.iteration), 1.0, static_cast<double>(max_iter),
                             kLeft, kRight);
      for (const auto& c : r.candidates) {
        const double y = scale(static_cast<double>(c.index.value), 0.0,
                               static_cast<double>(index_space - 1), kBottomB, kTopB);
        os << "<circle class=\"index\" data-series=\"" << k << "\" data-iteration=\""
           << r.iteration << "\" data-index=\"" << c.index.value << "\" cx=\"" << num(x)
           << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\"" << color
           << "\" fill-opacity=\"0.6\"/>\n";
      }
    }

    const double ly = kTopA + 16.0 * static_cast<double>(k);
    os << "<rect x=\"" << num(kRight + 20) << "\" y=\"" << num(ly - 9) << "\" width=\"12\" "
       << "height=\"12\" fill=\"" << color << "\"/>\n";
    os << "<text class=\"legend\" x=\"" << num(kRight + 38) << "\" y=\"" << num(ly + 1)
       << "\" font-size=\"12\">" << escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  out.svg = os.str();
  return out;
}

}  // namespace mecopt
