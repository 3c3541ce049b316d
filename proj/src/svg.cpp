#include "drift/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "drift/types.hpp"

namespace drift {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 180.0;  // room for the legend
constexpr double kTop = 48.0;
constexpr double kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
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

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.2;
};

// Tick step of the form {1,2,5} x 10^k covering [lo, hi] in about 5 steps.
Range nice_range(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi)))
    throw InputError("chart range is not finite");
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0 * mag;
  if (norm <= 1.0) step = 1.0 * mag;
  else if (norm <= 2.0) step = 2.0 * mag;
  else if (norm <= 5.0) step = 5.0 * mag;
  Range r;
  r.step = step;
  r.lo = std::floor(lo / step) * step;
  r.hi = std::ceil(hi / step) * step;
  return r;
}

void open_svg(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
      << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth)
      << " " << num(kHeight) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" font-size=\"16\" "
         "text-anchor=\"middle\">"
      << esc(title) << "</text>\n";
}

void draw_y_axis(std::ofstream& out, const Range& ry, double plot_w,
                 const std::string& y_label) {
  const double plot_h = kHeight - kTop - kBottom;
  for (double v = ry.lo; v <= ry.hi + ry.step / 2; v += ry.step) {
    const double y = kTop + plot_h * (1.0 - (v - ry.lo) / (ry.hi - ry.lo));
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(y)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  out << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kTop + plot_h / 2) << ")\">" << esc(y_label) << "</text>\n";
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<Series>& series) {
  if (series.empty()) throw InputError("line chart needs at least one series");
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  bool first = true;
  for (const Series& s : series) {
    if (s.xs.empty() || s.xs.size() != s.ys.size())
      throw InputError("series '" + s.label + "' has mismatched point lists");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.xs[i];
        y_lo = y_hi = s.ys[i];
        first = false;
      }
      x_lo = std::min(x_lo, s.xs[i]);
      x_hi = std::max(x_hi, s.xs[i]);
      y_lo = std::min(y_lo, s.ys[i]);
      y_hi = std::max(y_hi, s.ys[i]);
    }
  }
  const Range rx = nice_range(x_lo, x_hi);
  const Range ry = nice_range(y_lo, y_hi);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double x) {
    return kLeft + plot_w * (x - rx.lo) / (rx.hi - rx.lo);
  };
  const auto py = [&](double y) {
    return kTop + plot_h * (1.0 - (y - ry.lo) / (ry.hi - ry.lo));
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write chart: " + path.string());
  open_svg(out, title);
  draw_y_axis(out, ry, plot_w, y_label);
  for (double v = rx.lo; v <= rx.hi + rx.step / 2; v += rx.step) {
    const double x = px(v);
    out << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(v)
        << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\""
      << num(kHeight - 14) << "\" font-size=\"12\" text-anchor=\"middle\">"
      << esc(x_label) << "</text>\n";
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\"/>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (i) out << ' ';
      out << num(px(s.xs[i])) << ',' << num(py(s.ys[i]));
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.xs.size(); ++i)
      out << "<circle cx=\"" << num(px(s.xs[i])) << "\" cy=\""
          << num(py(s.ys[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(si);
    out << "<line x1=\"" << num(kLeft + plot_w + 12) << "\" y1=\"" << num(ly)
        << "\" x2=\"" << num(kLeft + plot_w + 34) << "\" y2=\"" << num(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(kLeft + plot_w + 40) << "\" y=\"" << num(ly + 4)
        << "\" font-size=\"11\">" << esc(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bar_chart_svg(const std::filesystem::path& path,
                         const std::string& title, const std::string& y_label,
                         const std::vector<Bar>& bars) {
  if (bars.empty()) throw InputError("bar chart needs at least one bar");
  double y_lo = 0.0, y_hi = 0.0;
  for (const Bar& b : bars) {
    y_lo = std::min(y_lo, b.value);
    y_hi = std::max(y_hi, b.value);
  }
  const Range ry = nice_range(y_lo, y_hi);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto py = [&](double y) {
    return kTop + plot_h * (1.0 - (y - ry.lo) / (ry.hi - ry.lo));
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write chart: " + path.string());
  open_svg(out, title);
  draw_y_axis(out, ry, plot_w, y_label);
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\"/>\n";

  const double slot = plot_w / static_cast<double>(bars.size());
  const double bar_w = slot * 0.6;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = kLeft + slot * (static_cast<double>(i) + 0.2);
    const double y0 = py(std::max(0.0, ry.lo));
    const double y1 = py(bars[i].value);
    const double top = std::min(y0, y1);
    const double h = std::abs(y0 - y1);
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\""
        << num(bar_w) << "\" height=\"" << num(h) << "\" fill=\""
        << kPalette[i % kPaletteSize] << "\"/>\n";
    out << "<text x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(top - 4)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(bars[i].value)
        << "</text>\n";
    out << "<text x=\"" << num(x + bar_w / 2) << "\" y=\""
        << num(kTop + plot_h + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << esc(bars[i].label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace drift
