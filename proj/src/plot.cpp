#include "d2e/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "d2e/report.hpp"

namespace d2e {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 70, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  return s == "-0.00" || s == "-0.0" || s == "-0" ? s.substr(1) : s;
}

std::string tick_label(double v) {
  const double a = std::abs(v);
  if (a != 0.0 && (a < 1e-3 || a >= 1e5)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
  }
  return fixed(v, a < 1 ? 3 : 2);
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = 0, hi = 1;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 0.5 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

Range data_range(const std::vector<PlotSeries>& series, bool right, bool use_x, const PlotSpec* ref) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    if (!use_x && s.right_axis != right) continue;
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (ref && ref->has_reference) {
    lo = std::min(lo, ref->reference);
    hi = std::max(hi, ref->reference);
  }
  if (!std::isfinite(lo)) return {0, 1};
  return padded(lo, hi);
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  if (spec.series.empty()) throw std::invalid_argument("plot: no series");
  bool any_right = false;
  for (const auto& s : spec.series) {
    if (s.x.empty()) throw std::invalid_argument("plot: series '" + s.name + "' is empty");
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot: series '" + s.name + "' has x/y length mismatch");
    any_right |= s.right_axis;
  }
  const Range xr = data_range(spec.series, false, true, nullptr);
  const Range yl = data_range(spec.series, false, false, &spec);
  const Range yr = any_right ? data_range(spec.series, true, false, nullptr) : yl;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y, const Range& r) { return kTop + ph - (y - r.lo) / (r.hi - r.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
       "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " + fixed(kHeight, 0) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(spec.title) +
       "</text>\n";
  o += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double xv = xr.lo + f * (xr.hi - xr.lo);
    o += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
         tick_label(xv) + "</text>\n";
    const double lv = yl.lo + f * (yl.hi - yl.lo);
    o += "<line x1=\"" + fixed(kLeft) + "\" x2=\"" + fixed(kLeft + pw) + "\" y1=\"" + fixed(py(lv, yl)) + "\" y2=\"" +
         fixed(py(lv, yl)) + "\" stroke=\"#eee\"/>\n";
    o += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(lv, yl) + 4) + "\" text-anchor=\"end\">" +
         tick_label(lv) + "</text>\n";
    if (any_right) {
      const double rv = yr.lo + f * (yr.hi - yr.lo);
      o += "<text x=\"" + fixed(kLeft + pw + 6) + "\" y=\"" + fixed(py(rv, yr) + 4) + "\" text-anchor=\"start\">" +
           tick_label(rv) + "</text>\n";
    }
  }
  o += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"" + fixed(kHeight - 12) + "\" text-anchor=\"middle\">" +
       escape(spec.x_label) + "</text>\n";
  o += "<text transform=\"translate(16," + fixed(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(spec.left_label) + "</text>\n";
  if (any_right) {
    o += "<text transform=\"translate(" + fixed(kWidth - 14) + "," + fixed(kTop + ph / 2) +
         ") rotate(90)\" text-anchor=\"middle\">" + escape(spec.right_label) + "</text>\n";
  }
  if (spec.has_reference) {
    o += "<line x1=\"" + fixed(kLeft) + "\" x2=\"" + fixed(kLeft + pw) + "\" y1=\"" + fixed(py(spec.reference, yl)) +
         "\" y2=\"" + fixed(py(spec.reference, yl)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const Range& r = s.right_axis ? yr : yl;
    const std::string color = kPalette[si % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(s.x[i])) + "," + fixed(py(s.y[i], r));
    }
    if (s.x.size() > 1) {
      o += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      o += "<circle cx=\"" + fixed(px(s.x[i])) + "\" cy=\"" + fixed(py(s.y[i], r)) + "\" r=\"2.5\" fill=\"" + color +
           "\"/>\n";
    }
    const double ly = kTop + 14 + 16 * static_cast<double>(si);
    o += "<line x1=\"" + fixed(kLeft + 10) + "\" x2=\"" + fixed(kLeft + 30) + "\" y1=\"" + fixed(ly - 4) + "\" y2=\"" +
         fixed(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fixed(kLeft + 36) + "\" y=\"" + fixed(ly) + "\">" + escape(s.name) +
         (any_right ? (s.right_axis ? " (right)" : " (left)") : "") + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

void write_svg(const PlotSpec& spec, const std::filesystem::path& path) { write_text(path, render_svg(spec)); }

}  // namespace d2e
