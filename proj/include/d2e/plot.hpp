#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace d2e {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Plot against the right-hand axis (independent scale).
  bool right_axis = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string left_label;
  std::string right_label;
  std::vector<PlotSeries> series;
  /// Optional horizontal reference line on the left axis.
  bool has_reference = false;
  double reference = 0.0;
};

/// Static line plot with point markers. Output depends only on the input, so
/// equal data gives byte-identical files. Throws std::invalid_argument for an
/// empty plot, an empty series or mismatched x/y lengths.
std::string render_svg(const PlotSpec& spec);

/// Renders and writes; I/O failures raise IoError.
void write_svg(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace d2e
