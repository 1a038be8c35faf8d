#pragma once

// Static semi-log convergence plots (error vs p, one polyline per eps)
// rendered from sweep CSV files.

#include <string>
#include <vector>

namespace hpsbl {

struct CsvTable {
  std::vector<std::string> comments; // '#' lines without the marker
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column, -1 if absent.
  int column(const std::string &name) const;
};

/// Splits CSV text ('#' comment lines, one header line, comma-separated rows).
CsvTable read_csv(const std::string &text);

struct PlotLayout {
  int width = 640;
  int height = 420;
  double left = 80, right = 150, top = 40, bottom = 60;
};

/// SVG with log10(column) against p, one series per distinct epsilon in
/// order of first appearance. Non-positive and NaN values are skipped; with
/// nothing to draw the axes carry a "no data" label. The CSV comment lines are
/// copied into a leading XML comment. Throws InputError for a missing column
/// (p, epsilon or `column`).
std::string semilog_svg(const CsvTable &table, const std::string &column, const PlotLayout &layout = {});

/// read_csv + semilog_svg.
std::string emit_plot(const std::string &csv_text, const std::string &column);

} // namespace hpsbl
