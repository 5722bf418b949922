#pragma once

// Minimal CSV reader and deterministic SVG line chart.

#include <string>
#include <vector>

namespace hybridlab::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // every row has header.size() entries
};

/// Header line plus numeric rows. Throws InputError when the text has no
/// header, no data rows, fewer than two columns or a non-numeric cell.
CsvTable parse_csv(const std::string& text);

/// Linear axes, first column on x, one series per remaining column. A table
/// with a single row is drawn with point markers only. Output depends only
/// on the table and the title.
std::string render_svg(const CsvTable& table, const std::string& title = "");

}  // namespace hybridlab::cli
