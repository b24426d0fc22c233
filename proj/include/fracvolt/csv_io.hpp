#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracvolt/grid.hpp"

namespace fracvolt {

/**
 * Reads a numeric CSV whose first line is a header naming exactly
 * `columns`. Blank lines and lines starting with '#' are skipped.
 */
inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& file, const std::vector<std::string>& columns) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      if (cells != columns) {
        std::string want;
        for (const auto& c : columns) want += (want.empty() ? "" : ",") + c;
        throw std::runtime_error(detail::concat(file.string(), ":", lineno, ": expected header '", want, "'"));
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != columns.size()) {
      throw std::runtime_error(detail::concat(file.string(), ":", lineno, ": expected ", columns.size(), " fields"));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw std::runtime_error(detail::concat(file.string(), ":", lineno, ": '", c, "' is not a number"));
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw std::runtime_error(file.string() + ": empty file");
  return rows;
}

/// Stream set up for round-trippable doubles.
inline std::ofstream open_csv(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace fracvolt
