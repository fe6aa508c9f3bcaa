#pragma once

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "setsim/descriptors.hpp"
#include "setsim/error.hpp"
#include "setsim/permtest.hpp"

namespace setsim {

/// Decimal form that reads back to the same double; 15 digits when they suffice.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  char shorter[32];
  std::snprintf(shorter, sizeof shorter, "%.15g", v);
  if (std::strtod(shorter, nullptr) == v) return shorter;
  return buf;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// `component_id,ratio,t_1..t_l,n_boundary`, one row per descriptor.
inline std::string descriptors_csv(std::span<const ShapeDescriptor> ds, int bins) {
  std::ostringstream out;
  out << "component_id,ratio";
  for (int k = 1; k <= bins; ++k) out << ",t_" << k;
  out << ",n_boundary\n";
  for (const auto& d : ds) {
    if (d.curve.bins != bins) throw ShapeError("descriptor bin count differs from the CSV header");
    out << d.component_id << ',' << format_real(d.ratio);
    for (double v : d.curve.values) out << ',' << format_real(v);
    out << ',' << d.curve.support_size << '\n';
  }
  return out.str();
}

inline std::string outcome_header() { return "n_ratio_obs,n_curve_obs,p_ratio,p_curve,p_joint,s"; }

inline std::string outcome_row(const TestOutcome& o) {
  return format_real(o.n_ratio_obs) + ',' + format_real(o.n_curve_obs) + ',' + format_real(o.p_ratio) + ',' +
         format_real(o.p_curve) + ',' + format_real(o.p_joint) + ',' + std::to_string(o.s_used);
}

/// p-value list of an experiment: one row per comparison.
inline std::string pvalues_csv(std::span<const TestOutcome> outcomes) {
  std::ostringstream out;
  out << "p_joint,p_ratio,p_curve\n";
  for (const auto& o : outcomes)
    out << format_real(o.p_joint) << ',' << format_real(o.p_ratio) << ',' << format_real(o.p_curve) << '\n';
  return out.str();
}

namespace detail {

template <class Cell>
std::string triangular_table(const PairwiseMatrix& m, std::span<const std::string> labels, Cell&& cell) {
  if (labels.size() != m.size) throw ShapeError("label count does not match matrix size");
  std::ostringstream out;
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.size; ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < m.size; ++j) {
      out << ',';
      if (j >= i) out << cell(m.at(i, j));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace detail

/// Upper-triangular table of mean p-values, rows and columns headed by labels.
inline std::string matrix_mean_p_csv(const PairwiseMatrix& m, std::span<const std::string> labels) {
  return detail::triangular_table(m, labels, [](const PairwiseCell& c) { return format_fixed(c.mean_p, 4); });
}

inline std::string matrix_count_csv(const PairwiseMatrix& m, std::span<const std::string> labels) {
  return detail::triangular_table(m, labels, [](const PairwiseCell& c) { return std::to_string(c.count_below_05); });
}

/// Numbers from a CSV column. With a header row the column is found by name;
/// a file whose first row is numeric is read as a single unnamed column.
inline std::vector<double> read_numeric_column(std::string_view text, std::string_view column) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::istringstream s(line);
    for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
    return cells;
  };
  auto parse = [](const std::string& cell, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size())
      throw InvalidArgument("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
    return v;
  };
  if (lines.empty()) throw InsufficientData("empty CSV");

  std::size_t col = 0;
  std::size_t first = 0;
  const auto head = split(lines[0]);
  bool numeric_head = true;
  try {
    parse(head.at(0), 1);
  } catch (const std::exception&) {
    numeric_head = false;
  }
  if (!numeric_head) {
    first = 1;
    if (head.size() == 1) {
      col = 0;
    } else {
      col = head.size();
      for (std::size_t c = 0; c < head.size(); ++c)
        if (head[c] == column) col = c;
      if (col == head.size()) throw InvalidArgument("CSV has no column named '" + std::string(column) + "'");
    }
  }
  std::vector<double> out;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (col >= cells.size()) throw InvalidArgument("line " + std::to_string(i + 1) + ": missing column");
    out.push_back(parse(cells[col], i + 1));
  }
  return out;
}

}  // namespace setsim
