#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rsdr/dataset.hpp"
#include "rsdr/errors.hpp"

namespace rsdr {

namespace detail {

/// RFC-4180 style parser: comma separators, double-quote quoting with ""
/// escapes, rows split on LF / CRLF / CR.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          quoted = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (quoted) throw InputError("csv: unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

inline bool is_missing_token(std::string t) {
  t = trim(t);
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t.empty() || t == "na" || t == "nan" || t == "null";
}

inline bool parse_double(const std::string& raw, double& out) {
  const std::string t = trim(raw);
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

/// Shortest representation that round-trips the exact double.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace detail

struct LoadedCsv {
  Dataset data;
  std::vector<std::string> predictor_names;
  std::string response_name;
  int dropped_rows = 0;  // rows removed by listwise deletion
};

/// Loads a headered numeric CSV into a Dataset.  `response_selector` is a
/// header name, or (when no header matches) a 0-based column index.  Rows
/// with any missing cell (empty, NA, NaN, null) are dropped and counted.
/// Optionally standardizes every predictor column to mean 0, variance 1.
inline LoadedCsv load_csv(const std::string& path,
                          const std::string& response_selector,
                          bool standardize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("csv: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto rows = detail::parse_csv(buffer.str());
  if (rows.size() < 2)
    throw InputError("csv: need a header row and at least one data row");

  const std::vector<std::string>& header = rows[0];
  const std::size_t n_cols = header.size();
  if (n_cols < 2)
    throw InputError("csv: need a response column and at least one predictor");

  std::ptrdiff_t response_col = -1;
  for (std::size_t j = 0; j < n_cols; ++j)
    if (detail::trim(header[j]) == detail::trim(response_selector)) {
      response_col = static_cast<std::ptrdiff_t>(j);
      break;
    }
  if (response_col < 0) {
    double as_number = 0.0;
    if (detail::parse_double(response_selector, as_number) &&
        as_number == std::floor(as_number) && as_number >= 0 &&
        as_number < static_cast<double>(n_cols)) {
      response_col = static_cast<std::ptrdiff_t>(as_number);
    } else {
      throw InputError("csv: response column '" + response_selector +
                       "' not found");
    }
  }

  std::vector<std::vector<double>> kept;
  int dropped = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() == 1 && detail::trim(cells[0]).empty()) continue;  // blank line
    if (cells.size() != n_cols)
      throw InputError("csv: row " + std::to_string(r + 1) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(n_cols));
    std::vector<double> values(n_cols);
    bool missing = false;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (detail::is_missing_token(cells[j])) {
        missing = true;
        break;
      }
      if (!detail::parse_double(cells[j], values[j]))
        throw InputError("csv: non-numeric value '" + cells[j] + "' at row " +
                         std::to_string(r + 1) + ", column '" +
                         header[j] + "'");
      if (!std::isfinite(values[j])) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    kept.push_back(std::move(values));
  }
  if (kept.size() < 2)
    throw InputError("csv: fewer than 2 complete rows after listwise deletion");

  LoadedCsv out;
  out.dropped_rows = dropped;
  out.response_name = header[static_cast<std::size_t>(response_col)];
  const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
  const Eigen::Index p = static_cast<Eigen::Index>(n_cols - 1);
  out.data.X.resize(n, p);
  out.data.Y.resize(n);
  for (std::size_t j = 0; j < n_cols; ++j)
    if (static_cast<std::ptrdiff_t>(j) != response_col)
      out.predictor_names.push_back(header[j]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (static_cast<std::ptrdiff_t>(j) == response_col) {
        out.data.Y(i) = kept[static_cast<std::size_t>(i)][j];
      } else {
        out.data.X(i, col++) = kept[static_cast<std::size_t>(i)][j];
      }
    }
  }

  if (standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double mean = out.data.X.col(j).mean();
      const double var =
          (out.data.X.col(j).array() - mean).square().sum() / (n - 1.0);
      if (!(var > 0.0))
        throw InputError("csv: cannot standardize constant column '" +
                         out.predictor_names[static_cast<std::size_t>(j)] + "'");
      out.data.X.col(j) = (out.data.X.col(j).array() - mean) / std::sqrt(var);
    }
  }
  return out;
}

/// Writes a Dataset as a headered CSV at full double precision, so a
/// subsequent load reproduces it exactly.
inline void write_dataset_csv(const std::string& path, const Dataset& data,
                              const std::vector<std::string>& predictor_names = {},
                              const std::string& response_name = "y") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  const Eigen::Index p = data.p();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (static_cast<Eigen::Index>(predictor_names.size()) > j) {
      out << predictor_names[static_cast<std::size_t>(j)];
    } else {
      out << "x" << (j + 1);
    }
    out << ',';
  }
  out << response_name << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j)
      out << detail::format_double(data.X(i, j)) << ',';
    out << detail::format_double(data.Y(i)) << '\n';
  }
  if (!out) throw InputError("csv: write to '" + path + "' failed");
}

}  // namespace rsdr
