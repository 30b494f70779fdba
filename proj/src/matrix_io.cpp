#include "robshrink/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

namespace robshrink {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  double value = 0.0;
  const auto *end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw InvalidInput("CSV line " + std::to_string(line_no) +
                       ": cannot parse '" + std::string(cell) + "'");
  }
  return value;
}

} // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

Matrix read_csv_matrix(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) {
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      const auto cell = view.substr(start, comma == std::string_view::npos
                                               ? std::string_view::npos
                                               : comma - start);
      row.push_back(parse_cell(cell, line_no));
      if (comma == std::string_view::npos) {
        break;
      }
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidInput("CSV line " + std::to_string(line_no) + ": expected " +
                         std::to_string(rows.front().size()) +
                         " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw InvalidInput("CSV input is empty");
  }
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

Matrix read_csv_matrix_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open '" + path + "'");
  }
  return read_csv_matrix(in);
}

void write_csv_matrix(std::ostream &out, const Matrix &m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) {
        out << ',';
      }
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_csv_matrix_file(const std::string &path, const Matrix &m) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidInput("cannot write '" + path + "'");
  }
  write_csv_matrix(out, m);
}

nlohmann::json matrix_to_json(const Matrix &m) {
  auto j = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(i, c));
    }
    j.push_back(std::move(row));
  }
  return j;
}

Matrix matrix_from_json(const nlohmann::json &j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw InvalidInput("JSON matrix must be a non-empty array of arrays");
  }
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto &row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw InvalidInput("JSON matrix row " + std::to_string(i) +
                         " has the wrong length");
    }
    for (Index c = 0; c < cols; ++c) {
      const auto &v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw InvalidInput("JSON matrix entry is not a number");
      }
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

} // namespace robshrink
