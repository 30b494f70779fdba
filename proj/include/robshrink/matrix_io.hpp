#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "robshrink/numkit.hpp"

namespace robshrink {

// Dense matrices as CSV: one matrix row per line, comma separated, no header.
// Blank lines are skipped. Throws InvalidInput on ragged rows or unparseable
// cells, naming the line.
Matrix read_csv_matrix(std::istream &in);
Matrix read_csv_matrix_file(const std::string &path);

// Shortest round-trip decimal representation of every entry.
void write_csv_matrix(std::ostream &out, const Matrix &m);
void write_csv_matrix_file(const std::string &path, const Matrix &m);

// JSON arrays-of-arrays (row major).
nlohmann::json matrix_to_json(const Matrix &m);
Matrix matrix_from_json(const nlohmann::json &j);

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

} // namespace robshrink
