#pragma once

#include <iosfwd>
#include <string>

#include "icd/types.hpp"

namespace icd {

/// Reads a coordinate Matrix Market file (real, integer or pattern; general,
/// symmetric or skew-symmetric). Indices are converted to 0-based, duplicate
/// entries are summed and symmetric storage is expanded.
SparseMatrix read_matrix_market(std::istream& in, bool transpose = false);
SparseMatrix load_matrix_market(const std::string& path, bool transpose = false);

/// Writes "coordinate real general" with 17 significant digits, so a
/// read after write reproduces every value exactly.
void write_matrix_market(std::ostream& out, const SparseMatrix& m);
void save_matrix_market(const std::string& path, const SparseMatrix& m);

/// Dense vectors in "array real general" format (one column).
Vector read_matrix_market_vector(std::istream& in);
Vector load_matrix_market_vector(const std::string& path);
void write_matrix_market_vector(std::ostream& out, const Vector& v);
void save_matrix_market_vector(const std::string& path, const Vector& v);

}  // namespace icd
