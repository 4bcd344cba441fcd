#include "icd/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace icd {

namespace {

enum class Field { Real, Integer, Pattern };
enum class Symmetry { General, Symmetric, SkewSymmetric };

struct Header {
  bool coordinate = true;
  Field field = Field::Real;
  Symmetry symmetry = Symmetry::General;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header parse_header(const std::string& line, std::size_t lineno) {
  std::istringstream ss(line);
  std::string banner, object, format, field, symmetry;
  ss >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
  if (lower(object) != "matrix") throw ParseError("unsupported object '" + object + "'", lineno);
  Header h;
  format = lower(format);
  if (format == "coordinate") {
    h.coordinate = true;
  } else if (format == "array") {
    h.coordinate = false;
  } else {
    throw ParseError("unsupported format '" + format + "'", lineno);
  }
  field = lower(field);
  if (field == "real" || field == "double") {
    h.field = Field::Real;
  } else if (field == "integer") {
    h.field = Field::Integer;
  } else if (field == "pattern") {
    h.field = Field::Pattern;
  } else {
    throw ParseError("unsupported field '" + field + "'", lineno);
  }
  symmetry = lower(symmetry);
  if (symmetry == "general") {
    h.symmetry = Symmetry::General;
  } else if (symmetry == "symmetric") {
    h.symmetry = Symmetry::Symmetric;
  } else if (symmetry == "skew-symmetric") {
    h.symmetry = Symmetry::SkewSymmetric;
  } else {
    throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
  }
  if (!h.coordinate && h.field == Field::Pattern) throw ParseError("pattern arrays are not valid", lineno);
  return h;
}

// Next line that is neither blank nor a comment.
bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    return true;
  }
  return false;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

SparseMatrix read_matrix_market(std::istream& in, bool transpose) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  const Header h = parse_header(line, lineno);
  if (!h.coordinate) throw ParseError("expected coordinate format for a sparse matrix", lineno);

  if (!next_data_line(in, line, lineno)) throw ParseError("missing size line", lineno + 1);
  long long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw ParseError("malformed size line", lineno);
    }
  }
  if (h.symmetry != Symmetry::General && rows != cols) {
    throw ParseError("symmetric storage requires a square matrix", lineno);
  }

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(h.symmetry == Symmetry::General ? nnz : 2 * nnz));
  for (long long e = 0; e < nnz; ++e) {
    if (!next_data_line(in, line, lineno)) {
      throw ParseError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(e), lineno + 1);
    }
    std::istringstream ss(line);
    long long r = 0, c = 0;
    double v = 1.0;
    if (!(ss >> r >> c)) throw ParseError("malformed entry", lineno);
    if (h.field != Field::Pattern && !(ss >> v)) throw ParseError("missing value", lineno);
    if (r < 1 || r > rows || c < 1 || c > cols) {
      throw ParseError("index (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range", lineno);
    }
    if (h.symmetry != Symmetry::General && r < c) {
      throw ParseError("symmetric storage expects the lower triangle", lineno);
    }
    const Index i = static_cast<Index>(r - 1);
    const Index j = static_cast<Index>(c - 1);
    trips.emplace_back(i, j, v);
    if (i != j) {
      if (h.symmetry == Symmetry::Symmetric) trips.emplace_back(j, i, v);
      if (h.symmetry == Symmetry::SkewSymmetric) trips.emplace_back(j, i, -v);
    } else if (h.symmetry == Symmetry::SkewSymmetric) {
      throw ParseError("skew-symmetric matrices have a zero diagonal", lineno);
    }
  }
  if (next_data_line(in, line, lineno)) throw ParseError("unexpected trailing data", lineno);

  SparseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  m.setFromTriplets(trips.begin(), trips.end());  // sums duplicates
  m.makeCompressed();
  if (transpose) {
    SparseMatrix t = m.transpose();
    t.makeCompressed();
    return t;
  }
  return m;
}

SparseMatrix load_matrix_market(const std::string& path, bool transpose) {
  auto in = open_in(path);
  return read_matrix_market(in, transpose);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

void save_matrix_market(const std::string& path, const SparseMatrix& m) {
  auto out = open_out(path);
  write_matrix_market(out, m);
}

Vector read_matrix_market_vector(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  const Header h = parse_header(line, lineno);
  if (h.coordinate || h.symmetry != Symmetry::General) {
    throw ParseError("expected 'array real general' for a vector", lineno);
  }
  if (!next_data_line(in, line, lineno)) throw ParseError("missing size line", lineno + 1);
  long long rows = 0, cols = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols) || rows < 0 || cols != 1) throw ParseError("expected an n x 1 array", lineno);
  }
  Vector v(rows);
  for (long long k = 0; k < rows; ++k) {
    if (!next_data_line(in, line, lineno)) throw ParseError("too few values", lineno + 1);
    std::istringstream ss(line);
    if (!(ss >> v[static_cast<Index>(k)])) throw ParseError("malformed value", lineno);
  }
  return v;
}

Vector load_matrix_market_vector(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_market_vector(in);
}

void write_matrix_market_vector(std::ostream& out, const Vector& v) {
  out << "%%MatrixMarket matrix array real general\n" << v.size() << " 1\n" << std::setprecision(17);
  for (Index k = 0; k < v.size(); ++k) out << v[k] << '\n';
}

void save_matrix_market_vector(const std::string& path, const Vector& v) {
  auto out = open_out(path);
  write_matrix_market_vector(out, v);
}

}  // namespace icd
