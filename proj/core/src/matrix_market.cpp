#include "sscf/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sscf/error.hpp"

namespace sscf {
namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void parse_error(long line, const std::string& what) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Next non-comment, non-blank line; false at EOF.
bool next_data_line(std::istream& in, std::string& line, long& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '%' || is_blank(line)) continue;
    return true;
  }
  return false;
}

}  // namespace

SymmetricMatrix read_matrix_market(std::istream& in) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) parse_error(1, "empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") parse_error(lineno, "missing %%MatrixMarket banner");
  object = lowercase(object);
  format = lowercase(format);
  field = lowercase(field);
  symmetry = lowercase(symmetry);
  if (object != "matrix") parse_error(lineno, "object must be 'matrix'");
  if (format != "coordinate" && format != "array") {
    parse_error(lineno, "format must be 'coordinate' or 'array'");
  }
  if (field != "real") parse_error(lineno, "field must be 'real'");
  if (symmetry != "symmetric" && symmetry != "general") {
    parse_error(lineno, "symmetry must be 'symmetric' or 'general'");
  }
  const bool coordinate = format == "coordinate";
  const bool symmetric = symmetry == "symmetric";

  if (!next_data_line(in, line, lineno)) parse_error(lineno, "missing size line");
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream size(line);
    if (!(size >> rows >> cols)) parse_error(lineno, "malformed size line");
    if (coordinate && !(size >> nnz)) parse_error(lineno, "coordinate size line needs nnz");
    std::string rest;
    if (size >> rest) parse_error(lineno, "trailing tokens on size line");
  }
  if (rows < 1 || rows != cols) parse_error(lineno, "matrix must be square and non-empty");
  if (nnz < 0) parse_error(lineno, "negative entry count");

  Matrix m = Matrix::Zero(rows, cols);
  auto read_value = [&](std::istringstream& ls, double& v) {
    if (!(ls >> v)) parse_error(lineno, "malformed numeric value");
    std::string rest;
    if (ls >> rest) parse_error(lineno, "trailing tokens after entry");
  };

  if (coordinate) {
    std::vector<char> seen(static_cast<std::size_t>(rows * cols), 0);
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(in, line, lineno)) parse_error(lineno, "unexpected end of entries");
      std::istringstream ls(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(ls >> i >> j)) parse_error(lineno, "malformed coordinate entry");
      read_value(ls, v);
      if (i < 1 || i > rows || j < 1 || j > cols) parse_error(lineno, "index out of range");
      if (symmetric && i < j) parse_error(lineno, "entry above the diagonal in symmetric format");
      auto& flag = seen[static_cast<std::size_t>((i - 1) * cols + (j - 1))];
      if (flag) parse_error(lineno, "duplicate entry");
      flag = 1;
      m(i - 1, j - 1) = v;
      if (symmetric) m(j - 1, i - 1) = v;
    }
  } else {
    for (long j = 0; j < cols; ++j) {
      for (long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line, lineno)) parse_error(lineno, "unexpected end of entries");
        std::istringstream ls(line);
        double v = 0.0;
        read_value(ls, v);
        m(i, j) = v;
        if (symmetric) m(j, i) = v;
      }
    }
  }
  if (next_data_line(in, line, lineno)) parse_error(lineno, "extra data after last entry");

  return SymmetricMatrix::from_dense(m);
}

SymmetricMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_matrix_market(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_matrix_market(const SymmetricMatrix& m, std::ostream& out) {
  const Index n = m.dim();
  std::vector<std::string> entries;
  char buf[96];
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double v = m(i, j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g", static_cast<long>(i + 1),
                    static_cast<long>(j + 1), v);
      entries.emplace_back(buf);
    }
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << n << ' ' << n << ' ' << entries.size() << '\n';
  for (const auto& e : entries) out << e << '\n';
}

void write_matrix_market(const SymmetricMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  write_matrix_market(m, out);
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace sscf
