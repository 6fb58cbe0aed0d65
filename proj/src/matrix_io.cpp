#include "pdg/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pdg {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

long parse_count(const std::string& tok, long line) {
  long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || v < 0)
    throw ParseError("expected a non-negative integer, got '" + tok + "'",
                     line);
  return v;
}

double parse_real(const std::string& tok, long line) {
  // from_chars<double> accepts "1e3" but not "1E+3D"; strtod handles the
  // Fortran-style exponents that occur in the wild except 'D', which we
  // normalize first.
  std::string t = tok;
  for (char& c : t)
    if (c == 'D' || c == 'd') c = 'e';
  const char* begin = t.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + t.size() || t.empty())
    throw ParseError("expected a numeric value, got '" + tok + "'", line);
  return v;
}

}  // namespace

SparseMat from_triplets(Index n_rows, Index n_cols,
                        const std::vector<Triplet>& entries) {
  std::vector<Eigen::Triplet<double>> ts;
  ts.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols)
      throw std::out_of_range("triplet index (" + std::to_string(e.row) +
                              ", " + std::to_string(e.col) +
                              ") outside matrix of size " +
                              std::to_string(n_rows) + "x" +
                              std::to_string(n_cols));
    ts.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col),
                    e.value);
  }
  SparseMat m(n_rows, n_cols);
  m.setFromTriplets(ts.begin(), ts.end());  // sums duplicates
  m.makeCompressed();
  return m;
}

SparseMat from_triplets(Index n, const std::vector<Triplet>& entries) {
  return from_triplets(n, n, entries);
}

SparseMat parse_matrix_market(std::istream& in) {
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  auto header = split_ws(line);
  if (header.size() < 5 || lower(header[0]) != "%%matrixmarket" ||
      lower(header[1]) != "matrix")
    throw ParseError("malformed MatrixMarket header", lineno);
  const std::string format = lower(header[2]);
  const std::string field = lower(header[3]);
  const std::string symmetry = lower(header[4]);
  if (format != "coordinate")
    throw ParseError("unsupported format '" + format +
                     "' (only coordinate is accepted)", lineno);
  if (field != "real" && field != "integer")
    throw ParseError("unsupported field '" + field +
                     "' (only real or integer is accepted)", lineno);
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError("unsupported symmetry '" + symmetry +
                     "' (only general or symmetric is accepted)", lineno);
  const bool symmetric = symmetry == "symmetric";

  // Size line: first non-comment, non-blank line after the header.
  long n_rows = 0, n_cols = 0, n_entries = 0;
  for (;;) {
    if (!std::getline(in, line))
      throw ParseError("missing size line", lineno + 1);
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3)
      throw ParseError("size line must contain 'rows cols entries'", lineno);
    n_rows = parse_count(toks[0], lineno);
    n_cols = parse_count(toks[1], lineno);
    n_entries = parse_count(toks[2], lineno);
    break;
  }

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(symmetric ? 2 * n_entries
                                                     : n_entries));
  long seen = 0;
  while (seen < n_entries) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(n_entries) +
                       " entries, found only " + std::to_string(seen),
                       lineno + 1);
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3)
      throw ParseError("entry line must contain 'row col value'", lineno);
    long i = parse_count(toks[0], lineno);
    long j = parse_count(toks[1], lineno);
    double v = parse_real(toks[2], lineno);
    if (i < 1 || i > n_rows || j < 1 || j > n_cols)
      throw ParseError("index (" + std::to_string(i) + ", " +
                       std::to_string(j) + ") out of bounds for " +
                       std::to_string(n_rows) + "x" + std::to_string(n_cols),
                       lineno);
    entries.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
    ++seen;
  }
  return from_triplets(n_rows, n_cols, entries);
}

SparseMat parse_matrix_market(const std::string& text) {
  std::istringstream is(text);
  return parse_matrix_market(is);
}

SparseMat load_matrix_market(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open matrix file: " + path);
  return parse_matrix_market(f);
}

namespace {

std::string shortest_repr(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_matrix_market(const SparseMat& m, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index r = 0; r < m.outerSize(); ++r)
    for (SparseMat::InnerIterator it(m, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' '
          << shortest_repr(it.value()) << '\n';
}

std::string write_matrix_market(const SparseMat& m) {
  std::ostringstream os;
  write_matrix_market(m, os);
  return os.str();
}

void save_matrix_market(const SparseMat& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  write_matrix_market(m, f);
}

Vector matvec(const SparseMat& m, const Vector& v) {
  if (v.size() != m.cols())
    throw std::invalid_argument(
        "matvec: vector length " + std::to_string(v.size()) +
        " does not match matrix cols " + std::to_string(m.cols()));
  return m * v;
}

}  // namespace pdg
