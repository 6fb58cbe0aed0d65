#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "pdg/gallery.hpp"
#include "pdg/matrix_io.hpp"
#include "test_util.hpp"

using namespace pdg;

namespace {

void check_csr_invariants(const SparseMat& m) {
  REQUIRE(m.isCompressed());
  const auto* offsets = m.outerIndexPtr();
  const auto* cols = m.innerIndexPtr();
  CHECK(offsets[0] == 0);
  CHECK(offsets[m.rows()] == m.nonZeros());
  for (Index r = 0; r < m.rows(); ++r) {
    CHECK(offsets[r] <= offsets[r + 1]);
    for (Index p = offsets[r]; p < offsets[r + 1]; ++p) {
      CHECK(cols[p] >= 0);
      CHECK(cols[p] < m.cols());
      if (p > offsets[r]) CHECK(cols[p - 1] < cols[p]);  // strictly increasing
    }
  }
}

}  // namespace

TEST_CASE("parse: diagonal general matrix") {
  const std::string text =
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 2\n"
      "1 1 3.0\n"
      "2 2 4.0\n";
  SparseMat m = parse_matrix_market(text);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m.nonZeros() == 2);
  CHECK(m.coeff(0, 0) == 3.0);
  CHECK(m.coeff(1, 1) == 4.0);
  CHECK(m.coeff(0, 1) == 0.0);
  check_csr_invariants(m);
}

TEST_CASE("parse: symmetric storage expands to full") {
  const std::string text =
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "2 2 3\n"
      "1 1 3.0\n"
      "2 2 4.0\n"
      "2 1 5.0\n";
  SparseMat m = parse_matrix_market(text);
  CHECK(m.nonZeros() == 4);
  CHECK(m.coeff(0, 1) == 5.0);
  CHECK(m.coeff(1, 0) == 5.0);
  check_csr_invariants(m);
}

TEST_CASE("parse: steam2-sized coordinate file") {
  // 600 x 600 with 5660 distinct entries, the shape of the smallest
  // training matrix.
  std::ostringstream os;
  os << "%%MatrixMarket matrix coordinate real general\n600 600 5660\n";
  std::mt19937_64 rng(42);
  std::set<std::pair<int, int>> used;
  std::uniform_int_distribution<int> pick(1, 600);
  while (used.size() < 5660) used.insert({pick(rng), pick(rng)});
  for (const auto& [i, j] : used) os << i << ' ' << j << " 1.5\n";
  SparseMat m = parse_matrix_market(os.str());
  CHECK(m.rows() == 600);
  CHECK(m.nonZeros() == 5660);
}

TEST_CASE("parse: comments and integer field accepted") {
  const std::string text =
      "%%MatrixMarket matrix coordinate integer general\n"
      "% a comment\n"
      "\n"
      "2 2 1\n"
      "% another\n"
      "1 2 7\n";
  SparseMat m = parse_matrix_market(text);
  CHECK(m.coeff(0, 1) == 7.0);
}

TEST_CASE("parse: rejects malformed input with line positions") {
  auto line_of = [](const std::string& text) {
    try {
      parse_matrix_market(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1L;
  };
  CHECK(line_of("%%MatrixMarket matrix array real general\n1 1\n1.0\n") == 1);
  CHECK(line_of("%%MatrixMarket matrix coordinate complex general\n"
                "1 1 1\n1 1 1.0 0.0\n") == 1);
  CHECK(line_of("%%MatrixMarket matrix coordinate pattern general\n"
                "1 1 1\n1 1\n") == 1);
  CHECK(line_of("not a header\n") == 1);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n"
                "2 2 1\n1 1 abc\n") == 3);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n"
                "2 2 1\n3 1 1.0\n") == 3);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n"
                "2 2 2\n1 1 1.0\n") == 4);  // missing entry
}

TEST_CASE("write: size lines") {
  std::vector<Triplet> ts{{0, 0, 3.0}, {1, 1, 4.0}};
  const std::string d = write_matrix_market(from_triplets(2, ts));
  CHECK(d.find("2 2 2\n") != std::string::npos);
  const std::string e = write_matrix_market(from_triplets(3, {}));
  CHECK(e.find("3 3 0\n") != std::string::npos);
}

TEST_CASE("write/parse round-trip is bitwise exact") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    SparseMat m = test::random_sparse(10, 30, rng);
    SparseMat back = parse_matrix_market(write_matrix_market(m));
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.nonZeros() == m.nonZeros());
    for (Index r = 0; r < m.rows(); ++r) {
      SparseMat::InnerIterator a(m, r), b(back, r);
      for (; a; ++a, ++b) {
        REQUIRE(b);
        CHECK(a.col() == b.col());
        CHECK(a.value() == b.value());  // bitwise
      }
    }
  }
}

TEST_CASE("matvec: identity and diagonal") {
  Vector v(3);
  v << 1, 2, 3;
  CHECK((matvec(identity_matrix(3), v) - v).norm() == 0.0);

  std::vector<Triplet> ts{{0, 0, 3.0}, {1, 1, 4.0}};
  Vector w(2);
  w << 1, 1;
  Vector out = matvec(from_triplets(2, ts), w);
  CHECK(out(0) == 3.0);
  CHECK(out(1) == 4.0);
}

TEST_CASE("matvec: matches dense product oracle") {
  std::mt19937_64 rng(11);
  SUBCASE("single 8x8") {
    SparseMat m = test::random_sparse(8, 20, rng);
    Vector v = test::random_vector(8, rng);
    Vector got = matvec(m, v);
    Vector want = Matrix(m) * v;  // dense path
    CHECK((got - want).norm() <= 1e-14 * (1.0 + want.norm()));
  }
  SUBCASE("random sizes up to 64") {
    for (int rep = 0; rep < 25; ++rep) {
      const Index n = 2 + static_cast<Index>(rng() % 63);
      SparseMat m = test::random_sparse(n, 4 * n, rng);
      Vector v = test::random_vector(n, rng);
      Vector got = matvec(m, v);
      Vector want = Matrix(m) * v;
      CHECK((got - want).norm() <= 1e-13 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("matvec: dimension mismatch") {
  CHECK_THROWS_AS(matvec(identity_matrix(3), Vector::Ones(4)),
                  std::invalid_argument);
}

TEST_CASE("from_triplets: duplicates are summed") {
  SparseMat m = from_triplets(2, {{0, 0, 1.0}, {0, 0, 1.0}});
  CHECK(m.nonZeros() == 1);
  CHECK(m.coeff(0, 0) == 2.0);
}

TEST_CASE("from_triplets: empty matrix is valid") {
  SparseMat m = from_triplets(3, {});
  CHECK(m.rows() == 3);
  CHECK(m.nonZeros() == 0);
  check_csr_invariants(m);
}

TEST_CASE("from_triplets: order of entries does not matter") {
  std::vector<Triplet> ts{
      {0, 1, 2.0}, {3, 2, -1.0}, {1, 1, 5.0}, {2, 0, 4.0}, {0, 3, 1.0}};
  SparseMat sorted_build = from_triplets(4, ts);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(ts.begin(), ts.end(), rng);
    SparseMat shuffled = from_triplets(4, ts);
    CHECK(Matrix(shuffled) == Matrix(sorted_build));
    check_csr_invariants(shuffled);
  }
}

TEST_CASE("from_triplets: rejects out-of-range indices") {
  CHECK_THROWS_AS(from_triplets(2, {{2, 0, 1.0}}), std::out_of_range);
  CHECK_THROWS_AS(from_triplets(2, {{0, -1, 1.0}}), std::out_of_range);
}

TEST_CASE("csr invariants after every constructor") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    SparseMat m = test::random_sparse(12, 40, rng);
    check_csr_invariants(m);
    check_csr_invariants(parse_matrix_market(write_matrix_market(m)));
  }
  check_csr_invariants(laplacian_2d(5));
}
