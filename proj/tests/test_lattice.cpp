#include "doctest.h"

#include "fixtures.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/lattice.hpp"

#include <random>

using namespace qsdkit;
using qsdkit::testing::fixture;

namespace {

bool same(const BigMatrix& a, const BigMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("example 5 lattice") {
  auto info = lattice_info(fixture("example5"));
  CHECK(info.rank == 2);
  REQUIRE(info.abs_det);
  CHECK(*info.abs_det == 2);
  BigMatrix expected(2, 2);
  expected << 1, 0, 1, 2;
  CHECK(same(info.hnf_basis, expected));
  CHECK_FALSE(info.unimodular);
}

TEST_CASE("death process determinant is m") {
  for (int m : {1, 2, 3, 5}) {
    auto info = lattice_info(fixture("death_m" + std::to_string(m)));
    CHECK(info.rank == 1);
    CHECK(*info.abs_det == m);
    CHECK(*info.n_endorsed_asymptotic == m);
  }
}

TEST_CASE("birth-death lattice is unimodular") {
  auto info = lattice_info(fixture("example4"));
  CHECK(*info.abs_det == 1);
  CHECK(info.unimodular);
}

TEST_CASE("rank deficiency means infinitely many sets") {
  auto info = lattice_info(fixture("example6"));
  CHECK(info.rank == 1);
  CHECK_FALSE(info.abs_det);
  CHECK_FALSE(info.n_endorsed_asymptotic);
}

TEST_CASE("one species gcd") {
  CHECK(count_endorsed_one_species(parse_network("2 S1 -> 0 @ 1")) == 2);
  CHECK(count_endorsed_one_species(fixture("birth_death_1d")) == 1);
  CHECK(count_endorsed_one_species(parse_network("6 S1 -> 0 @ 1\n4 S1 -> 0 @ 1")) == 2);
  CHECK_THROWS_AS(count_endorsed_one_species(fixture("example5")), PreconditionError);
}

TEST_CASE("hnf generates the same lattice, int64 and big integer agree") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4), entry(-6, 6);
  for (int trial = 0; trial < 300; ++trial) {
    IntMatrix A(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = entry(rng);
    auto small = hermite_normal_form<std::int64_t>(A);
    auto big = hermite_normal_form<BigInt>(A);
    CHECK(small.rank == big.rank);
    CHECK(small.H == A * small.U);
    CHECK(same(big.H, small.H.cast<BigInt>()));
    for (Eigen::Index c = 0; c < A.cols(); ++c)
      CHECK(lattice_coordinates(big, A.col(c).cast<BigInt>()).has_value());
    for (int p = 0; p < small.rank; ++p) {
      CHECK(small.H(small.pivot_rows[p], p) > 0);
      for (Eigen::Index i = 0; i < small.pivot_rows[p]; ++i) CHECK(small.H(i, p) == 0);
      for (int q = 0; q < p; ++q) {
        CHECK(small.H(small.pivot_rows[p], q) >= 0);
        CHECK(small.H(small.pivot_rows[p], q) < small.H(small.pivot_rows[p], p));
      }
    }
    CHECK(small.H.rightCols(A.cols() - small.rank).isZero());
  }
}

TEST_CASE("membership rejects points off the lattice") {
  IntMatrix A(2, 3);
  A << 2, -1, -1, 0, -1, 3;
  auto hnf = hermite_normal_form<BigInt>(A);
  BigVector odd(2), even(2);
  odd << 1, 0;
  even << 1, 1;
  CHECK_FALSE(lattice_coordinates(hnf, odd).has_value());
  CHECK(lattice_coordinates(hnf, even).has_value());
}
