#pragma once

#include "qsdkit/network.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

namespace qsdkit {

using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using BigMatrix = Eigen::Matrix<BigInt, Eigen::Dynamic, Eigen::Dynamic>;
using BigVector = Eigen::Matrix<BigInt, Eigen::Dynamic, 1>;

template <typename Scalar>
struct HermiteForm {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix H;  // A * U, lower column echelon form; zero columns trail
  Matrix U;  // unimodular
  int rank = 0;
  std::vector<Eigen::Index> pivot_rows;

  Matrix basis() const { return H.leftCols(rank); }
};

namespace detail {

template <typename Scalar>
Scalar floor_div(const Scalar& a, const Scalar& b) {
  Scalar q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

// returns (g, s, t) with s*a + t*b = g >= 0
template <typename Scalar>
std::tuple<Scalar, Scalar, Scalar> extended_gcd(Scalar a, Scalar b) {
  Scalar s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (b != 0) {
    Scalar q = a / b;
    Scalar r = a - q * b;
    a = b;
    b = r;
    Scalar s2 = s0 - q * s1;
    s0 = s1;
    s1 = s2;
    Scalar t2 = t0 - q * t1;
    t0 = t1;
    t1 = t2;
  }
  if (a < 0) return {-a, -s0, -t0};
  return {a, s0, t0};
}

}  // namespace detail

/// Column Hermite normal form by exact integer column operations.
/// Pivots are positive and entries left of a pivot lie in [0, pivot).
template <typename Scalar, typename Derived>
HermiteForm<Scalar> hermite_normal_form(const Eigen::MatrixBase<Derived>& A) {
  using Matrix = typename HermiteForm<Scalar>::Matrix;
  HermiteForm<Scalar> out;
  out.H = A.template cast<Scalar>();
  const Eigen::Index rows = out.H.rows();
  const Eigen::Index cols = out.H.cols();
  out.U = Matrix::Identity(cols, cols);
  Matrix& H = out.H;
  Matrix& U = out.U;

  auto combine = [&](Eigen::Index c, Eigen::Index j, const Scalar& s, const Scalar& t,
                     const Scalar& u, const Scalar& w) {
    // (col_c, col_j) <- (s*col_c + t*col_j, u*col_c + w*col_j)
    for (Matrix* M : {&H, &U}) {
      for (Eigen::Index i = 0; i < M->rows(); ++i) {
        Scalar a = (*M)(i, c);
        Scalar b = (*M)(i, j);
        (*M)(i, c) = s * a + t * b;
        (*M)(i, j) = u * a + w * b;
      }
    }
  };

  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < rows && c < cols; ++i) {
    for (Eigen::Index j = c + 1; j < cols; ++j) {
      if (H(i, j) == 0) continue;
      if (H(i, c) == 0) {
        H.col(c).swap(H.col(j));
        U.col(c).swap(U.col(j));
        continue;
      }
      auto [g, s, t] = detail::extended_gcd<Scalar>(H(i, c), H(i, j));
      Scalar a = H(i, c) / g;
      Scalar b = H(i, j) / g;
      combine(c, j, s, t, Scalar(-b), a);
    }
    if (H(i, c) == 0) continue;
    if (H(i, c) < 0) {
      H.col(c) = -H.col(c);
      U.col(c) = -U.col(c);
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      Scalar q = detail::floor_div<Scalar>(H(i, j), H(i, c));
      if (q != 0) {
        H.col(j) -= q * H.col(c);
        U.col(j) -= q * U.col(c);
      }
    }
    out.pivot_rows.push_back(i);
    ++c;
  }
  out.rank = static_cast<int>(c);
  return out;
}

/// Exact test whether b lies in the integer span of the HNF basis columns.
template <typename Scalar, typename Derived>
std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> lattice_coordinates(
    const HermiteForm<Scalar>& hnf, const Eigen::MatrixBase<Derived>& b) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rest = b.template cast<Scalar>();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coords(hnf.rank);
  for (int p = 0; p < hnf.rank; ++p) {
    const Eigen::Index row = hnf.pivot_rows[static_cast<std::size_t>(p)];
    for (Eigen::Index i = (p ? hnf.pivot_rows[static_cast<std::size_t>(p - 1)] + 1 : 0); i < row;
         ++i)
      if (rest[i] != 0) return std::nullopt;
    const Scalar& pivot = hnf.H(row, p);
    if (rest[row] % pivot != 0) return std::nullopt;
    coords[p] = rest[row] / pivot;
    rest -= coords[p] * hnf.H.col(p);
  }
  for (Eigen::Index i = 0; i < rest.size(); ++i)
    if (rest[i] != 0) return std::nullopt;
  return coords;
}

struct LatticeInfo {
  int rank = 0;
  BigMatrix hnf_basis;
  std::optional<BigInt> abs_det;
  std::optional<BigInt> n_endorsed_asymptotic;  // empty means infinite
  bool unimodular = false;
};

LatticeInfo lattice_info(const ReactionNetwork& net);

/// gcd of |xi_k|; the number of endorsed sets of a one-species network.
std::int64_t count_endorsed_one_species(const ReactionNetwork& net);

}  // namespace qsdkit
