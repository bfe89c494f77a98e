#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>

namespace qsdkit {

using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// A lattice point of N_0^d: copy numbers per species.
using State = IntVector;

/// Entrywise x >= y.
template <typename A, typename B>
bool dominates(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  return (x.array() >= y.array()).all();
}

template <typename A>
bool nonnegative(const Eigen::MatrixBase<A>& x) {
  return (x.array() >= 0).all();
}

/// The level functional <v, x>.
template <typename A, typename B>
std::int64_t level(const Eigen::MatrixBase<A>& v, const Eigen::MatrixBase<B>& x) {
  return v.dot(x);
}

struct LexLess {
  bool operator()(const State& a, const State& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  }
};

struct StateHash {
  std::size_t operator()(const State& x) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::uint64_t z = h ^ static_cast<std::uint64_t>(x[i]);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      h = z ^ (z >> 31);
    }
    return static_cast<std::size_t>(h);
  }
};

struct StateEqual {
  bool operator()(const State& a, const State& b) const {
    return a.size() == b.size() && a == b;
  }
};

inline State make_state(std::initializer_list<std::int64_t> values) {
  State x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (auto v : values) x[i++] = v;
  return x;
}

std::string to_string(const State& x);

}  // namespace qsdkit
