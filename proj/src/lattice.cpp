#include "qsdkit/lattice.hpp"

#include "qsdkit/errors.hpp"

#include <numeric>

namespace qsdkit {

LatticeInfo lattice_info(const ReactionNetwork& net) {
  const auto hnf = hermite_normal_form<BigInt>(net.stoichiometry());
  LatticeInfo info;
  info.rank = hnf.rank;
  info.hnf_basis = hnf.basis();
  if (hnf.rank == net.d()) {
    BigInt det = 1;
    for (int p = 0; p < hnf.rank; ++p) det *= hnf.H(hnf.pivot_rows[static_cast<std::size_t>(p)], p);
    info.abs_det = det;
    info.n_endorsed_asymptotic = det;
    info.unimodular = det == 1;
  }
  return info;
}

std::int64_t count_endorsed_one_species(const ReactionNetwork& net) {
  if (net.d() != 1) throw PreconditionError("count_endorsed_one_species needs d = 1");
  std::int64_t g = 0;
  for (int k = 0; k < net.r(); ++k) g = std::gcd(g, net.xi(k)[0]);
  return g < 0 ? -g : g;
}

}  // namespace qsdkit
