#pragma once

#include "qsdkit/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qsdkit {

inline constexpr int kMaxSpecies = 16;
inline constexpr std::int64_t kMaxCoefficient = 255;

struct Species {
  std::string name;
  int index = 0;
};

/// Stoichiometric coefficients per species; the zero vector is the empty complex.
using Complex = IntVector;

struct MassAction {
  double alpha = 1.0;
};

/// alpha * prod_i x_i^{e_i}, switched on only when x dominates the source complex.
/// An exponent e_i > 0 requires the source to contain species i, so that the
/// intensity is positive exactly on {x >= source}.
struct PowerLaw {
  double alpha = 1.0;
  Eigen::VectorXd exponents;
};

using RateLaw = std::variant<MassAction, PowerLaw>;

double rate_constant(const RateLaw& rate);

struct Reaction {
  Complex source;
  Complex product;
  RateLaw rate;

  IntVector xi() const { return product - source; }
};

/// A validated, immutable reaction network with its kinetics.
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions);

  int d() const { return static_cast<int>(species_.size()); }
  int r() const { return static_cast<int>(reactions_.size()); }

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(int k) const { return reactions_.at(static_cast<std::size_t>(k)); }

  /// d x r matrix whose column k is xi_k.
  const IntMatrix& stoichiometry() const { return xi_; }
  auto xi(int k) const { return xi_.col(k); }

  /// Entrywise maximum of the source complexes.
  const State& max_source() const { return max_source_; }

  bool structurally_equal(const ReactionNetwork& other) const;

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  IntMatrix xi_;
  State max_source_;
};

/// lambda_k(x). Mass action uses exact integer falling factorials and throws
/// SaturationError instead of wrapping.
double intensity(const ReactionNetwork& net, int k, const State& x);

/// True iff the admissibility gate x >= y_k is open, i.e. intensity > 0.
bool admissible(const ReactionNetwork& net, int k, const State& x);

inline const State& max_source(const ReactionNetwork& net) { return net.max_source(); }

ReactionNetwork parse_network(std::string_view text);
ReactionNetwork load_network(const std::string& path);
std::string format_network(const ReactionNetwork& net);

}  // namespace qsdkit
