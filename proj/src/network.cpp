#include "qsdkit/network.hpp"

#include "qsdkit/errors.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace qsdkit {

std::string to_string(const State& x) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

double rate_constant(const RateLaw& rate) {
  return std::visit([](const auto& law) { return law.alpha; }, rate);
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions)
    : reactions_(std::move(reactions)) {
  if (species.empty()) throw PreconditionError("network has no species");
  if (species.size() > static_cast<std::size_t>(kMaxSpecies))
    throw PreconditionError("at most " + std::to_string(kMaxSpecies) + " species are supported");
  if (reactions_.empty()) throw PreconditionError("network has no reactions");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < species.size(); ++i) {
    if (!seen.insert(species[i]).second)
      throw PreconditionError("duplicate species '" + species[i] + "'");
    species_.push_back({species[i], static_cast<int>(i)});
  }

  const auto dim = static_cast<Eigen::Index>(species_.size());
  xi_.resize(dim, static_cast<Eigen::Index>(reactions_.size()));
  max_source_ = State::Zero(dim);
  IntVector used = IntVector::Zero(dim);

  for (std::size_t k = 0; k < reactions_.size(); ++k) {
    const Reaction& rx = reactions_[k];
    if (rx.source.size() != dim || rx.product.size() != dim)
      throw PreconditionError("reaction " + std::to_string(k) + " has wrong dimension");
    if (!nonnegative(rx.source) || !nonnegative(rx.product))
      throw PreconditionError("negative stoichiometric coefficient");
    if ((rx.source.array() > kMaxCoefficient).any() || (rx.product.array() > kMaxCoefficient).any())
      throw PreconditionError("coefficient exceeds " + std::to_string(kMaxCoefficient));
    if (rx.source == rx.product)
      throw PreconditionError("reaction " + std::to_string(k) + " is reflexive (source == product)");

    const double alpha = rate_constant(rx.rate);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw PreconditionError("rate constant must be positive");
    if (const auto* pl = std::get_if<PowerLaw>(&rx.rate)) {
      if (pl->exponents.size() != dim)
        throw PreconditionError("power law needs one exponent per species");
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (!(pl->exponents[i] >= 0.0) || !std::isfinite(pl->exponents[i]))
          throw PreconditionError("power law exponents must be nonnegative");
        if (pl->exponents[i] > 0.0 && rx.source[i] == 0)
          throw PreconditionError("power law exponent on species '" + species_[i].name +
                                  "' requires it in the source complex");
      }
    }

    xi_.col(static_cast<Eigen::Index>(k)) = rx.xi();
    max_source_ = max_source_.cwiseMax(rx.source);
    used += rx.source + rx.product;
  }
  for (Eigen::Index i = 0; i < dim; ++i)
    if (used[i] == 0)
      throw PreconditionError("species '" + species_[i].name + "' appears in no complex");
}

bool ReactionNetwork::structurally_equal(const ReactionNetwork& other) const {
  if (d() != other.d() || r() != other.r()) return false;
  for (int i = 0; i < d(); ++i)
    if (species_[i].name != other.species_[i].name) return false;
  for (int k = 0; k < r(); ++k) {
    const Reaction& a = reactions_[k];
    const Reaction& b = other.reactions_[k];
    if (a.source != b.source || a.product != b.product) return false;
    if (a.rate.index() != b.rate.index()) return false;
    if (rate_constant(a.rate) != rate_constant(b.rate)) return false;
    if (const auto* pa = std::get_if<PowerLaw>(&a.rate)) {
      if (pa->exponents != std::get<PowerLaw>(b.rate).exponents) return false;
    }
  }
  return true;
}

bool admissible(const ReactionNetwork& net, int k, const State& x) {
  return dominates(x, net.reaction(k).source);
}

double intensity(const ReactionNetwork& net, int k, const State& x) {
  const Reaction& rx = net.reaction(k);
  if (!dominates(x, rx.source)) return 0.0;

  if (const auto* pl = std::get_if<PowerLaw>(&rx.rate)) {
    double value = pl->alpha;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (pl->exponents[i] != 0.0) value *= std::pow(static_cast<double>(x[i]), pl->exponents[i]);
    return value;
  }

  // prod_i x_i! / (x_i - y_ki)!
  std::int64_t product = 1;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (std::int64_t j = 0; j < rx.source[i]; ++j) {
      if (__builtin_mul_overflow(product, x[i] - j, &product))
        throw SaturationError("falling factorial overflow for reaction " + std::to_string(k) +
                              " at state " + to_string(x));
    }
  }
  return std::get<MassAction>(rx.rate).alpha * static_cast<double>(product);
}

}  // namespace qsdkit
