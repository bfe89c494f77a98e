#include "random_network.hpp"

namespace qsdkit::testing {

ReactionNetwork random_network(std::mt19937_64& rng, const RandomNetworkOptions& opts) {
  std::uniform_int_distribution<int> pick_d(1, opts.max_species);
  std::uniform_int_distribution<int> pick_r(1, opts.max_reactions);
  std::uniform_int_distribution<std::int64_t> coef(0, opts.max_coefficient);
  std::uniform_real_distribution<double> rate(0.1, 3.0);
  std::bernoulli_distribution sparse(0.5);
  std::bernoulli_distribution power(opts.power_law_probability);

  for (;;) {
    const int d = pick_d(rng);
    const int r = pick_r(rng);
    std::vector<std::string> names;
    for (int i = 0; i < d; ++i) names.push_back("S" + std::to_string(i + 1));

    std::vector<Reaction> reactions;
    IntVector used = IntVector::Zero(d);
    for (int k = 0; k < r; ++k) {
      Complex y(d), yp(d);
      do {
        for (int i = 0; i < d; ++i) {
          y[i] = sparse(rng) ? 0 : coef(rng);
          yp[i] = sparse(rng) ? 0 : coef(rng);
        }
      } while (y == yp);
      RateLaw law = MassAction{rate(rng)};
      if (power(rng)) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        std::uniform_int_distribution<int> expo(0, 3);
        for (int i = 0; i < d; ++i)
          if (y[i] > 0) e[i] = 0.5 * expo(rng);
        law = PowerLaw{rate(rng), e};
      }
      used += y + yp;
      reactions.push_back({y, yp, law});
    }
    if ((used.array() == 0).any()) continue;
    return ReactionNetwork(names, std::move(reactions));
  }
}

State random_state(std::mt19937_64& rng, int d, std::int64_t max_entry) {
  std::uniform_int_distribution<std::int64_t> entry(0, max_entry);
  State x(d);
  for (int i = 0; i < d; ++i) x[i] = entry(rng);
  return x;
}

}  // namespace qsdkit::testing
