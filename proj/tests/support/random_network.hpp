#pragma once

#include "qsdkit/network.hpp"

#include <cstdint>
#include <random>

namespace qsdkit::testing {

struct RandomNetworkOptions {
  int max_species = 3;
  int max_reactions = 4;
  std::int64_t max_coefficient = 3;
  double power_law_probability = 0.0;
};

/// Small valid network; every species appears in some complex.
ReactionNetwork random_network(std::mt19937_64& rng, const RandomNetworkOptions& opts = {});

State random_state(std::mt19937_64& rng, int d, std::int64_t max_entry);

}  // namespace qsdkit::testing
