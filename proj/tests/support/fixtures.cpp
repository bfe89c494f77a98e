#include "fixtures.hpp"

namespace qsdkit::testing {

std::string fixture_path(const std::string& name) {
  return std::string(QSDKIT_DATA_DIR) + "/" + name + ".crn";
}

ReactionNetwork fixture(const std::string& name) { return load_network(fixture_path(name)); }

}  // namespace qsdkit::testing
