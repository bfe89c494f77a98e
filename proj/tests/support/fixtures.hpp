#pragma once

#include "qsdkit/network.hpp"

#include <string>

namespace qsdkit::testing {

std::string fixture_path(const std::string& name);
ReactionNetwork fixture(const std::string& name);

}  // namespace qsdkit::testing
