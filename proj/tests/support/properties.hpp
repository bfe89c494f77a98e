#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qsdkit::testing {

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  int skipped = 0;  // draws outside the property's domain
  std::string first_failure;
  double seconds = 0.0;

  bool ok() const { return failures == 0 && cases > 0; }
};

/// Every module invariant, each run over `cases` random instances seeded from `seed`.
/// A nonempty filter keeps properties whose name contains it.
std::vector<PropertyResult> run_all_properties(int cases, std::uint64_t seed, const std::string& filter = "");

}  // namespace qsdkit::testing
