#include "doctest.h"
#include "properties.hpp"

TEST_CASE("module invariants over random networks") {
  auto results = qsdkit::testing::run_all_properties(1000, 20261015);
  CHECK(results.size() == 26);
  for (const auto& r : results) {
    INFO(r.name << ": " << r.failures << " failures in " << r.cases << " cases, first: " << r.first_failure);
    CHECK(r.cases >= 1000);
    CHECK(r.ok());
  }
}

TEST_CASE("filter selects by name") {
  auto results = qsdkit::testing::run_all_properties(5, 1, "tv distance");
  REQUIRE(results.size() == 1);
  CHECK(results[0].cases == 5);
}
