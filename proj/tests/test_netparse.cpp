#include "doctest.h"

#include "fixtures.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/network.hpp"

using namespace qsdkit;
using qsdkit::testing::fixture;

TEST_CASE("single reaction without prefix") {
  auto net = parse_network("S1 -> 2 S1 @ 1.0");
  CHECK(net.d() == 1);
  CHECK(net.r() == 1);
  CHECK(net.xi(0)[0] == 1);
}

TEST_CASE("birth-death in two species") {
  auto net = fixture("example4");
  CHECK(net.d() == 2);
  CHECK(net.r() == 8);
  IntMatrix expected(2, 8);
  expected << -1, 1, 0, 0, -1, 1, 0, 0,
               0, 0, -1, 1, 0, 0, -1, 1;
  CHECK(net.stoichiometry() == expected);
}

TEST_CASE("irreflexive reactions are rejected") {
  CHECK_THROWS_AS(parse_network("S1 -> S1 @ 1.0"), ParseError);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_network("reaction: S1 -> 0 @ 1\nreaction: S1 -> @ 2\n");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 17);
  }
  CHECK_THROWS_AS(parse_network("S1 -> 0 @ 0"), ParseError);
  CHECK_THROWS_AS(parse_network("S1 -> 0 @ -1"), ParseError);
  CHECK_THROWS_AS(parse_network("species: A\nA + B -> 0 @ 1"), ParseError);
  CHECK_THROWS_AS(parse_network("S1 <-> 0 @ 1"), ParseError);
  CHECK_THROWS_AS(parse_network("# only a comment\n"), ParseError);
}

TEST_CASE("species header fixes order") {
  auto net = parse_network("species: B, A\nA -> B @ 1\n");
  CHECK(net.species()[0].name == "B");
  CHECK(net.xi(0) == make_state({1, -1}));
  auto first = parse_network("A -> B @ 1\n");
  CHECK(first.species()[0].name == "A");
}

TEST_CASE("reversible arrows expand forward then backward") {
  auto net = parse_network("reaction: S1 <-> 2 S1 @ 2.0, 0.1 # comment\r\n");
  REQUIRE(net.r() == 2);
  CHECK(net.xi(0)[0] == 1);
  CHECK(net.xi(1)[0] == -1);
  CHECK(rate_constant(net.reaction(0).rate) == 2.0);
  CHECK(rate_constant(net.reaction(1).rate) == 0.1);
}

TEST_CASE("format round-trips") {
  for (const char* text : {"2 S1 -> 0 @ 1.0",
                           "S1 -> 3 S1 @ 1\nS1 + 3 S2 -> 2 S2 @ 1\n3 S1 -> 2 S1 + 3 S2 @ 1",
                           "species: S1, S2\nS1 + S2 -> 2 S2 @ power(0.3; 4, 2.5)\n"
                           "S2 -> 0 @ power(1; 0, 3)\n0 -> S1 @ 0.1"}) {
    auto net = parse_network(text);
    auto again = parse_network(format_network(net));
    CHECK(net.structurally_equal(again));
  }
  auto pl = parse_network("species: S1, S2\nS1 + S2 -> 2 S2 @ power(0.3; 4, 2.5)");
  auto back = parse_network(format_network(pl));
  CHECK(std::get<PowerLaw>(back.reaction(0).rate).exponents == Eigen::Vector2d(4, 2.5));
}

TEST_CASE("mass-action intensity") {
  auto net = parse_network("2 S1 -> S1 @ 2");
  CHECK(intensity(net, 0, make_state({5})) == 40.0);
  CHECK(intensity(net, 0, make_state({1})) == 0.0);
  CHECK(intensity(net, 0, make_state({2})) == 4.0);
}

TEST_CASE("power-law intensity and gate") {
  auto net = fixture("lotka_volterra_power");
  CHECK(intensity(net, 1, make_state({1, 2})) == 4.0);
  CHECK(intensity(net, 1, make_state({0, 2})) == 0.0);
  CHECK(intensity(net, 2, make_state({5, 2})) == 8.0);
  CHECK_THROWS_AS(parse_network("species: S1, S2\nS2 -> 0 @ power(1; 1, 3)"), ParseError);
  CHECK_THROWS_AS(parse_network("S1 -> 0 @ power(1; 1, 3)"), ParseError);
}

TEST_CASE("falling factorial overflow is explicit") {
  auto net = parse_network("9 S1 -> 0 @ 1");
  CHECK_THROWS_AS(intensity(net, 0, make_state({4'000'000'000})), SaturationError);
}

TEST_CASE("max source") {
  CHECK(fixture("example3").max_source() == make_state({2, 2}));
  CHECK(parse_network("S1 -> 0 @ 1").max_source() == make_state({1}));
  CHECK(fixture("example5").max_source() == make_state({3, 3}));
}

TEST_CASE("limits") {
  std::string big = "species: ";
  for (int i = 0; i < 17; ++i) big += (i ? ", S" : "S") + std::to_string(i);
  CHECK_THROWS_AS(parse_network(big + "\nS0 -> 0 @ 1"), ParseError);
  CHECK_THROWS_AS(parse_network("256 S1 -> 0 @ 1"), ParseError);
  CHECK_THROWS_AS(parse_network("species: A, B\nA -> 0 @ 1"), ParseError);
}
