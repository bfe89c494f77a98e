#include "doctest.h"

#include "fixtures.hpp"
#include "qsdkit/drift.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/ssa.hpp"

#include <cmath>

using namespace qsdkit;
using qsdkit::testing::fixture;

TEST_CASE("philox known answers") {
  auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox4x32::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  auto ones = Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                   {0xffffffff, 0xffffffff});
  CHECK(ones == Philox4x32::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  auto pi = Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                 {0xa4093822, 0x299f31d0});
  CHECK(pi == Philox4x32::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are distinct and reproducible") {
  Philox4x32 a({7, 0}), b({7, 0}), c({7, 1}), d({8, 0});
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    CHECK(x == b());
    same_c += x == c();
    same_d += x == d();
  }
  CHECK(same_c < 3);
  CHECK(same_d < 3);
  Philox4x32 u({1, 2});
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = u.uniform();
    if (x < 0.0 || x >= 1.0) FAIL("uniform out of range");
    mean += x;
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("step") {
  auto net = fixture("death_m1");
  Philox4x32 rng({3, 0});
  CHECK_FALSE(step(net, make_state({0}), rng));
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    auto s = step(net, make_state({5}), rng);
    if (!s || s->k != 0) FAIL("unexpected step");
    sum += s->dt;
  }
  CHECK(sum / 20000 == doctest::Approx(0.2).epsilon(0.03));

  auto two = parse_network("S1 -> 0 @ 1\nS1 -> 2 S1 @ 3");
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += step(two, make_state({1}), rng)->k == 1;
  const double p = 0.75, sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::fabs(static_cast<double>(hits) / n - p) < 3 * sigma);
}

TEST_CASE("oracle") {
  auto lv = fixture("lotka_volterra");
  AbsorptionOracle oracle(lv);
  CHECK(oracle.classify(make_state({0, 5})) == StateClass::Kind::Absorbing);
  CHECK(oracle.classify(make_state({5, 0})) == StateClass::Kind::Absorbing);
  CHECK(oracle.classify(make_state({3, 4})) == StateClass::Kind::Endorsed);
  auto m2 = fixture("death_m2");
  AbsorptionOracle o2(m2);
  CHECK(o2.classify(make_state({1})) == StateClass::Kind::Absorbing);
  CHECK(o2.classify(make_state({7})) == StateClass::Kind::Endorsed);
  auto ex3 = fixture("example3");
  AbsorptionOracle o3(ex3);
  Decomposition dec(ex3, default_window(ex3, 30));
  for (std::int32_t i = 0; i < dec.space().size(); ++i)
    if (dec.space().level_of(i) <= 30)
      CHECK(o3.classify(dec.space().state_copy(i)) == dec.class_of(i).kind);
}

TEST_CASE("paths") {
  auto net = fixture("death_m1");
  AbsorptionOracle oracle(net);
  auto t = simulate_path(net, make_state({5}), 1e6, {11, 0}, 100, oracle);
  CHECK(t.final_state() == make_state({0}));
  CHECK(t.absorbed_at);
  CHECK(t.stop == Trajectory::Stop::Absorbed);
  CHECK(t.jumps() == 5);
  for (std::size_t i = 1; i < t.jump_times.size(); ++i) CHECK(t.jump_times[i] > t.jump_times[i - 1]);
  auto again = simulate_path(net, make_state({5}), 1e6, {11, 0}, 100, oracle);
  CHECK(again.jump_times == t.jump_times);

  auto frozen = simulate_path(net, make_state({0}), 10, {1, 0}, 100, oracle);
  CHECK(frozen.jumps() == 0);

  auto lvm = fixture("lotka_volterra_modified");
  AbsorptionOracle om(lvm);
  auto path = simulate_path(lvm, make_state({70, 200}), 100, {5, 0}, 10000, om);
  CHECK(path.stop != Trajectory::Stop::Guard);
  std::size_t bad = 0;
  for (std::size_t i = 0; i + 1 < path.states.size(); ++i) {
    IntVector jump = path.states[i + 1] - path.states[i];
    bool matched = false;
    for (int k = 0; k < lvm.r(); ++k)
      if (jump == lvm.xi(k) && intensity(lvm, k, path.states[i]) > 0) matched = true;
    if (!matched || !nonnegative(path.states[i + 1])) ++bad;
  }
  CHECK(bad == 0);

  auto birth = parse_network("S1 -> 2 S1 @ 1");
  AbsorptionOracle ob(birth);
  auto guarded = simulate_path(birth, make_state({1}), 1e9, {2, 0}, 50, ob);
  CHECK(guarded.stop == Trajectory::Stop::Guard);
  CHECK(guarded.final_state()[0] == 51);
}

TEST_CASE("ensembles") {
  auto net = fixture("death_m1");
  AbsorptionOracle oracle(net);
  auto s = ensemble(net, make_state({5}), 1e6, 10000, 2024, 100, oracle, 4);
  CHECK(s.absorption_fraction == 1.0);
  const double expected = 1 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
  CHECK(std::fabs(*s.extinction_time_mean - expected) < 3 * s.extinction_time_stderr);
  auto serial = ensemble(net, make_state({5}), 1e6, 10000, 2024, 100, oracle, 1);
  CHECK(serial.extinction_time_mean == s.extinction_time_mean);

  auto one = ensemble(net, make_state({5}), 1e6, 1, 9, 100, oracle);
  auto path = simulate_path(net, make_state({5}), 1e6, {9, 0}, 100, oracle);
  CHECK(*one.extinction_time_mean == *path.absorbed_at);

  auto m2 = fixture("death_m2");
  AbsorptionOracle o2(m2);
  CHECK(ensemble(m2, make_state({6}), 1e3, 2000, 1, 100, o2).absorption_fraction == 1.0);
}

TEST_CASE("finite-h drift matches the generator") {
  auto net = fixture("example4");
  AbsorptionOracle oracle(net);
  const State x = make_state({20, 30});
  IntVector v = make_state({1, 2});
  const double h = 1e-3;
  const int n = 40000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    Philox4x32 rng({77, static_cast<std::uint64_t>(i)});
    auto end = run_path(net, x, h, rng, 100000, oracle);
    double dv = static_cast<double>(level(v, end.state) - level(v, x)) / h;
    sum += dv;
    sum2 += dv * dv;
  }
  double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  // O(h) bias is far below the standard error here
  CHECK(std::fabs(mean - generator_W(net, v, x)) < 3 * se + 0.05 * std::fabs(generator_W(net, v, x)));
}

TEST_CASE("deterministic fixed point") {
  auto net = fixture("example3");
  Eigen::VectorXd z0(2);
  z0 << 10, 40;
  auto z = find_fixed_point(net, z0);
  CHECK(z[0] == doctest::Approx(13.39).epsilon(0.001));
  CHECK(z[1] == doctest::Approx(44.81).epsilon(0.001));
  const double a1 = 300, a2 = 1, a3 = 0.5;
  CHECK(std::fabs(z[0] - std::cbrt(2 * a1 * a2) / std::pow(a3, 2.0 / 3)) < 1e-8);
  CHECK(std::fabs(z[1] - std::pow(a1, 2.0 / 3) / std::cbrt(2 * a2 * a3)) < 1e-8);

  auto death = fixture("death_m1");
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
  CHECK(find_fixed_point(death, origin) == origin);

  auto jac = deterministic_jacobian(net, z);
  Eigen::VectorXd e(2);
  e << 1e-6, 0;
  Eigen::VectorXd fd = (deterministic_field(net, z + e) - deterministic_field(net, z - e)) / 2e-6;
  CHECK((fd - jac.col(0)).norm() < 1e-4);

  auto birth = parse_network("0 -> S1 @ 1");
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(find_fixed_point(birth, one), ConvergenceError);
}
