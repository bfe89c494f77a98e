#include "doctest.h"

#include "fixtures.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/qsd.hpp"

#include <cmath>

using namespace qsdkit;
using qsdkit::testing::fixture;

namespace {

Distribution table(std::initializer_list<std::pair<std::int64_t, double>> entries) {
  Distribution d;
  for (auto [x, p] : entries) d[make_state({x})] = p;
  return d;
}

}  // namespace

TEST_CASE("total variation") {
  auto p = table({{1, 0.5}, {2, 0.5}});
  auto q = table({{1, 0.75}, {2, 0.25}});
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(p, q) == doctest::Approx(0.5));
  CHECK(tv_distance(table({{1, 1.0}}), table({{2, 1.0}})) == 2.0);
  CHECK_THROWS_AS(tv_distance(table({{1, 0.5}}), p), PreconditionError);
}

TEST_CASE("two-state killed chain matches the closed form") {
  // states 1, 2 with K = 2: 1 -> 2 at a, 1 -> A at c, 2 -> 1 at 2(b + c), 2 -> 3 leaks at 2a
  const double a = 0.7, b = 1.3, c = 0.4;
  auto net = parse_network("S1 -> 2 S1 @ " + std::to_string(a) + "\n2 S1 -> S1 @ " +
                           std::to_string(b) + "\nS1 -> 0 @ " + std::to_string(c));
  Decomposition dec(net, default_window(net, 4));
  auto est = truncation_oracle(dec, 0, 2);
  const double q11 = -(a + c), q12 = a, q21 = 2 * (b + c), q22 = -(2 * (b + c) + 2 * a);
  const double tr = q11 + q22, det = q11 * q22 - q12 * q21;
  const double mu = (tr + std::sqrt(tr * tr - 4 * det)) / 2;
  const double n1 = q21, n2 = mu - q11;
  CHECK(est.probabilities.at(make_state({1})) == doctest::Approx(n1 / (n1 + n2)).epsilon(1e-10));
  CHECK(*est.decay_theta == doctest::Approx(-mu).epsilon(1e-10));
  CHECK(*est.residual < 1e-8);
}

TEST_CASE("truncation converges in K") {
  auto net = fixture("birth_death_1d");
  Decomposition dec(net, default_window(net, 400));
  auto a = truncation_oracle(dec, 0, 200);
  auto b = truncation_oracle(dec, 0, 400);
  CHECK(tv_distance(a.probabilities, b.probabilities) < 1e-6);
  CHECK(std::fabs(total_mass(b.probabilities) - 1.0) < 1e-9);
  CHECK(*b.residual < 1e-8);
  CHECK(*b.decay_theta > 0.0);
  TruncationOptions slow;
  slow.solver = EigenSolver::Uniformized;
  auto c = truncation_oracle(dec, 0, 100, slow);
  CHECK(tv_distance(c.probabilities, b.probabilities) < 1e-5);
  CHECK_THROWS_AS(truncation_oracle(dec, 0, 401), WindowError);
}

TEST_CASE("death m=1 decay rate") {
  auto net = fixture("death_m1");
  Decomposition dec(net, default_window(net, 60));
  auto est = truncation_oracle(dec, 0, 60);
  CHECK(*est.decay_theta == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(est.probabilities.begin()->first == make_state({1}));
}

TEST_CASE("fleming-viot") {
  auto net = fixture("birth_death_1d");
  Decomposition dec(net, default_window(net, 200));
  auto oracle = truncation_oracle(dec, 0, 200);
  FlemingViotOptions opt;
  opt.particles = 500;
  opt.t_end = 60;
  opt.seed = 4;
  for (int i = 1; i <= 20; ++i) opt.record_times.push_back(0.2 * i);
  auto fv = fleming_viot(dec, 0, opt);
  CHECK(tv_distance(fv.estimate.probabilities, oracle.probabilities) < 0.08);
  REQUIRE(fv.snapshots.size() == 20);
  for (const auto& s : fv.snapshots) CHECK(std::fabs(total_mass(s) - 1.0) < 1e-12);
  for (double tv : fv.series.tv_values) CHECK((tv >= 0.0 && tv <= 2.0));
  auto again = fleming_viot(dec, 0, opt);
  CHECK(again.estimate.probabilities == fv.estimate.probabilities);

  opt.average_from = opt.t_end;
  auto last = fleming_viot(dec, 0, opt);
  std::int64_t n = 0;
  for (const auto& [x, p] : last.estimate.probabilities) n += std::llround(p * 500);
  CHECK(n == 500);
}

TEST_CASE("fleming-viot mode near the deterministic fixed point") {
  auto net = fixture("example3");
  Decomposition dec(net, default_window(net, 80));
  FlemingViotOptions opt;
  opt.particles = 300;
  opt.t_end = 4;
  opt.seed = 8;
  opt.start = {{make_state({13, 45}), 1.0}};
  auto c = dec.lookup(make_state({13, 45}));
  REQUIRE(c);
  auto fv = fleming_viot(dec, c->set_id, opt);
  State mode;
  double best = -1;
  for (const auto& [x, p] : fv.estimate.probabilities)
    if (p > best) {
      best = p;
      mode = x;
    }
  CHECK(std::fabs(static_cast<double>(mode[0]) - 13.39) <= 15);
  CHECK(std::fabs(static_cast<double>(mode[1]) - 44.81) <= 15);
}

TEST_CASE("conditioned estimator") {
  auto net = fixture("birth_death_1d");
  Decomposition dec(net, default_window(net, 200));
  ConditionedOptions opt;
  opt.t_end = 0;
  opt.n_traj = 10;
  auto point = conditioned_estimate(dec, 0, make_state({5}), opt);
  CHECK(point.probabilities == table({{5, 1.0}}));

  opt.t_end = 30;
  opt.n_traj = 20000;
  opt.threads = 4;
  auto a = conditioned_estimate(dec, 0, make_state({5}), opt);
  auto b = conditioned_estimate(dec, 0, make_state({20}), opt);
  CHECK(tv_distance(a.probabilities, b.probabilities) < 0.1);
  opt.threads = 1;
  CHECK(conditioned_estimate(dec, 0, make_state({5}), opt).probabilities == a.probabilities);
  CHECK_THROWS_AS(conditioned_estimate(dec, 0, make_state({0}), opt), PreconditionError);
}

TEST_CASE("support of the death m=2 qsd") {
  auto net = fixture("death_m2");
  Decomposition dec(net, default_window(net, 100));
  auto est = truncation_oracle(dec, 0, 100);
  auto report = check_assumption_class(dec, 0);
  auto support = support_check(est, report);
  CHECK(support.mass_outside < 1e-9);
  CHECK_FALSE(support.flagged);

  auto lvm = fixture("lotka_volterra_modified");
  Decomposition dl(lvm, default_window(lvm, 30));
  auto rep = check_assumption_class(dl, 0);
  CHECK(rep.passes);
}

TEST_CASE("mixture") {
  auto net = fixture("death_m2");
  Decomposition dec(net, default_window(net, 60));
  std::map<int, QsdEstimate> ests{{0, truncation_oracle(dec, 0, 60)}, {1, truncation_oracle(dec, 1, 60)}};
  auto mix = mixture_qsd(ests, {{0, 0.3}, {1, 0.7}});
  CHECK(total_mass(mix.probabilities) == doctest::Approx(1.0).epsilon(1e-12));
  auto single = mixture_qsd(ests, {{1, 1.0}});
  CHECK(tv_distance(single.probabilities, ests.at(1).probabilities) < 1e-12);
  CHECK_THROWS_AS(mixture_qsd(ests, {{0, 0.5}, {3, 0.5}}), PreconditionError);
}

TEST_CASE("stationary mode") {
  // S1 <-> 2 S1 on {1, 2, ...}: zero-truncated Poisson with mean a / b
  auto net = parse_network("S1 <-> 2 S1 @ 3, 0.5");
  Decomposition dec(net, default_window(net, 80));
  auto pi = stationary_mode(dec, 0, 80);
  const double lam = 3.0 / 0.5;
  double z = std::exp(lam) - 1.0;
  double term = 1.0;
  for (std::int64_t x = 1; x <= 30; ++x) {
    term *= lam / static_cast<double>(x);
    CHECK(pi.probabilities.at(make_state({x})) == doctest::Approx(term / z).epsilon(1e-9));
  }
  CHECK(std::fabs(*pi.eigenvalue) < 1e-12);

  auto ex6 = fixture("example6");
  Decomposition d6(ex6, default_window(ex6, 20));
  int free_set = -1;
  for (const auto& s : d6.sets())
    if (s.absorbing_neighbors.empty()) free_set = s.id;
  REQUIRE(free_set >= 0);
  auto st = stationary_mode(d6, free_set, 20);
  CHECK(std::fabs(total_mass(st.probabilities) - 1.0) < 1e-9);

  auto m2 = fixture("death_m2");
  Decomposition dm(m2, default_window(m2, 20));
  CHECK_THROWS_AS(stationary_mode(dm, 0, 20), PreconditionError);
}
