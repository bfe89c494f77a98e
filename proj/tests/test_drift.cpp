#include "doctest.h"

#include "fixtures.hpp"
#include "qsdkit/drift.hpp"
#include "qsdkit/errors.hpp"

#include <cmath>

using namespace qsdkit;
using qsdkit::testing::fixture;

namespace {

Decomposition window_of(const ReactionNetwork& net, std::vector<std::int64_t> v, std::int64_t cap) {
  IntVector w(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) w[static_cast<Eigen::Index>(i)] = v[i];
  return Decomposition(net, {w, cap});
}

int set_of(const Decomposition& dec, std::initializer_list<std::int64_t> x) {
  auto c = dec.classify(make_state(x));
  REQUIRE(c.endorsed());
  return c.set_id;
}

}  // namespace

TEST_CASE("death m=2 levels and drift") {
  auto net = fixture("death_m2");
  auto dec = window_of(net, {1}, 40);
  int even = set_of(dec, {2});
  CHECK(level_set(dec, even, 4) == std::vector<State>{make_state({4})});
  CHECK(level_set(dec, even, 5).empty());
  CHECK(*d_lower(dec, even, 2) == 0.0);
  CHECK(*d_lower(dec, even, 6) == 60.0);
  CHECK(*d_upper(dec, even, 2) == 4.0);
  CHECK(*d_upper(dec, even, 8) == 0.0);
  CHECK_FALSE(d_lower(dec, even, 7));

  auto profile = drift_profile(dec, even, 2, 30);
  for (const auto& e : profile.entries) {
    if (e.n % 2) {
      CHECK_FALSE(e.d_lower);
      continue;
    }
    if (e.n >= 4) {
      CHECK(*e.d_lower == 2.0 * e.n * (e.n - 1));
      CHECK(*e.d_upper == 0.0);
    }
  }
  CHECK_THROWS_AS(d_lower(dec, even, 41), WindowError);
}

TEST_CASE("death m=1 grows linearly") {
  auto net = fixture("death_m1");
  auto dec = window_of(net, {1}, 40);
  for (std::int64_t n = 2; n < 30; ++n) CHECK(*d_lower(dec, 0, n) == static_cast<double>(n));
}

TEST_CASE("example 3 level set and killing") {
  auto net = fixture("example3");
  auto dec = window_of(net, {1, 1}, 60);
  int odd = set_of(dec, {1, 1});
  int even = set_of(dec, {2, 1});
  CHECK(level_set(dec, odd, 5) == std::vector<State>{make_state({1, 4}), make_state({3, 2})});
  for (std::int64_t n = 5; n <= 55; ++n)
    CHECK(*d_upper(dec, even, n) == static_cast<double>(std::max(2 * n, n * (n - 2))));
}

TEST_CASE("power-law LV grows cubically") {
  auto net = fixture("lotka_volterra_power");
  auto dec = window_of(net, {2, 1}, 80);
  auto profile = drift_profile(dec, 0, 10, 70, 2);
  auto fit = loglog_fit(profile);
  REQUIRE(fit);
  CHECK(fit->slope == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("profile is independent of the thread count") {
  auto net = fixture("example4");
  auto dec = window_of(net, {1, 2}, 120);
  auto a = drift_profile(dec, 0, 5, 110, 1);
  auto b = drift_profile(dec, 0, 5, 110, 4);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].d_lower == b.entries[i].d_lower);
    CHECK(a.entries[i].d_upper == b.entries[i].d_upper);
  }
}

TEST_CASE("certificates") {
  auto eta = default_eta_grid();
  CHECK(eta.size() == 7);

  auto m2 = fixture("death_m2");
  auto d2 = window_of(m2, {1}, 70);
  auto pass = certify_v(d2, set_of(d2, {2}), eta, 2, 60);
  CHECK(pass.passed());
  REQUIRE(pass.fit);
  CHECK(pass.fit->slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK(pass.eta == 1.0);

  auto m1 = fixture("death_m1");
  auto d1 = window_of(m1, {1}, 70);
  auto fail = certify_v(d1, 0, eta, 2, 60);
  CHECK_FALSE(fail.passed());
  CHECK(fail.failed_clause == 'b');

  auto lv = fixture("lotka_volterra");
  auto dl = window_of(lv, {3, 1}, 70);
  auto lvc = certify_v(dl, 0, eta, 5, 60);
  CHECK(lvc.verdict == VCertificate::Verdict::Fail);
  CHECK(lvc.failed_clause == 'a');

  auto ex4 = fixture("example4");
  auto d12 = window_of(ex4, {1, 2}, 200);
  CHECK(certify_v(d12, 0, eta, 20, 190).passed());
  auto d11 = window_of(ex4, {1, 1}, 200);
  CHECK_FALSE(certify_v(d11, 0, eta, 20, 190).passed());

  CHECK_THROWS_AS(certify_v(d2, 0, eta, 2, 11), InconclusiveError);
}

TEST_CASE("clause (a) only gets harder on a wider range") {
  auto net = fixture("example4");
  auto dec = window_of(net, {1, 1}, 200);
  auto narrow = drift_profile(dec, 0, 20, 100);
  auto wide = drift_profile(dec, 0, 20, 190);
  for (double eta : default_eta_grid())
    for (std::int64_t N = 20; N <= 60; N += 5)
      if (!clause_a(narrow, eta, N)) CHECK_FALSE(clause_a(wide, eta, N));
}

TEST_CASE("search over v") {
  auto net = fixture("example4");
  auto dec = window_of(net, {1, 1}, 60);
  auto certs = search_v(dec, 0, 4, default_eta_grid(), 20, 150, 2);
  REQUIRE(certs.size() == 16);
  bool seen_fail = false;
  for (const auto& c : certs) {
    if (!c.passed()) seen_fail = true;
    else CHECK_FALSE(seen_fail);
    double ratio = static_cast<double>(c.v[1]) / static_cast<double>(c.v[0]);
    if (c.passed()) CHECK(ratio > 1.3);
  }
  auto v12 = std::find_if(certs.begin(), certs.end(),
                          [](const VCertificate& c) { return c.v == make_state({1, 2}); });
  REQUIRE(v12 != certs.end());
  CHECK(v12->passed());
  INFO(v12->reason);
}

TEST_CASE("generator") {
  auto net = fixture("death_m2");
  CHECK(generator_W(net, make_state({1}), make_state({6})) == -60.0);
  CHECK(generator_W(net, make_state({1}), make_state({1})) == 0.0);
  auto ex4 = fixture("example4");
  // at (1,1) only the S1+S2 reactions fire: -1 + 3 - 0.75*2 + 1*2
  CHECK(generator_W(ex4, make_state({1, 2}), make_state({1, 1})) == doctest::Approx(2.5));
}

TEST_CASE("lyapunov pair") {
  auto net = fixture("death_m2");
  auto dec = window_of(net, {1}, 60);
  LyapunovPair pair{make_state({1}), 2.0, 2.0};
  CHECK(lyapunov_V(dec, 0, pair, make_state({1})) == 0.0);
  CHECK(lyapunov_phi(dec, 0, pair, make_state({1})) == 0.0);
  LyapunovPair three{make_state({3}), 2.0, 2.0};
  auto odd = fixture("death_m1");
  auto d1 = window_of(odd, {1}, 20);
  CHECK(lyapunov_V(d1, 0, pair, make_state({3})) == doctest::Approx(49.0 / 36.0).epsilon(1e-15));

  const double pi2_6 = M_PI * M_PI / 6.0;
  CHECK(std::fabs(zeta_tail(2.0, 0) - pi2_6) < 1e-12);
  CHECK(std::fabs(zeta_tail(2.0, 1) - (pi2_6 - 1.0)) < 1e-12);
  for (double beta : {1.1, 1.5, 2.0, 3.5, 8.0})
    for (std::int64_t m : {1, 5, 20, 100, 1000}) {
      double phi = zeta_tail(beta, m);
      double bound = std::pow(static_cast<double>(m), 1.0 - beta) / (beta - 1.0);
      CHECK(phi <= bound);
      if (m >= 20) CHECK(phi >= bound / 2.0);
      CHECK(std::fabs(zeta_tail(beta, m) - zeta_tail(beta, m + 1) -
                      std::pow(static_cast<double>(m + 1), -beta)) < 1e-12);
    }

  CHECK_THROWS_AS(validate(LyapunovPair{make_state({1}), 1.0, 2.0}), PreconditionError);

  auto diag = lyapunov_diagnostics(dec, 0, LyapunovPair{make_state({1}), 2.0, 3.0}, 50);
  CHECK(diag.bounded);
  REQUIRE(diag.phi_threshold);
  CHECK(*diag.phi_threshold == 3);
  CHECK_FALSE(diag.V_threshold);
  auto slow = lyapunov_diagnostics(dec, 0, LyapunovPair{make_state({1}), 1.5, 2.0}, 50, 0.25);
  REQUIRE(slow.V_threshold);
  CHECK(*slow.V_threshold < 20);
}
