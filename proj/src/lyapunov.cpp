#include "qsdkit/drift.hpp"
#include "qsdkit/errors.hpp"

#include <boost/math/special_functions/bernoulli.hpp>

#include <cmath>
#include <limits>

namespace qsdkit {

namespace {

// sum_{j=lo}^{hi} j^-p, smallest terms first
double partial_sum(double p, std::int64_t lo, std::int64_t hi) {
  double s = 0.0;
  for (std::int64_t j = hi; j >= lo; --j) s += std::pow(static_cast<double>(j), -p);
  return s;
}

bool in_set(const Decomposition& dec, int set_id, const State& x) {
  auto c = dec.lookup(x);
  if (!c) throw WindowError("state " + to_string(x) + " lies outside the explored region");
  if (c->unknown()) throw UnknownStateError("state " + to_string(x) + " is Unknown");
  return c->endorsed() && c->set_id == set_id;
}

void check_pair(const Decomposition& dec, const LyapunovPair& pair) {
  validate(pair);
  if (pair.v.size() != dec.network().d()) throw PreconditionError("v has the wrong dimension");
}

// Lf(x) for f = 1_E * g(<v,x>), with g differences summed directly.
template <typename Diff, typename Value>
double generator_of(const Decomposition& dec, int set_id, const LyapunovPair& pair,
                    const State& x, Diff diff, Value value) {
  const auto& net = dec.network();
  const bool x_in = in_set(dec, set_id, x);
  const std::int64_t m = level(pair.v, x);
  double sum = 0.0;
  for (int k = 0; k < net.r(); ++k) {
    double lambda = intensity(net, k, x);
    if (lambda == 0.0) continue;
    State y = x + net.xi(k);
    const bool y_in = in_set(dec, set_id, y);
    const std::int64_t my = level(pair.v, y);
    double delta;
    if (x_in && y_in)
      delta = diff(m, my);
    else
      delta = (y_in ? value(my) : 0.0) - (x_in ? value(m) : 0.0);
    sum += lambda * delta;
  }
  return sum;
}

}  // namespace

void validate(const LyapunovPair& pair) {
  if (!(pair.alpha > 1.0) || !(pair.beta > 1.0) || !std::isfinite(pair.alpha) ||
      !std::isfinite(pair.beta))
    throw PreconditionError("alpha and beta must be > 1");
  if (pair.v.size() == 0 || (pair.v.array() < 1).any())
    throw PreconditionError("v entries must be >= 1");
}

double zeta_tail(double beta, std::int64_t m) {
  if (!(beta > 1.0)) throw PreconditionError("beta must be > 1");
  if (m < 0) throw PreconditionError("negative level");
  // direct part j in (m, a), Euler-Maclaurin from a on
  std::int64_t a = std::max<std::int64_t>(m + 1, 16);
  for (;;) {
    const double ad = static_cast<double>(a);
    const double fa = std::pow(ad, -beta);
    double tail = ad * fa / (beta - 1.0) + 0.5 * fa;
    // term_k = B_2k / (2k)! * (beta)_{2k-1} * a^{-beta-2k+1}
    double rising = beta;  // (beta)_1
    double power = fa / ad;
    double factorial = 2.0;
    double last = 0.0;
    bool converged = false;
    for (int k = 1; k <= 12; ++k) {
      double term = boost::math::bernoulli_b2n<double>(k) / factorial * rising * power;
      if (k > 1 && std::fabs(term) >= std::fabs(last)) break;
      if (std::fabs(term) < 1e-14) {
        converged = true;
        break;
      }
      tail += term;
      last = term;
      rising *= (beta + 2 * k - 1) * (beta + 2 * k);
      power /= ad * ad;
      factorial *= (2.0 * k + 1) * (2.0 * k + 2);
    }
    if (converged) return partial_sum(beta, m + 1, a - 1) + tail;
    a *= 2;
  }
}

double lyapunov_V(const Decomposition& dec, int set_id, const LyapunovPair& pair,
                  const State& x) {
  check_pair(dec, pair);
  if (!in_set(dec, set_id, x)) return 0.0;
  return partial_sum(pair.alpha, 1, level(pair.v, x));
}

double lyapunov_phi(const Decomposition& dec, int set_id, const LyapunovPair& pair,
                    const State& x) {
  check_pair(dec, pair);
  if (!in_set(dec, set_id, x)) return 0.0;
  return zeta_tail(pair.beta, level(pair.v, x));
}

double generator_V(const Decomposition& dec, int set_id, const LyapunovPair& pair,
                   const State& x) {
  check_pair(dec, pair);
  const double a = pair.alpha;
  return generator_of(
      dec, set_id, pair, x,
      [a](std::int64_t m, std::int64_t my) {
        return my >= m ? partial_sum(a, m + 1, my) : -partial_sum(a, my + 1, m);
      },
      [a](std::int64_t m) { return partial_sum(a, 1, m); });
}

double generator_phi(const Decomposition& dec, int set_id, const LyapunovPair& pair,
                     const State& x) {
  check_pair(dec, pair);
  const double b = pair.beta;
  return generator_of(
      dec, set_id, pair, x,
      [b](std::int64_t m, std::int64_t my) {
        return my >= m ? -partial_sum(b, m + 1, my) : partial_sum(b, my + 1, m);
      },
      [b](std::int64_t m) { return zeta_tail(b, m); });
}

LyapunovDiagnostics lyapunov_diagnostics(const Decomposition& dec, int set_id,
                                         const LyapunovPair& pair, std::int64_t n_max,
                                         double epsilon) {
  check_pair(dec, pair);
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
  if (n_max + dec.slack() > dec.window().level_cap)
    throw WindowError("n_max + slack exceeds level_cap");
  dec.set(set_id);
  LyapunovDiagnostics out;
  out.epsilon = epsilon;
  out.V_bound = pair.alpha / (pair.alpha - 1.0);
  out.min_phi = std::numeric_limits<double>::infinity();
  std::int64_t last_bad_phi = -1, last_bad_V = -1;
  const auto& space = dec.space();
  for (std::int32_t i = 0; i < space.size(); ++i) {
    auto c = dec.class_of(i);
    if (!c.endorsed() || c.set_id != set_id) continue;
    State x = space.state_copy(i);
    const std::int64_t m = level(pair.v, x);
    if (m > n_max) continue;
    const double V = partial_sum(pair.alpha, 1, m);
    const double phi = zeta_tail(pair.beta, m);
    out.max_V = std::max(out.max_V, V);
    out.min_phi = std::min(out.min_phi, phi);
    if (generator_phi(dec, set_id, pair, x) < 0.0) last_bad_phi = std::max(last_bad_phi, m);
    double lhs = generator_V(dec, set_id, pair, x) + std::pow(V, 1.0 + epsilon) / std::pow(phi, epsilon);
    if (lhs > 0.0) last_bad_V = std::max(last_bad_V, m);
  }
  out.bounded = out.max_V <= out.V_bound && out.min_phi > 0.0;
  if (last_bad_phi < n_max) out.phi_threshold = last_bad_phi + 1;
  if (last_bad_V < n_max) out.V_threshold = last_bad_V + 1;
  return out;
}

}  // namespace qsdkit
