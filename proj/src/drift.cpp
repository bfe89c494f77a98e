#include "qsdkit/drift.hpp"

#include "parallel.hpp"
#include "qsdkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace qsdkit {

namespace {

// Neumaier compensated sum in extended precision.
struct CompensatedSum {
  long double sum = 0.0L;
  long double carry = 0.0L;

  void add(long double x) {
    long double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  long double value() const { return sum + carry; }
};

void check_level(const Decomposition& dec, std::int64_t n) {
  if (n < 0) throw WindowError("negative level " + std::to_string(n));
  if (n + dec.slack() > dec.window().level_cap)
    throw WindowError("level " + std::to_string(n) + " needs level_cap >= " +
                      std::to_string(n + dec.slack()) + ", have " +
                      std::to_string(dec.window().level_cap));
}

std::vector<std::int64_t> v_dot_xi(const ReactionNetwork& net, const IntVector& v) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(net.r()));
  for (int k = 0; k < net.r(); ++k) out[static_cast<std::size_t>(k)] = v.dot(net.xi(k));
  return out;
}

struct LevelScan {
  bool any = false;
  long double max_inward = -std::numeric_limits<long double>::infinity();
  long double max_killing = -std::numeric_limits<long double>::infinity();
};

LevelScan scan_level(const Decomposition& dec, int set_id, std::int64_t n) {
  check_level(dec, n);
  dec.set(set_id);
  const auto& space = dec.space();
  const auto& net = dec.network();
  const auto vxi = v_dot_xi(net, dec.window().v);
  LevelScan scan;
  State x(net.d());
  for (std::int32_t i : space.level(n)) {
    auto c = dec.class_of(i);
    if (c.unknown())
      throw UnknownStateError("state " + to_string(space.state_copy(i)) + " on level " +
                              std::to_string(n) + " is Unknown");
    if (!c.endorsed() || c.set_id != set_id) continue;
    x = space.state(i);
    CompensatedSum inward, killing;
    for (int k = 0; k < net.r(); ++k) {
      std::int32_t t = space.jump(i, k);
      if (t == StateSpace::kNoJump) continue;
      if (t == StateSpace::kLeaves) throw WindowError("jump leaves the explored region");
      double lambda = intensity(net, k, x);
      if (lambda == 0.0) continue;
      auto target = dec.class_of(t);
      if (target.unknown())
        throw UnknownStateError("neighbor " + to_string(space.state_copy(t)) + " of " +
                                to_string(x) + " is Unknown");
      if (target.endorsed())
        inward.add(static_cast<long double>(lambda) *
                   static_cast<long double>(vxi[static_cast<std::size_t>(k)]));
      else
        killing.add(lambda);
    }
    scan.any = true;
    scan.max_inward = std::max(scan.max_inward, inward.value());
    scan.max_killing = std::max(scan.max_killing, killing.value());
  }
  return scan;
}

DriftEntry entry_at(const Decomposition& dec, int set_id, std::int64_t n) {
  auto scan = scan_level(dec, set_id, n);
  DriftEntry e;
  e.n = n;
  if (scan.any) {
    e.d_lower = static_cast<double>(-scan.max_inward);
    e.d_upper = static_cast<double>(static_cast<long double>(n) * scan.max_killing);
  }
  return e;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace

std::size_t DriftProfile::defined_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const DriftEntry& e) {
    return e.d_lower && e.d_upper;
  }));
}

std::vector<State> level_set(const Decomposition& dec, int set_id, std::int64_t n) {
  check_level(dec, n);
  dec.set(set_id);
  std::vector<State> out;
  for (std::int32_t i : dec.space().level(n)) {
    auto c = dec.class_of(i);
    if (c.unknown())
      throw UnknownStateError("state " + to_string(dec.space().state_copy(i)) + " is Unknown");
    if (c.endorsed() && c.set_id == set_id) out.push_back(dec.space().state_copy(i));
  }
  return out;
}

std::optional<double> d_lower(const Decomposition& dec, int set_id, std::int64_t n) {
  return entry_at(dec, set_id, n).d_lower;
}

std::optional<double> d_upper(const Decomposition& dec, int set_id, std::int64_t n) {
  return entry_at(dec, set_id, n).d_upper;
}

DriftProfile drift_profile(const Decomposition& dec, int set_id, std::int64_t n_min,
                           std::int64_t n_max, int threads) {
  if (n_min > n_max) throw PreconditionError("empty level range");
  check_level(dec, n_min);
  check_level(dec, n_max);
  dec.set(set_id);
  DriftProfile profile;
  profile.v = dec.window().v;
  profile.set_id = set_id;
  profile.entries.resize(static_cast<std::size_t>(n_max - n_min + 1));
  detail::parallel_for(profile.entries.size(), threads, [&](std::size_t i) {
    profile.entries[i] = entry_at(dec, set_id, n_min + static_cast<std::int64_t>(i));
  });
  profile.zeta = absorption_zeta(dec, set_id);
  return profile;
}

std::optional<std::int64_t> absorption_zeta(const Decomposition& dec, int set_id) {
  dec.set(set_id);
  const auto& space = dec.space();
  const auto& net = dec.network();
  const auto vxi = v_dot_xi(net, dec.window().v);
  std::optional<std::int64_t> zeta;
  State x(net.d());
  for (std::int32_t i = 0; i < space.size(); ++i) {
    if (space.level_of(i) > dec.window().level_cap) continue;
    auto c = dec.class_of(i);
    if (!c.endorsed() || c.set_id != set_id) continue;
    x = space.state(i);
    for (int k = 0; k < net.r(); ++k) {
      std::int32_t t = space.jump(i, k);
      if (t < 0 || !dec.class_of(t).absorbing()) continue;
      if (intensity(net, k, x) == 0.0) continue;
      zeta = std::max(zeta.value_or(std::numeric_limits<std::int64_t>::min()),
                      vxi[static_cast<std::size_t>(k)]);
    }
  }
  return zeta;
}

double generator_W(const ReactionNetwork& net, const IntVector& v, const State& x) {
  if (v.size() != net.d() || x.size() != net.d()) throw PreconditionError("dimension mismatch");
  CompensatedSum sum;
  for (int k = 0; k < net.r(); ++k) {
    double lambda = intensity(net, k, x);
    if (lambda != 0.0) sum.add(static_cast<long double>(lambda) * v.dot(net.xi(k)));
  }
  return static_cast<double>(sum.value());
}

std::optional<LogLogFit> loglog_fit(const DriftProfile& profile) {
  std::vector<const DriftEntry*> defined;
  for (const auto& e : profile.entries)
    if (e.d_lower && e.d_upper) defined.push_back(&e);
  std::size_t start = defined.size() / 2;
  if (defined.size() - start < 2) return std::nullopt;
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < defined.size(); ++i) {
    if (defined[i]->n <= 0 || *defined[i]->d_lower <= 0.0) return std::nullopt;
    xs.push_back(std::log(static_cast<double>(defined[i]->n)));
    ys.push_back(std::log(*defined[i]->d_lower));
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.points = static_cast<int>(xs.size());
  return fit;
}

const char* to_string(VCertificate::Verdict verdict) {
  switch (verdict) {
    case VCertificate::Verdict::Pass: return "pass";
    case VCertificate::Verdict::Fail: return "fail";
    case VCertificate::Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<double> default_eta_grid() {
  std::vector<double> grid;
  for (int p = 6; p >= 0; --p) grid.push_back(std::ldexp(1.0, -p));
  return grid;
}

bool clause_a(const DriftProfile& profile, double eta, std::int64_t N) {
  for (const auto& e : profile.entries)
    if (e.n >= N && e.d_lower && e.d_upper && *e.d_lower < eta * *e.d_upper) return false;
  return true;
}

VCertificate certify_profile(const DriftProfile& profile, std::vector<double> eta_grid) {
  if (profile.entries.empty()) throw PreconditionError("empty profile");
  const std::size_t defined = profile.defined_count();
  if (defined < 6)
    throw InconclusiveError("only " + std::to_string(defined) +
                            " defined levels in the range, need 6");
  if (eta_grid.empty()) eta_grid = default_eta_grid();
  for (double eta : eta_grid)
    if (!(eta > 0.0) || !std::isfinite(eta)) throw PreconditionError("eta must be positive");
  std::sort(eta_grid.begin(), eta_grid.end(), std::greater<>());
  eta_grid.erase(std::unique(eta_grid.begin(), eta_grid.end()), eta_grid.end());

  VCertificate cert;
  cert.v = profile.v;
  cert.fit = loglog_fit(profile);

  const std::int64_t lo = profile.entries.front().n;
  const std::int64_t hi = profile.entries.back().n;
  const std::int64_t third = lo + (hi - lo) / 3;
  std::vector<std::int64_t> candidates;
  for (const auto& e : profile.entries)
    if (e.n <= third && e.d_lower && e.d_upper) candidates.push_back(e.n);
  if (candidates.empty()) candidates.push_back(third);

  // absorption evidence on the fitted half
  if (profile.zeta) {
    std::vector<const DriftEntry*> def;
    for (const auto& e : profile.entries)
      if (e.d_lower && e.d_upper) def.push_back(&e);
    cert.absorption_evidence = true;
    for (std::size_t i = def.size() / 2; i < def.size(); ++i) {
      const auto& e = *def[i];
      if (!(e.n > 0 &&
            *e.d_lower > static_cast<double>(*profile.zeta) * *e.d_upper / static_cast<double>(e.n)))
        cert.absorption_evidence = false;
    }
  }

  std::optional<double> eta_a;
  for (double eta : eta_grid) {
    std::optional<std::int64_t> N;
    for (std::int64_t n : candidates)
      if (clause_a(profile, eta, n)) {
        N = n;
        break;
      }
    if (!N) continue;
    if (!eta_a) eta_a = eta;
    if (cert.fit && cert.fit->r2 >= 0.99 && cert.fit->slope > 1.0 + eta) {
      cert.verdict = VCertificate::Verdict::Pass;
      cert.eta = eta;
      cert.threshold_N = N;
      cert.reason = "eta " + format_double(eta) + " from N " + std::to_string(*N);
      return cert;
    }
  }

  cert.verdict = VCertificate::Verdict::Fail;
  if (!eta_a) {
    cert.failed_clause = 'a';
    cert.reason = "clause (a): d_lower < eta d_upper beyond every N <= " + std::to_string(third) +
                  " for every eta in the grid";
  } else {
    cert.failed_clause = 'b';
    if (!cert.fit)
      cert.reason = "clause (b): d_lower not positive on the fitted range";
    else if (cert.fit->r2 < 0.99)
      cert.reason = "clause (b): r2 " + format_double(cert.fit->r2) + " below 0.99";
    else
      cert.reason = "clause (b): slope " + format_double(cert.fit->slope) + " <= 1 + eta for eta " +
                    format_double(*eta_a) + " and every smaller eta meeting (a)";
  }
  return cert;
}

VCertificate certify_v(const Decomposition& dec, int set_id, const std::vector<double>& eta_grid,
                       std::int64_t n_min, std::int64_t n_max, int threads) {
  return certify_profile(drift_profile(dec, set_id, n_min, n_max, threads), eta_grid);
}

std::vector<VCertificate> search_v(const Decomposition& dec, int set_id, int v_max,
                                   const std::vector<double>& eta_grid, std::int64_t n_min,
                                   std::int64_t n_max, int threads) {
  if (v_max < 1) throw PreconditionError("v_max must be >= 1");
  const auto& net = dec.network();
  const State anchor = dec.set(set_id).members.front();
  const int d = net.d();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::size_t>(v_max);
    if (total > 10'000'000) throw PreconditionError("v grid too large");
  }
  std::vector<VCertificate> out(total);
  detail::parallel_for(total, threads, [&](std::size_t idx) {
    IntVector v(d);
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      v[i] = 1 + static_cast<std::int64_t>(rest % static_cast<std::size_t>(v_max));
      rest /= static_cast<std::size_t>(v_max);
    }
    VCertificate& cert = out[idx];
    cert.v = v;
    try {
      Window w{v, std::max({n_max + window_slack(net, v), minimum_level_cap(net, v),
                            level(v, anchor)})};
      Decomposition local(net, w);
      auto c = local.classify(anchor);
      if (!c.endorsed()) throw UnknownStateError("anchor not endorsed in the window");
      cert = certify_v(local, c.set_id, eta_grid, n_min, n_max);
    } catch (const InconclusiveError& e) {
      cert.verdict = VCertificate::Verdict::Inconclusive;
      cert.reason = e.what();
    } catch (const UnknownStateError& e) {
      cert.verdict = VCertificate::Verdict::Inconclusive;
      cert.reason = e.what();
    } catch (const WindowError& e) {
      cert.verdict = VCertificate::Verdict::Inconclusive;
      cert.reason = e.what();
    }
  });
  std::stable_partition(out.begin(), out.end(), [](const VCertificate& c) { return c.passed(); });
  return out;
}

}  // namespace qsdkit
