#pragma once

#include "qsdkit/network.hpp"
#include "qsdkit/statespace.hpp"
#include "qsdkit/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qsdkit {

// All level computations use v = decomp.window().v and one endorsed set of the decomposition.
// A level n is usable when n + slack <= level_cap; otherwise WindowError.

struct DriftEntry {
  std::int64_t n = 0;
  std::optional<double> d_lower;  // none when the level has no state of the set
  std::optional<double> d_upper;
};

struct DriftProfile {
  IntVector v;
  int set_id = 0;
  std::vector<DriftEntry> entries;  // sorted by n
  /// max <v, xi_k> over reactions that take some window state of the set into A.
  std::optional<std::int64_t> zeta;

  std::size_t defined_count() const;
};

std::vector<State> level_set(const Decomposition& decomp, int set_id, std::int64_t n);
std::optional<double> d_lower(const Decomposition& decomp, int set_id, std::int64_t n);
std::optional<double> d_upper(const Decomposition& decomp, int set_id, std::int64_t n);

DriftProfile drift_profile(const Decomposition& decomp, int set_id, std::int64_t n_min,
                           std::int64_t n_max, int threads = 1);

/// Reactions k with x + xi_k in A for some window member x of the set.
std::optional<std::int64_t> absorption_zeta(const Decomposition& decomp, int set_id);

/// sum_k lambda_k(x) <v, xi_k>
double generator_W(const ReactionNetwork& net, const IntVector& v, const State& x);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least squares of log d_lower on log n over the upper half of the defined entries.
/// nullopt if any of those d_lower values is not positive or fewer than 2 remain.
std::optional<LogLogFit> loglog_fit(const DriftProfile& profile);

struct VCertificate {
  enum class Verdict { Pass, Fail, Inconclusive };

  IntVector v;
  std::optional<double> eta;
  std::optional<std::int64_t> threshold_N;
  std::optional<LogLogFit> fit;
  Verdict verdict = Verdict::Inconclusive;
  char failed_clause = 0;  // 'a' or 'b' on Fail
  std::string reason;
  /// d_lower(n) > zeta d_upper(n) / n on the fitted entries (almost sure absorption evidence).
  bool absorption_evidence = false;

  bool passed() const { return verdict == Verdict::Pass; }
};

const char* to_string(VCertificate::Verdict verdict);

/// {2^-6, ..., 2^0}
std::vector<double> default_eta_grid();

/// Clause (a) at a fixed (eta, N): d_lower >= eta d_upper on every defined entry with n >= N.
bool clause_a(const DriftProfile& profile, double eta, std::int64_t N);

/// Throws InconclusiveError with fewer than 6 defined entries.
VCertificate certify_profile(const DriftProfile& profile, std::vector<double> eta_grid);

VCertificate certify_v(const Decomposition& decomp, int set_id,
                       const std::vector<double>& eta_grid, std::int64_t n_min,
                       std::int64_t n_max, int threads = 1);

/// certify_v for every v in {1..v_max}^d, lexicographic, passes first. Each v gets its own
/// window with level_cap = n_max + slack; the set is followed through its least member.
std::vector<VCertificate> search_v(const Decomposition& decomp, int set_id, int v_max,
                                   const std::vector<double>& eta_grid, std::int64_t n_min,
                                   std::int64_t n_max, int threads = 1);

struct LyapunovPair {
  IntVector v;
  double alpha = 2.0;
  double beta = 2.0;
};

void validate(const LyapunovPair& pair);

/// sum_{j > m} j^-beta, Euler-Maclaurin tail with remainder below 1e-12.
double zeta_tail(double beta, std::int64_t m);

/// 1_E(x) sum_{j=1}^{<v,x>} j^-alpha with E the given set of decomp.
double lyapunov_V(const Decomposition& decomp, int set_id, const LyapunovPair& pair,
                  const State& x);
/// 1_E(x) sum_{j > <v,x>} j^-beta
double lyapunov_phi(const Decomposition& decomp, int set_id, const LyapunovPair& pair,
                    const State& x);

/// Lf(x) = sum_k lambda_k(x) (f(x + xi_k) - f(x)) for f = V or phi.
double generator_V(const Decomposition& decomp, int set_id, const LyapunovPair& pair,
                   const State& x);
double generator_phi(const Decomposition& decomp, int set_id, const LyapunovPair& pair,
                     const State& x);

struct LyapunovDiagnostics {
  double max_V = 0.0;
  double V_bound = 0.0;  // alpha / (alpha - 1)
  double min_phi = 0.0;
  bool bounded = false;  // (a)
  /// Smallest n such that L phi >= 0 on every set state with level in [n, n_max]. (b)
  std::optional<std::int64_t> phi_threshold;
  /// Smallest n such that LV + V^{1+eps} / phi^eps <= 0 on levels [n, n_max]. (c)
  std::optional<std::int64_t> V_threshold;
  double epsilon = 0.5;
};

LyapunovDiagnostics lyapunov_diagnostics(const Decomposition& decomp, int set_id,
                                         const LyapunovPair& pair, std::int64_t n_max,
                                         double epsilon = 0.5);

}  // namespace qsdkit
