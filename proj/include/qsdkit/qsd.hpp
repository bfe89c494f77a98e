#pragma once

#include "qsdkit/network.hpp"
#include "qsdkit/rng.hpp"
#include "qsdkit/ssa.hpp"
#include "qsdkit/statespace.hpp"
#include "qsdkit/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qsdkit {

/// Probability table keyed by state, lexicographic.
using Distribution = std::map<State, double, LexLess>;

/// sum_x |p(x) - q(x)|, in [0, 2]. PreconditionError if either total is off 1 by more than 1e-6.
double tv_distance(const Distribution& p, const Distribution& q);

double total_mass(const Distribution& p);

struct QsdEstimate {
  enum class Method { Truncation, FlemingViot, Conditioned, Stationary, Mixture };

  int set_id = -1;
  Distribution probabilities;
  Method method = Method::Truncation;

  // parameters
  std::optional<std::int64_t> K;
  std::optional<std::int64_t> particles;
  std::optional<std::int64_t> n_traj;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;

  // truncation and stationary
  std::optional<double> decay_theta;
  std::optional<double> residual;    // l1 norm of nu Q + theta nu
  std::optional<double> eigenvalue;  // dominant eigenvalue of the truncated generator
  int iterations = 0;
  std::int64_t truncation_size = 0;

  // sampling estimators
  std::int64_t survivors = 0;        // conditioned
  std::int64_t effective_samples = 0;
  std::int64_t absorptions = 0;      // FV resampling events
  std::vector<std::string> warnings;
};

const char* to_string(QsdEstimate::Method method);

struct ConvergenceSeries {
  std::vector<double> times;
  std::vector<double> tv_values;
  std::optional<double> fitted_gamma;
  std::optional<double> fit_r2;
};

/// Least squares of log tv on t over the tail half of the series (zero values skipped).
/// gamma is reported only when r2 >= 0.9 and the slope is negative.
void fit_convergence(ConvergenceSeries& series);

enum class EigenSolver { Resolvent, Uniformized };

struct TruncationOptions {
  EigenSolver solver = EigenSolver::Resolvent;
  double tolerance = 1e-10;
  int max_iterations = 100'000;
};

/// Dominant left eigenvector of the killed generator on {x in set : <v,x> <= K}.
/// Jumps to A or past K count as killing. K must not exceed the window's level_cap.
QsdEstimate truncation_oracle(const Decomposition& decomp, int set_id, std::int64_t K,
                              TruncationOptions options = {});

/// Stationary law on the truncation of a set without absorbing neighbours; jumps past K are
/// suppressed. PreconditionError when the set has absorbing neighbours.
QsdEstimate stationary_mode(const Decomposition& decomp, int set_id, std::int64_t K);

struct FlemingViotOptions {
  std::int64_t particles = 1000;
  double t_end = 100.0;
  std::vector<double> record_times;
  std::uint64_t seed = 0;
  /// Start law; point mass at the set's least member when empty.
  Distribution start;
  /// The estimate is the occupation measure of the particle cloud over [average_from, t_end];
  /// nullopt means t_end / 2, and t_end gives the final empirical measure.
  std::optional<double> average_from;
};

struct FlemingViotResult {
  QsdEstimate estimate;
  ConvergenceSeries series;
  std::vector<Distribution> snapshots;  // at record_times
};

FlemingViotResult fleming_viot(const Decomposition& decomp, int set_id,
                               const FlemingViotOptions& options);

struct ConditionedOptions {
  double t_end = 50.0;
  std::int64_t n_traj = 10000;
  std::uint64_t seed = 0;
  std::int64_t level_guard = 1'000'000'000;
  int threads = 1;
};

/// Law of X_t given t < tau_A from x0.
QsdEstimate conditioned_estimate(const Decomposition& decomp, int set_id, const State& x0,
                                 const ConditionedOptions& options);
/// Same with X_0 drawn from start, one draw per trajectory on its own stream.
QsdEstimate conditioned_estimate(const Decomposition& decomp, int set_id,
                                 const Distribution& start, const ConditionedOptions& options);

/// Draws a state from p with one uniform.
State sample(const Distribution& p, Philox4x32& rng);

struct SupportReport {
  double mass_outside = 0.0;
  double standard_error = 0.0;
  bool flagged = false;
  bool window_limited = false;
  std::int64_t states_outside = 0;
};

SupportReport support_check(const QsdEstimate& estimate, const MinimalClassReport& report);

QsdEstimate mixture_qsd(const std::map<int, QsdEstimate>& estimates, const std::map<int, double>& mu);

}  // namespace qsdkit
