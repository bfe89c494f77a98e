#pragma once

#include "qsdkit/network.hpp"
#include "qsdkit/rng.hpp"
#include "qsdkit/statespace.hpp"
#include "qsdkit/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace qsdkit {

struct Step {
  double dt = 0.0;
  int k = 0;
};

/// One direct-method step. nullopt (Halt) when the total rate is zero.
std::optional<Step> step(const ReactionNetwork& net, const State& x, Philox4x32& rng);

/// Lazy, memoized Endorsed/Absorbing classification of single states by bounded forward
/// search. Thread safe; shared between trajectories.
class AbsorptionOracle {
 public:
  /// Searches up to max(<v,x>, <v,M>) + slack + margin.
  AbsorptionOracle(const ReactionNetwork& net, IntVector v, std::int64_t margin = 32);
  explicit AbsorptionOracle(const ReactionNetwork& net);
  ~AbsorptionOracle();
  AbsorptionOracle(AbsorptionOracle&&) noexcept;

  StateClass::Kind classify(const State& x) const;
  const IntVector& v() const;
  std::size_t memo_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Trajectory {
  enum class Stop { TMax, Halt, Absorbed, Guard };

  std::vector<double> jump_times;  // states[i+1] entered at jump_times[i]
  std::vector<State> states;
  std::optional<double> absorbed_at;
  StateClass::Kind final_class = StateClass::Kind::Unknown;
  Stop stop = Stop::TMax;
  double t_end = 0.0;
  bool unknown_seen = false;

  std::size_t jumps() const { return jump_times.size(); }
  const State& final_state() const { return states.back(); }
};

const char* to_string(Trajectory::Stop stop);

/// Runs until t_max, a halt, absorption or <v,x> > level_guard (v from the oracle).
Trajectory simulate_path(const ReactionNetwork& net, const State& x0, double t_max,
                         SeedSpec seed, std::int64_t level_guard,
                         const AbsorptionOracle& oracle);

/// Same stopping rules without recording the path. Reuses the caller's generator.
struct PathEnd {
  State state;
  double t = 0.0;
  std::optional<double> absorbed_at;
  Trajectory::Stop stop = Trajectory::Stop::TMax;
  bool unknown_seen = false;
  std::uint64_t jumps = 0;
};
PathEnd run_path(const ReactionNetwork& net, const State& x0, double t_max, Philox4x32& rng,
                 std::int64_t level_guard, const AbsorptionOracle& oracle);

struct EnsembleSummary {
  std::int64_t n_trajectories = 0;
  std::int64_t absorbed = 0;
  double absorption_fraction = 0.0;
  /// Over absorbed trajectories; 95% normal-approximation interval.
  std::optional<double> extinction_time_mean;
  double extinction_time_stderr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t level_cap_hits = 0;
  std::int64_t unknown_flags = 0;
};

/// n_traj paths with stream indices 0..n_traj-1. Bitwise independent of threads.
EnsembleSummary ensemble(const ReactionNetwork& net, const State& x0, double t_max,
                         std::int64_t n_traj, std::uint64_t master_seed,
                         std::int64_t level_guard, const AbsorptionOracle& oracle,
                         int threads = 1);

/// sum_k alpha_k z^{y_k} xi_k with continuous powers for PowerLaw kinetics.
Eigen::VectorXd deterministic_field(const ReactionNetwork& net, const Eigen::VectorXd& z);
Eigen::MatrixXd deterministic_jacobian(const ReactionNetwork& net, const Eigen::VectorXd& z);

struct FixedPointOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
};

/// Damped Newton on the field. ConvergenceError on non-convergence or a singular Jacobian.
Eigen::VectorXd find_fixed_point(const ReactionNetwork& net, const Eigen::VectorXd& z0,
                                 FixedPointOptions options = {});

}  // namespace qsdkit
