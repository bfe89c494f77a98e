#include "qsdkit/ssa.hpp"

#include "parallel.hpp"
#include "qsdkit/errors.hpp"

#include <cmath>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <unordered_set>

namespace qsdkit {

std::optional<Step> step(const ReactionNetwork& net, const State& x, Philox4x32& rng) {
  double rates[64];
  std::vector<double> heap;
  double* lambda = rates;
  if (net.r() > 64) {
    heap.resize(static_cast<std::size_t>(net.r()));
    lambda = heap.data();
  }
  double total = 0.0;
  for (int k = 0; k < net.r(); ++k) {
    lambda[k] = intensity(net, k, x);
    total += lambda[k];
  }
  if (total <= 0.0) return std::nullopt;
  Step s;
  s.dt = rng.exponential(total);
  double u = rng.uniform() * total;
  int last = 0;
  double acc = 0.0;
  for (int k = 0; k < net.r(); ++k) {
    if (lambda[k] <= 0.0) continue;
    last = k;
    acc += lambda[k];
    if (u < acc) {
      s.k = k;
      return s;
    }
  }
  s.k = last;
  return s;
}

struct AbsorptionOracle::Impl {
  ReactionNetwork net;
  IntVector v;
  std::int64_t margin;
  std::int64_t base;
  SiphonTest siphons;
  mutable std::shared_mutex mutex;
  mutable std::unordered_map<State, StateClass::Kind, StateHash, StateEqual> memo;

  Impl(const ReactionNetwork& n, IntVector w, std::int64_t m)
      : net(n),
        v(std::move(w)),
        margin(m),
        base(level(v, n.max_source()) + window_slack(n, v)),
        siphons(n) {}

  std::optional<StateClass::Kind> cached(const State& x) const {
    std::shared_lock lock(mutex);
    auto it = memo.find(x);
    if (it == memo.end()) return std::nullopt;
    return it->second;
  }

  StateClass::Kind search(const State& x) const {
    using Kind = StateClass::Kind;
    const State& M = net.max_source();
    if (dominates(x, M)) return Kind::Endorsed;
    if (siphons.excludes(x)) return Kind::Absorbing;
    const std::int64_t bound = std::max(level(v, x), base) + margin;
    std::unordered_set<State, StateHash, StateEqual> seen{x};
    std::deque<State> queue{x};
    bool truncated = false;
    bool unknown_hit = false;
    while (!queue.empty()) {
      State y = std::move(queue.front());
      queue.pop_front();
      if (dominates(y, M)) return Kind::Endorsed;
      if (siphons.excludes(y)) continue;
      if (!(y == x)) {
        if (auto c = cached(y)) {
          if (*c == Kind::Endorsed) return Kind::Endorsed;
          if (*c == Kind::Absorbing) continue;
          unknown_hit = true;
        }
      }
      for (int k = 0; k < net.r(); ++k) {
        if (!admissible(net, k, y)) continue;
        State z = y + net.xi(k);
        if (level(v, z) > bound) {
          truncated = true;
          continue;
        }
        if (seen.insert(z).second) queue.push_back(std::move(z));
      }
    }
    if (truncated || unknown_hit) return Kind::Unknown;
    // everything reached from x is absorbing as well
    std::unique_lock lock(mutex);
    for (const auto& y : seen) memo.emplace(y, Kind::Absorbing);
    return Kind::Absorbing;
  }
};

AbsorptionOracle::AbsorptionOracle(const ReactionNetwork& net, IntVector v, std::int64_t margin) {
  if (v.size() != net.d() || (v.array() < 1).any()) throw PreconditionError("v entries must be >= 1");
  if (margin < 0) throw PreconditionError("negative margin");
  impl_ = std::make_unique<Impl>(net, std::move(v), margin);
}

AbsorptionOracle::AbsorptionOracle(const ReactionNetwork& net)
    : AbsorptionOracle(net, IntVector::Ones(net.d())) {}

AbsorptionOracle::~AbsorptionOracle() = default;
AbsorptionOracle::AbsorptionOracle(AbsorptionOracle&&) noexcept = default;

StateClass::Kind AbsorptionOracle::classify(const State& x) const {
  if (x.size() != impl_->net.d() || !nonnegative(x)) throw PreconditionError("invalid state");
  if (auto c = impl_->cached(x)) return *c;
  auto kind = impl_->search(x);
  std::unique_lock lock(impl_->mutex);
  impl_->memo.emplace(x, kind);
  return kind;
}

const IntVector& AbsorptionOracle::v() const { return impl_->v; }

std::size_t AbsorptionOracle::memo_size() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->memo.size();
}

const char* to_string(Trajectory::Stop stop) {
  switch (stop) {
    case Trajectory::Stop::TMax: return "t_max";
    case Trajectory::Stop::Halt: return "halt";
    case Trajectory::Stop::Absorbed: return "absorbed";
    case Trajectory::Stop::Guard: return "guard";
  }
  return "?";
}

namespace {

template <typename OnJump>
PathEnd run(const ReactionNetwork& net, const State& x0, double t_max, Philox4x32& rng,
            std::int64_t guard, const AbsorptionOracle& oracle, OnJump&& on_jump) {
  if (x0.size() != net.d() || !nonnegative(x0)) throw PreconditionError("invalid initial state");
  if (!(t_max >= 0.0)) throw PreconditionError("t_max must be nonnegative");
  const IntVector& v = oracle.v();
  if (level(v, x0) > guard) throw PreconditionError("level_guard below the initial level");
  PathEnd end;
  end.state = x0;
  auto kind = oracle.classify(x0);
  if (kind == StateClass::Kind::Unknown) end.unknown_seen = true;
  if (kind == StateClass::Kind::Absorbing) {
    end.absorbed_at = 0.0;
    end.stop = Trajectory::Stop::Absorbed;
    return end;
  }
  for (;;) {
    auto s = step(net, end.state, rng);
    if (!s) {
      end.stop = Trajectory::Stop::Halt;
      end.t = t_max;
      return end;
    }
    if (end.t + s->dt > t_max) {
      end.t = t_max;
      end.stop = Trajectory::Stop::TMax;
      return end;
    }
    end.t += s->dt;
    end.state += net.xi(s->k);
    ++end.jumps;
    on_jump(end.t, end.state);
    kind = oracle.classify(end.state);
    if (kind == StateClass::Kind::Unknown) end.unknown_seen = true;
    if (kind == StateClass::Kind::Absorbing) {
      end.absorbed_at = end.t;
      end.stop = Trajectory::Stop::Absorbed;
      return end;
    }
    if (level(v, end.state) > guard) {
      end.stop = Trajectory::Stop::Guard;
      return end;
    }
  }
}

}  // namespace

PathEnd run_path(const ReactionNetwork& net, const State& x0, double t_max, Philox4x32& rng,
                 std::int64_t level_guard, const AbsorptionOracle& oracle) {
  return run(net, x0, t_max, rng, level_guard, oracle, [](double, const State&) {});
}

Trajectory simulate_path(const ReactionNetwork& net, const State& x0, double t_max,
                         SeedSpec seed, std::int64_t level_guard,
                         const AbsorptionOracle& oracle) {
  Philox4x32 rng(seed);
  Trajectory traj;
  traj.states.push_back(x0);
  auto end = run(net, x0, t_max, rng, level_guard, oracle, [&](double t, const State& x) {
    traj.jump_times.push_back(t);
    traj.states.push_back(x);
  });
  traj.absorbed_at = end.absorbed_at;
  traj.stop = end.stop;
  traj.t_end = end.absorbed_at ? *end.absorbed_at : end.t;
  traj.unknown_seen = end.unknown_seen;
  traj.final_class = oracle.classify(end.state);
  return traj;
}

EnsembleSummary ensemble(const ReactionNetwork& net, const State& x0, double t_max,
                         std::int64_t n_traj, std::uint64_t master_seed,
                         std::int64_t level_guard, const AbsorptionOracle& oracle,
                         int threads) {
  if (n_traj < 1) throw PreconditionError("n_traj must be >= 1");
  std::vector<PathEnd> ends(static_cast<std::size_t>(n_traj));
  detail::parallel_for(ends.size(), threads, [&](std::size_t i) {
    Philox4x32 rng({master_seed, static_cast<std::uint64_t>(i)});
    ends[i] = run_path(net, x0, t_max, rng, level_guard, oracle);
  });
  EnsembleSummary out;
  out.n_trajectories = n_traj;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& e : ends) {
    if (e.stop == Trajectory::Stop::Guard) ++out.level_cap_hits;
    if (e.unknown_seen) ++out.unknown_flags;
    if (!e.absorbed_at) continue;
    ++out.absorbed;
    sum += *e.absorbed_at;
    sum2 += *e.absorbed_at * *e.absorbed_at;
  }
  out.absorption_fraction = static_cast<double>(out.absorbed) / static_cast<double>(n_traj);
  if (out.absorbed > 0) {
    const double n = static_cast<double>(out.absorbed);
    const double mean = sum / n;
    out.extinction_time_mean = mean;
    const double var = out.absorbed > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
    out.extinction_time_stderr = std::sqrt(var / n);
    out.ci_low = mean - 1.96 * out.extinction_time_stderr;
    out.ci_high = mean + 1.96 * out.extinction_time_stderr;
  }
  return out;
}

}  // namespace qsdkit
