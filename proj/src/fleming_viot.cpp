#include "qsdkit/errors.hpp"
#include "qsdkit/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace qsdkit {

namespace {

// Complete binary tree of particle rates; parents are recomputed, never patched.
class RateTree {
 public:
  explicit RateTree(std::size_t n) : size_(1) {
    while (size_ < n) size_ *= 2;
    tree_.assign(2 * size_, 0.0);
  }
  void set(std::size_t i, double rate) {
    std::size_t p = size_ + i;
    tree_[p] = rate;
    for (p /= 2; p >= 1; p /= 2) tree_[p] = tree_[2 * p] + tree_[2 * p + 1];
  }
  double total() const { return tree_[1]; }
  // leaf whose cumulative interval holds u in [0, total)
  std::size_t find(double u) const {
    std::size_t p = 1;
    while (p < size_) {
      if (u < tree_[2 * p] || tree_[2 * p + 1] <= 0.0) {
        p = 2 * p;
      } else {
        u -= tree_[2 * p];
        p = 2 * p + 1;
      }
    }
    return p - size_;
  }

 private:
  std::size_t size_;
  std::vector<double> tree_;
};

double total_rate(const ReactionNetwork& net, const State& x) {
  double s = 0.0;
  for (int k = 0; k < net.r(); ++k) s += intensity(net, k, x);
  return s;
}

}  // namespace

FlemingViotResult fleming_viot(const Decomposition& dec, int set_id, const FlemingViotOptions& opt) {
  const auto& set = dec.set(set_id);
  const auto& net = dec.network();
  if (opt.particles < 2) throw PreconditionError("need at least 2 particles");
  if (!(opt.t_end > 0.0)) throw PreconditionError("t_end must be positive");
  std::vector<double> records = opt.record_times;
  std::sort(records.begin(), records.end());
  for (double t : records)
    if (t < 0.0 || t > opt.t_end) throw PreconditionError("record time outside [0, t_end]");
  const double avg_from = opt.average_from.value_or(opt.t_end / 2.0);
  if (avg_from < 0.0 || avg_from > opt.t_end) throw PreconditionError("average_from outside [0, t_end]");

  AbsorptionOracle oracle(net, dec.window().v);
  Philox4x32 rng({opt.seed, 0});
  const auto N = static_cast<std::size_t>(opt.particles);

  // compact ids for visited states, with particle counts and occupation integrals
  std::unordered_map<State, std::size_t, StateHash, StateEqual> ids;
  std::vector<State> states;
  std::vector<std::int64_t> count;
  std::vector<double> occupation, last_change;
  auto id_of = [&](const State& x) {
    auto [it, fresh] = ids.emplace(x, states.size());
    if (fresh) {
      states.push_back(x);
      count.push_back(0);
      occupation.push_back(0.0);
      last_change.push_back(0.0);
    }
    return it->second;
  };
  double t = 0.0;
  auto flush = [&](std::size_t s) {
    const double lo = std::max(last_change[s], avg_from);
    if (t > lo) occupation[s] += static_cast<double>(count[s]) * (t - lo);
    last_change[s] = t;
  };
  auto move = [&](std::size_t from, std::size_t to) {
    flush(from);
    flush(to);
    --count[from];
    ++count[to];
  };

  std::vector<std::size_t> where(N);
  RateTree rates(N);
  for (std::size_t i = 0; i < N; ++i) {
    State x = opt.start.empty() ? set.members.front() : sample(opt.start, rng);
    auto c = dec.lookup(x);
    if (!c || !c->endorsed() || c->set_id != set_id)
      throw PreconditionError("start state " + to_string(x) + " is not in set " + std::to_string(set_id));
    where[i] = id_of(x);
    ++count[where[i]];
    rates.set(i, total_rate(net, x));
  }

  FlemingViotResult out;
  std::size_t next_record = 0;
  auto snapshot = [&] {
    Distribution d;
    for (std::size_t s = 0; s < states.size(); ++s)
      if (count[s] > 0) d.emplace(states[s], static_cast<double>(count[s]) / static_cast<double>(N));
    return d;
  };
  std::int64_t absorptions = 0, unknown = 0;
  for (;;) {
    const double R = rates.total();
    if (!(R > 0.0)) {
      if (absorptions == 0 && t == 0.0)
        throw PreconditionError("every particle starts with zero total rate");
      // frozen cloud: nothing moves until t_end
    }
    const double dt = R > 0.0 ? rng.exponential(R) : opt.t_end;
    const double t_next = std::min(t + dt, opt.t_end);
    while (next_record < records.size() && records[next_record] <= t_next) {
      out.snapshots.push_back(snapshot());
      out.series.times.push_back(records[next_record]);
      ++next_record;
    }
    if (t + dt >= opt.t_end) {
      t = opt.t_end;
      break;
    }
    t += dt;
    const std::size_t i = rates.find(rng.uniform() * R);
    const State& x = states[where[i]];
    // reaction within the particle
    double u = rng.uniform() * total_rate(net, x), acc = 0.0;
    int k = -1;
    for (int j = 0; j < net.r(); ++j) {
      double l = intensity(net, j, x);
      if (l <= 0.0) continue;
      k = j;
      acc += l;
      if (u < acc) break;
    }
    State y = x + net.xi(k);
    const auto kind = oracle.classify(y);
    std::size_t target;
    if (kind == StateClass::Kind::Absorbing) {
      ++absorptions;
      std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(N - 1));
      if (j >= N - 1) j = N - 2;
      if (j >= i) ++j;
      target = where[j];
    } else {
      if (kind == StateClass::Kind::Unknown) ++unknown;
      target = id_of(y);
    }
    move(where[i], target);
    where[i] = target;
    rates.set(i, total_rate(net, states[target]));
  }
  for (std::size_t s = 0; s < states.size(); ++s) flush(s);

  QsdEstimate& est = out.estimate;
  est.set_id = set_id;
  est.method = QsdEstimate::Method::FlemingViot;
  est.particles = opt.particles;
  est.t_end = opt.t_end;
  est.seed = opt.seed;
  est.absorptions = absorptions;
  est.effective_samples = opt.particles;
  if (avg_from >= opt.t_end) {
    est.probabilities = snapshot();
  } else {
    const double norm = static_cast<double>(N) * (opt.t_end - avg_from);
    for (std::size_t s = 0; s < states.size(); ++s)
      if (occupation[s] > 0.0) est.probabilities.emplace(states[s], occupation[s] / norm);
  }
  if (unknown > 0) est.warnings.push_back(std::to_string(unknown) + " jumps into Unknown states");

  const Distribution final_measure = snapshot();
  for (const auto& snap : out.snapshots) out.series.tv_values.push_back(tv_distance(snap, final_measure));
  fit_convergence(out.series);
  return out;
}

}  // namespace qsdkit
