#include "qsdkit/qsd.hpp"

#include "parallel.hpp"
#include "qsdkit/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <boost/graph/compressed_sparse_row_graph.hpp>
#include <boost/graph/strong_components.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace qsdkit {

double total_mass(const Distribution& p) {
  double s = 0.0;
  for (const auto& [x, w] : p) s += w;
  return s;
}

double tv_distance(const Distribution& p, const Distribution& q) {
  for (const auto* d : {&p, &q})
    if (std::fabs(total_mass(*d) - 1.0) > 1e-6) throw PreconditionError("distribution is not normalized");
  double s = 0.0;
  auto a = p.begin(), b = q.begin();
  LexLess less;
  while (a != p.end() || b != q.end()) {
    if (b == q.end() || (a != p.end() && less(a->first, b->first))) {
      s += std::fabs(a->second);
      ++a;
    } else if (a == p.end() || less(b->first, a->first)) {
      s += std::fabs(b->second);
      ++b;
    } else {
      s += std::fabs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return std::min(s, 2.0);
}

const char* to_string(QsdEstimate::Method method) {
  switch (method) {
    case QsdEstimate::Method::Truncation: return "truncation";
    case QsdEstimate::Method::FlemingViot: return "fleming_viot";
    case QsdEstimate::Method::Conditioned: return "conditioned";
    case QsdEstimate::Method::Stationary: return "stationary";
    case QsdEstimate::Method::Mixture: return "mixture";
  }
  return "?";
}

void fit_convergence(ConvergenceSeries& series) {
  series.fitted_gamma.reset();
  series.fit_r2.reset();
  std::vector<double> ts, ys;
  for (std::size_t i = series.times.size() / 2; i < series.times.size(); ++i)
    if (series.tv_values[i] > 0.0) {
      ts.push_back(series.times[i]);
      ys.push_back(std::log(series.tv_values[i]));
    }
  if (ts.size() < 3) return;
  const double n = static_cast<double>(ts.size());
  const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (stt == 0.0) return;
  const double slope = sty / stt;
  const double r2 = syy == 0.0 ? 1.0 : sty * sty / (stt * syy);
  series.fit_r2 = r2;
  if (r2 >= 0.9 && slope < 0.0) series.fitted_gamma = -slope;
}

namespace {

struct Truncation {
  std::vector<std::int32_t> index;  // state indices in the space, lexicographic
  std::vector<std::int32_t> local;  // space index -> position or -1
  Eigen::SparseMatrix<double> Qt;   // transpose of the generator
  Eigen::VectorXd leak;             // rate to A or past K
  double max_rate = 0.0;
};

Truncation build(const Decomposition& dec, int set_id, std::int64_t K, bool suppress_leaks) {
  if (K < 0) throw PreconditionError("K must be nonnegative");
  if (K > dec.window().level_cap)
    throw WindowError("K " + std::to_string(K) + " exceeds level_cap " +
                      std::to_string(dec.window().level_cap));
  dec.set(set_id);
  const auto& space = dec.space();
  const auto& net = dec.network();
  Truncation t;
  t.local.assign(static_cast<std::size_t>(space.size()), -1);
  for (std::int32_t i = 0; i < space.size(); ++i) {
    auto c = dec.class_of(i);
    if (c.endorsed() && c.set_id == set_id && space.level_of(i) <= K) {
      t.local[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(t.index.size());
      t.index.push_back(i);
    }
  }
  // index is in space order, which is lexicographic
  const auto n = static_cast<Eigen::Index>(t.index.size());
  if (n == 0) throw PreconditionError("empty truncation");
  t.leak = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  State x(net.d());
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::int32_t i = t.index[static_cast<std::size_t>(a)];
    x = space.state(i);
    double out = 0.0;
    for (int k = 0; k < net.r(); ++k) {
      const std::int32_t target = space.jump(i, k);
      if (target == StateSpace::kNoJump) continue;
      const double lambda = intensity(net, k, x);
      if (lambda == 0.0) continue;
      std::int32_t b = target >= 0 ? t.local[static_cast<std::size_t>(target)] : -1;
      if (b >= 0) {
        trip.emplace_back(b, a, lambda);
        out += lambda;
        continue;
      }
      if (target >= 0 && dec.class_of(target).unknown())
        throw UnknownStateError("neighbor " + to_string(space.state_copy(target)) + " is Unknown");
      const bool to_A = target >= 0 && dec.class_of(target).absorbing();
      if (suppress_leaks && !to_A) continue;
      out += lambda;
      t.leak[a] += lambda;
    }
    trip.emplace_back(a, a, -out);
    t.max_rate = std::max(t.max_rate, out);
  }
  t.Qt.resize(n, n);
  t.Qt.setFromTriplets(trip.begin(), trip.end());
  t.Qt.makeCompressed();
  return t;
}

// Dominant eigenvalue of an irreducible block of Q^T by shifted inverse iteration.
double block_eigenvalue(const Eigen::SparseMatrix<double>& B) {
  const auto n = B.rows();
  if (n == 1) return B.coeff(0, 0);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::fabs(B.coeff(i, i)));
  const double shift = 1e-9 * scale;
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  Eigen::SparseMatrix<double> S = B - shift * I;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw ConvergenceError("block solve failed");
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 10'000; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    y /= y.sum();
    const double change = (y - x).lpNorm<1>();
    x = std::move(y);
    if (change < 1e-12) break;
  }
  return (B * x).sum() / x.sum();
}

// States carrying the dominant left eigenvector. A chain of blocks sharing the top decay rate
// makes that eigenvalue defective on the whole truncation; downstream of the last such block
// it is semisimple and the upstream part of the eigenvector vanishes.
struct Support {
  std::vector<char> keep;
  int terminal_blocks = 1;
};

Support dominant_support(const Truncation& t) {
  const auto n = static_cast<std::size_t>(t.index.size());
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (Eigen::Index a = 0; a < t.Qt.outerSize(); ++a)
    for (Eigen::SparseMatrix<double>::InnerIterator e(t.Qt, a); e; ++e)
      if (e.row() != a && e.value() > 0.0)
        edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(e.row()));
  using Graph = boost::compressed_sparse_row_graph<boost::directedS>;
  Graph g(boost::edges_are_unsorted_multi_pass, edges.begin(), edges.end(), n);
  std::vector<std::size_t> comp(n);
  const auto count = static_cast<std::size_t>(boost::strong_components(
      g, boost::make_iterator_property_map(comp.begin(), get(boost::vertex_index, g))));
  if (count == 1) return {std::vector<char>(n, 1), 1};

  std::vector<std::vector<Eigen::Index>> members(count);
  for (std::size_t a = 0; a < n; ++a) members[comp[a]].push_back(static_cast<Eigen::Index>(a));
  std::vector<std::vector<std::size_t>> succ(count);
  for (auto [a, b] : edges)
    if (comp[a] != comp[b]) succ[comp[a]].push_back(comp[b]);

  std::vector<double> lambda(count);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    const auto& m = members[c];
    std::vector<Eigen::Index> local(n, -1);
    for (std::size_t i = 0; i < m.size(); ++i) local[static_cast<std::size_t>(m[i])] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (Eigen::SparseMatrix<double>::InnerIterator e(t.Qt, m[i]); e; ++e)
        if (local[static_cast<std::size_t>(e.row())] >= 0)
          trip.emplace_back(local[static_cast<std::size_t>(e.row())], static_cast<Eigen::Index>(i), e.value());
    Eigen::SparseMatrix<double> B(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.size()));
    B.setFromTriplets(trip.begin(), trip.end());
    lambda[c] = block_eigenvalue(B);
    top = std::max(top, lambda[c]);
  }
  const double tol = 1e-8 * (1.0 + std::fabs(top));
  auto reach = [&](std::size_t from) {
    std::vector<char> seen(count, 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      auto c = stack.back();
      stack.pop_back();
      for (auto d : succ[c])
        if (!seen[d]) seen[d] = 1, stack.push_back(d);
    }
    return seen;
  };
  std::vector<char> keep_comp(count, 0);
  int terminal_blocks = 0;
  for (std::size_t c = 0; c < count; ++c) {
    if (lambda[c] < top - tol) continue;
    auto below = reach(c);
    bool terminal = true;
    for (std::size_t d = 0; d < count && terminal; ++d)
      if (d != c && below[d] && lambda[d] >= top - tol) terminal = false;
    if (!terminal) continue;
    ++terminal_blocks;
    for (std::size_t d = 0; d < count; ++d) keep_comp[d] |= below[d];
  }
  Support out;
  out.keep.resize(n);
  out.terminal_blocks = terminal_blocks;
  for (std::size_t a = 0; a < n; ++a) out.keep[a] = keep_comp[comp[a]];
  return out;
}

// The truncation cut down to the kept states; nothing flows from kept to dropped states.
Truncation restrict_to(const Truncation& t, const std::vector<char>& keep) {
  Truncation r;
  r.local.assign(t.local.size(), -1);
  std::vector<Eigen::Index> pos(t.index.size(), -1);
  for (std::size_t a = 0; a < t.index.size(); ++a)
    if (keep[a]) {
      pos[a] = static_cast<Eigen::Index>(r.index.size());
      r.local[static_cast<std::size_t>(t.index[a])] = static_cast<std::int32_t>(r.index.size());
      r.index.push_back(t.index[a]);
    }
  const auto m = static_cast<Eigen::Index>(r.index.size());
  r.leak = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index a = 0; a < t.Qt.outerSize(); ++a) {
    if (pos[static_cast<std::size_t>(a)] < 0) continue;
    r.leak[pos[static_cast<std::size_t>(a)]] = t.leak[a];
    for (Eigen::SparseMatrix<double>::InnerIterator e(t.Qt, a); e; ++e)
      if (pos[static_cast<std::size_t>(e.row())] >= 0)
        trip.emplace_back(pos[static_cast<std::size_t>(e.row())], pos[static_cast<std::size_t>(a)], e.value());
    r.max_rate = std::max(r.max_rate, -t.Qt.coeff(a, a));
  }
  r.Qt.resize(m, m);
  r.Qt.setFromTriplets(trip.begin(), trip.end());
  r.Qt.makeCompressed();
  return r;
}

double eigen_residual(const Truncation& t, const Eigen::VectorXd& nu) {
  return (t.Qt * nu + nu.dot(t.leak) * nu).lpNorm<1>();
}

// Inverse iteration shifted to the current decay rate. Near-ties between blocks make the
// unshifted iteration stall with a visible residual; a shift at theta separates them.
void refine(const Truncation& t, Eigen::VectorXd& nu) {
  const auto n = t.Qt.rows();
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  double best = eigen_residual(t, nu);
  for (int round = 0; round < 4 && best > 0.0; ++round) {
    const double theta = nu.dot(t.leak);
    Eigen::SparseMatrix<double> A = t.Qt + (theta * (1.0 + 1e-13)) * I;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) return;
    Eigen::VectorXd y = lu.solve(nu);
    if (lu.info() != Eigen::Success || !y.allFinite() || y.sum() == 0.0) return;
    y /= y.sum();
    if ((y.array() < -1e-12).any()) return;
    y = y.cwiseMax(0.0);
    y /= y.sum();
    const double r = eigen_residual(t, y);
    if (!(r < best)) return;
    best = r;
    nu = std::move(y);
  }
}

QsdEstimate finish(const Decomposition& dec, int set_id, const Truncation& t, Eigen::VectorXd nu) {
  nu = nu.cwiseMax(0.0);
  nu /= nu.sum();
  QsdEstimate est;
  est.set_id = set_id;
  est.truncation_size = static_cast<std::int64_t>(t.index.size());
  for (std::size_t a = 0; a < t.index.size(); ++a)
    if (nu[static_cast<Eigen::Index>(a)] > 0.0)
      est.probabilities.emplace(dec.space().state_copy(t.index[a]), nu[static_cast<Eigen::Index>(a)]);
  const double theta = nu.dot(t.leak);
  est.decay_theta = theta;
  est.eigenvalue = -theta;
  Eigen::VectorXd r = t.Qt * nu + theta * nu;
  est.residual = r.lpNorm<1>();
  return est;
}

}  // namespace

QsdEstimate truncation_oracle(const Decomposition& dec, int set_id, std::int64_t K,
                              TruncationOptions options) {
  auto full = build(dec, set_id, K, false);
  if (full.leak.sum() <= 0.0)
    throw PreconditionError("no killing on the truncation; use stationary_mode");
  const auto full_size = static_cast<std::int64_t>(full.index.size());
  auto t = restrict_to(full, dominant_support(full).keep);
  const auto n = static_cast<Eigen::Index>(t.index.size());
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  int it = 0;
  bool converged = false;
  if (options.solver == EigenSolver::Resolvent) {
    // inverse iteration: Q^T is a nonsingular M-matrix up to sign when killing is present.
    // A stalled run is shifted to a lower bound on theta (Collatz-Wielandt), which keeps the
    // dominant eigenvalue nearest the shift.
    const Eigen::SparseMatrix<double> I = [&] {
      Eigen::SparseMatrix<double> m(n, n);
      m.setIdentity();
      return m;
    }();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(t.Qt);
    if (lu.info() != Eigen::Success) throw ConvergenceError("killed generator is singular");
    double shift = 0.0;
    for (it = 1; it <= options.max_iterations; ++it) {
      Eigen::VectorXd y = lu.solve(nu);
      if (lu.info() != Eigen::Success || !y.allFinite()) throw ConvergenceError("resolvent solve failed");
      y /= y.sum();
      const double change = (y - nu).lpNorm<1>();
      nu = std::move(y);
      if (change < options.tolerance) {
        converged = true;
        break;
      }
      if (it % 100 == 0) {
        Eigen::VectorXd q = t.Qt * nu;
        double lower = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n && lower > shift; ++i)
          lower = nu[i] > 0.0 ? std::min(lower, -q[i] / nu[i]) : -1.0;
        lower -= 1e-10 * (1.0 + std::fabs(lower));
        if (lower > shift) {
          lu.compute(t.Qt + lower * I);
          if (lu.info() == Eigen::Success)
            shift = lower;
          else
            lu.compute(t.Qt + shift * I);
        }
      }
    }
  } else {
    const double Lambda = 1.01 * t.max_rate;
    for (it = 1; it <= options.max_iterations; ++it) {
      Eigen::VectorXd y = nu + (t.Qt * nu) / Lambda;
      y = y.cwiseMax(0.0);
      y /= y.sum();
      const double change = (y - nu).lpNorm<1>();
      nu = std::move(y);
      if (change < options.tolerance) {
        converged = true;
        break;
      }
    }
  }
  if (!converged)
    throw ConvergenceError("eigenvector iteration did not converge in " +
                           std::to_string(options.max_iterations) + " steps");
  nu = nu.cwiseMax(0.0);
  nu /= nu.sum();
  refine(t, nu);
  auto est = finish(dec, set_id, t, std::move(nu));
  est.method = QsdEstimate::Method::Truncation;
  est.K = K;
  est.iterations = it;
  est.truncation_size = full_size;
  return est;
}

QsdEstimate stationary_mode(const Decomposition& dec, int set_id, std::int64_t K) {
  if (!dec.set(set_id).absorbing_neighbors.empty())
    throw PreconditionError("set " + std::to_string(set_id) +
                            " has absorbing neighbours; use truncation_oracle");
  auto full = build(dec, set_id, K, true);
  const auto full_size = static_cast<std::int64_t>(full.index.size());
  // the law lives on the closed classes of the truncated chain
  auto support = dominant_support(full);
  if (support.terminal_blocks > 1)
    throw ConvergenceError("truncation at K=" + std::to_string(K) + " has " +
                           std::to_string(support.terminal_blocks) + " closed classes; stationary law not unique");
  auto t = restrict_to(full, support.keep);
  const auto n = static_cast<Eigen::Index>(t.index.size());
  Eigen::VectorXd nu;
  if (n == 1) {
    nu = Eigen::VectorXd::Ones(1);
  } else {
    // pi Q = 0 with the last balance equation replaced by sum(pi) = 1
    Eigen::SparseMatrix<double> A = t.Qt;
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator e(A, k); e; ++e)
        if (e.row() != n - 1) trip.emplace_back(e.row(), e.col(), e.value());
    for (Eigen::Index c = 0; c < n; ++c) trip.emplace_back(n - 1, c, 1.0);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ConvergenceError("stationary system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    nu = lu.solve(rhs);
    if (!nu.allFinite()) throw ConvergenceError("stationary solve failed");
  }
  auto est = finish(dec, set_id, t, std::move(nu));
  est.method = QsdEstimate::Method::Stationary;
  est.K = K;
  est.truncation_size = full_size;
  return est;
}

State sample(const Distribution& p, Philox4x32& rng) {
  if (p.empty()) throw PreconditionError("empty distribution");
  double u = rng.uniform() * total_mass(p);
  double acc = 0.0;
  for (const auto& [x, w] : p) {
    acc += w;
    if (u < acc) return x;
  }
  return std::prev(p.end())->first;
}

namespace {

QsdEstimate conditioned(const Decomposition& dec, int set_id, const Distribution* start,
                        const State* x0, const ConditionedOptions& opt) {
  dec.set(set_id);
  if (opt.n_traj < 1) throw PreconditionError("n_traj must be >= 1");
  if (!(opt.t_end >= 0.0)) throw PreconditionError("t_end must be nonnegative");
  auto check_member = [&](const State& x) {
    auto c = dec.lookup(x);
    if (!c || !c->endorsed() || c->set_id != set_id)
      throw PreconditionError("start state " + to_string(x) + " is not in set " + std::to_string(set_id));
  };
  if (x0) check_member(*x0);
  if (start)
    for (const auto& [x, w] : *start) check_member(x);
  const auto& net = dec.network();
  AbsorptionOracle oracle(net, dec.window().v);
  std::vector<PathEnd> ends(static_cast<std::size_t>(opt.n_traj));
  detail::parallel_for(ends.size(), opt.threads, [&](std::size_t i) {
    Philox4x32 rng({opt.seed, static_cast<std::uint64_t>(i)});
    State from = x0 ? *x0 : sample(*start, rng);
    ends[i] = run_path(net, from, opt.t_end, rng, opt.level_guard, oracle);
  });
  QsdEstimate est;
  est.set_id = set_id;
  est.method = QsdEstimate::Method::Conditioned;
  est.n_traj = opt.n_traj;
  est.t_end = opt.t_end;
  est.seed = opt.seed;
  std::int64_t guard = 0, unknown = 0;
  for (const auto& e : ends) {
    if (e.absorbed_at) continue;
    if (e.stop == Trajectory::Stop::Guard) {
      ++guard;
      continue;
    }
    if (e.unknown_seen) ++unknown;
    ++est.survivors;
    est.probabilities[e.state] += 1.0;
  }
  if (est.survivors == 0) throw ConvergenceError("no trajectory survived to t_end");
  for (auto& [x, w] : est.probabilities) w /= static_cast<double>(est.survivors);
  est.effective_samples = est.survivors;
  if (est.survivors < 100)
    est.warnings.push_back("only " + std::to_string(est.survivors) + " survivors");
  if (guard > 0) est.warnings.push_back(std::to_string(guard) + " trajectories hit the level guard");
  if (unknown > 0) est.warnings.push_back(std::to_string(unknown) + " trajectories visited Unknown states");
  return est;
}

}  // namespace

QsdEstimate conditioned_estimate(const Decomposition& dec, int set_id, const State& x0,
                                 const ConditionedOptions& options) {
  return conditioned(dec, set_id, nullptr, &x0, options);
}

QsdEstimate conditioned_estimate(const Decomposition& dec, int set_id, const Distribution& start,
                                 const ConditionedOptions& options) {
  if (std::fabs(total_mass(start) - 1.0) > 1e-6) throw PreconditionError("start law is not normalized");
  return conditioned(dec, set_id, &start, nullptr, options);
}

SupportReport support_check(const QsdEstimate& est, const MinimalClassReport& report) {
  if (est.set_id != report.set_id) throw PreconditionError("estimate and report are for different sets");
  std::set<State, LexLess> inside(report.members.begin(), report.members.end());
  SupportReport out;
  out.window_limited = report.window_limited;
  for (const auto& [x, w] : est.probabilities)
    if (!inside.count(x) && w > 0.0) {
      out.mass_outside += w;
      ++out.states_outside;
    }
  if (est.effective_samples > 0) {
    const double p = std::clamp(out.mass_outside, 0.0, 1.0);
    out.standard_error = std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(est.effective_samples)) /
                                   static_cast<double>(est.effective_samples));
    out.flagged = out.mass_outside > 3.0 * out.standard_error;
  } else {
    out.flagged = out.mass_outside > 1e-9;
  }
  return out;
}

QsdEstimate mixture_qsd(const std::map<int, QsdEstimate>& estimates, const std::map<int, double>& mu) {
  double total = 0.0;
  for (const auto& [id, w] : mu) {
    if (!(w >= 0.0)) throw PreconditionError("mu must be nonnegative");
    total += w;
    if (w > 0.0 && !estimates.count(id)) throw PreconditionError("no estimate for set " + std::to_string(id));
  }
  if (std::fabs(total - 1.0) > 1e-9) throw PreconditionError("mu does not sum to 1");
  QsdEstimate out;
  out.method = QsdEstimate::Method::Mixture;
  if (mu.size() == 1) out.set_id = mu.begin()->first;
  for (const auto& [id, w] : mu) {
    if (w == 0.0) continue;
    const auto& est = estimates.at(id);
    const double mass = total_mass(est.probabilities);
    for (const auto& [x, p] : est.probabilities) out.probabilities[x] += w * p / mass;
  }
  return out;
}

}  // namespace qsdkit
