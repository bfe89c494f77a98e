#include "qsdkit/statespace.hpp"

#include "qsdkit/errors.hpp"

#include <boost/property_map/property_map.hpp>
#include <boost/graph/compressed_sparse_row_graph.hpp>
#include <boost/graph/strong_components.hpp>
#include <boost/pending/disjoint_sets.hpp>

#include <algorithm>
#include <deque>
#include <limits>
#include <unordered_set>

namespace qsdkit {

std::int64_t window_slack(const ReactionNetwork& net, const IntVector& v) {
  std::int64_t s = 0;
  for (int k = 0; k < net.r(); ++k) s = std::max(s, level(v, net.xi(k)));
  return s;
}

std::int64_t minimum_level_cap(const ReactionNetwork& net, const IntVector& v) {
  std::int64_t jump = std::numeric_limits<std::int64_t>::min();
  for (int k = 0; k < net.r(); ++k) jump = std::max(jump, level(v, net.xi(k)));
  return std::max<std::int64_t>(level(v, net.max_source()) + jump, 1);
}

void validate_window(const ReactionNetwork& net, const Window& w) {
  if (w.v.size() != net.d())
    throw WindowError("v has " + std::to_string(w.v.size()) + " entries, network has " +
                      std::to_string(net.d()) + " species");
  if ((w.v.array() < 1).any()) throw WindowError("v entries must be >= 1");
  const std::int64_t need = minimum_level_cap(net, w.v);
  if (w.level_cap < need)
    throw WindowError("level_cap " + std::to_string(w.level_cap) + " below required " + std::to_string(need));
}

Window default_window(const ReactionNetwork& net, std::int64_t level_cap) {
  return {IntVector::Ones(net.d()), level_cap};
}

bool in_region_R(const ReactionNetwork& net, const State& x) {
  for (int k = 0; k < net.r(); ++k)
    if (intensity(net, k, x) <= 0.0) return false;
  return true;
}

const char* to_string(StateClass::Kind kind) {
  switch (kind) {
    case StateClass::Kind::Endorsed: return "endorsed";
    case StateClass::Kind::Absorbing: return "absorbing";
    case StateClass::Kind::Unknown: return "unknown";
  }
  return "?";
}

// ---- SiphonTest

SiphonTest::SiphonTest(const ReactionNetwork& net) {
  const int d = net.d();
  for (int k = 0; k < net.r(); ++k) {
    std::uint32_t in = 0, out = 0;
    for (int i = 0; i < d; ++i) {
      if (net.reaction(k).source[i] > 0) in |= 1u << i;
      if (net.reaction(k).product[i] > 0) out |= 1u << i;
    }
    source_mask_.push_back(in);
    product_mask_.push_back(out);
  }
  for (int i = 0; i < d; ++i)
    if (net.max_source()[i] > 0) needed_ |= 1u << i;
  closed_.assign(std::size_t{1} << d, 0);
  for (std::uint32_t zeros = 0; zeros < closed_.size(); ++zeros)
    if (zeros & needed_) closed_[zeros] = (largest_siphon(zeros) & needed_) != 0;
}

std::uint32_t SiphonTest::largest_siphon(std::uint32_t zeros) const {
  std::uint32_t z = zeros;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < source_mask_.size(); ++k) {
      // a reaction that fires on the face and refills part of it breaks closure
      if ((source_mask_[k] & z) == 0 && (product_mask_[k] & z) != 0) {
        z &= ~product_mask_[k];
        changed = true;
      }
    }
  }
  return z;
}

bool SiphonTest::excludes(const State& x) const {
  std::uint32_t zeros = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] == 0) zeros |= 1u << i;
  return closed_[zeros] != 0;
}

// ---- StateSpace

StateSpace::StateSpace(const ReactionNetwork& net, IntVector v, std::int64_t bound)
    : v_(std::move(v)), bound_(bound), r_(net.r()) {
  const Eigen::Index d = v_.size();
  if (bound_ < 0) throw WindowError("negative level bound");

  std::uint64_t space = 1;
  radix_.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    radix_[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(bound_ / v_[i]) + 1;
    if (__builtin_mul_overflow(space, radix_[static_cast<std::size_t>(i)], &space))
      throw WindowError("window too large to index");
  }

  // lexicographic odometer over {x >= 0 : <v,x> <= bound}
  std::vector<std::int64_t> flat;
  State x = State::Zero(d);
  std::int64_t lvl = 0;
  for (;;) {
    if (levels_.size() >= kMaxStates)
      throw WindowError("window holds more than " + std::to_string(kMaxStates) + " states");
    flat.insert(flat.end(), x.data(), x.data() + d);
    levels_.push_back(lvl);
    Eigen::Index i = d - 1;
    for (; i >= 0; --i) {
      if (lvl + v_[i] <= bound_) {
        ++x[i];
        lvl += v_[i];
        break;
      }
      lvl -= v_[i] * x[i];
      x[i] = 0;
    }
    if (i < 0) break;
  }
  states_ = Eigen::Map<IntMatrix>(flat.data(), d, static_cast<Eigen::Index>(levels_.size()));

  const std::int32_t n = size();
  use_dense_ = space <= (std::uint64_t{1} << 24);
  if (use_dense_) {
    dense_.assign(space, -1);
    for (std::int32_t s = 0; s < n; ++s) dense_[code(states_.col(s))] = s;
  } else {
    sparse_.reserve(static_cast<std::size_t>(n));
    for (std::int32_t s = 0; s < n; ++s) sparse_.emplace(code(states_.col(s)), s);
  }

  jumps_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(r_), kNoJump);
  std::vector<std::int64_t> dlevel(static_cast<std::size_t>(r_));
  for (int k = 0; k < r_; ++k) dlevel[static_cast<std::size_t>(k)] = qsdkit::level(v_, net.xi(k));
  for (std::int32_t s = 0; s < n; ++s) {
    const auto xs = states_.col(s);
    for (int k = 0; k < r_; ++k) {
      if (!dominates(xs, net.reaction(k).source)) continue;
      auto& slot = jumps_[static_cast<std::size_t>(s) * static_cast<std::size_t>(r_) +
                          static_cast<std::size_t>(k)];
      if (levels_[static_cast<std::size_t>(s)] + dlevel[static_cast<std::size_t>(k)] > bound_) {
        slot = kLeaves;
      } else {
        slot = *index_of(xs + net.xi(k));
      }
    }
  }

  level_offset_.assign(static_cast<std::size_t>(bound_) + 2, 0);
  for (auto l : levels_) ++level_offset_[static_cast<std::size_t>(l) + 1];
  for (std::size_t l = 1; l < level_offset_.size(); ++l) level_offset_[l] += level_offset_[l - 1];
  by_level_.resize(levels_.size());
  std::vector<std::size_t> fill(level_offset_.begin(), level_offset_.end() - 1);
  for (std::int32_t s = 0; s < n; ++s)
    by_level_[fill[static_cast<std::size_t>(levels_[static_cast<std::size_t>(s)])]++] = s;
}

std::uint64_t StateSpace::code(const State& x) const {
  std::uint64_t c = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    c = c * radix_[static_cast<std::size_t>(i)] + static_cast<std::uint64_t>(x[i]);
  return c;
}

std::optional<std::int32_t> StateSpace::index_of(const State& x) const {
  if (x.size() != v_.size() || !nonnegative(x) || qsdkit::level(v_, x) > bound_) return std::nullopt;
  const std::uint64_t c = code(x);
  if (use_dense_) {
    const std::int32_t s = dense_[c];
    if (s < 0) return std::nullopt;
    return s;
  }
  auto it = sparse_.find(c);
  if (it == sparse_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::int32_t> StateSpace::level(std::int64_t n) const {
  if (n < 0 || n > bound_) return {};
  return {by_level_.begin() + static_cast<std::ptrdiff_t>(level_offset_[static_cast<std::size_t>(n)]),
          by_level_.begin() +
              static_cast<std::ptrdiff_t>(level_offset_[static_cast<std::size_t>(n) + 1])};
}

// ---- Decomposition

Decomposition::Decomposition(const ReactionNetwork& net, const Window& window)
    : net_(net),
      window_((validate_window(net, window), window)),
      slack_(window_slack(net, window.v)),
      space_(net, window.v, window.level_cap + slack_),
      siphons_(net) {
  classify_all();
  partition();
  condense();
}

void Decomposition::classify_all() {
  const std::int32_t n = space_.size();
  const int r = net_.r();

  std::vector<std::int32_t> offset(static_cast<std::size_t>(n) + 1, 0);
  for (std::int32_t s = 0; s < n; ++s)
    for (int k = 0; k < r; ++k)
      if (auto t = space_.jump(s, k); t >= 0) ++offset[static_cast<std::size_t>(t) + 1];
  for (std::size_t i = 1; i < offset.size(); ++i) offset[i] += offset[i - 1];
  std::vector<std::int32_t> pred(static_cast<std::size_t>(offset.back()));
  {
    std::vector<std::int32_t> fill(offset.begin(), offset.end() - 1);
    for (std::int32_t s = 0; s < n; ++s)
      for (int k = 0; k < r; ++k)
        if (auto t = space_.jump(s, k); t >= 0) pred[static_cast<std::size_t>(fill[t]++)] = s;
  }

  std::vector<char> closed_face(static_cast<std::size_t>(n), 0);
  for (std::int32_t s = 0; s < n; ++s)
    closed_face[static_cast<std::size_t>(s)] = siphons_.excludes(space_.state_copy(s));

  auto backward = [&](auto&& seed, const std::vector<char>* blocked) {
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    if (blocked) mark = *blocked;
    std::vector<std::int32_t> queue;
    for (std::int32_t s = 0; s < n; ++s)
      if (!mark[static_cast<std::size_t>(s)] && seed(s)) {
        mark[static_cast<std::size_t>(s)] = 1;
        queue.push_back(s);
      }
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::int32_t t = queue[head];
      for (auto p = offset[static_cast<std::size_t>(t)]; p < offset[static_cast<std::size_t>(t) + 1];
           ++p) {
        const std::int32_t s = pred[static_cast<std::size_t>(p)];
        if (!mark[static_cast<std::size_t>(s)]) {
          mark[static_cast<std::size_t>(s)] = 1;
          queue.push_back(s);
        }
      }
    }
    return mark;
  };

  const State& M = net_.max_source();
  const auto endorsed =
      backward([&](std::int32_t s) { return dominates(space_.state(s), M); }, nullptr);
  // a path to R that leaves the explored region must do so before entering a closed face
  auto escapes = backward(
      [&](std::int32_t s) {
        for (int k = 0; k < r; ++k)
          if (space_.jump(s, k) == StateSpace::kLeaves) return true;
        return false;
      },
      &closed_face);
  for (std::size_t i = 0; i < escapes.size(); ++i)
    if (closed_face[i]) escapes[i] = 0;

  class_.resize(static_cast<std::size_t>(n));
  for (std::int32_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    if (endorsed[i]) {
      class_[i] = StateClass::endorsed_in(-1);
    } else if (escapes[i]) {
      class_[i] = StateClass::unknown_state();
      if (space_.level_of(s) <= window_.level_cap) ++unknown_count_;
    } else {
      class_[i] = StateClass::absorbing_state();
    }
  }
}

void Decomposition::partition() {
  const std::int32_t n = space_.size();
  std::vector<std::size_t> rank(static_cast<std::size_t>(n)), parent(static_cast<std::size_t>(n));
  const boost::typed_identity_property_map<std::size_t> id;
  auto rank_map = boost::make_iterator_property_map(rank.begin(), id);
  auto parent_map = boost::make_iterator_property_map(parent.begin(), id);
  boost::disjoint_sets<decltype(rank_map), decltype(parent_map)> uf(rank_map, parent_map);
  for (std::size_t s = 0; s < parent.size(); ++s) uf.make_set(s);
  for (std::int32_t s = 0; s < n; ++s) {
    if (!class_[static_cast<std::size_t>(s)].endorsed()) continue;
    for (int k = 0; k < net_.r(); ++k) {
      const auto t = space_.jump(s, k);
      if (t >= 0 && class_[static_cast<std::size_t>(t)].endorsed()) uf.union_set(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
    }
  }

  std::vector<int> id_of_root(static_cast<std::size_t>(n), -1);
  for (std::int32_t s = 0; s < n; ++s) {
    auto& c = class_[static_cast<std::size_t>(s)];
    if (!c.endorsed() || space_.level_of(s) > window_.level_cap) continue;
    const auto root = static_cast<std::size_t>(uf.find_set(static_cast<std::size_t>(s)));
    if (id_of_root[root] < 0) {
      id_of_root[root] = static_cast<int>(sets_.size());
      sets_.push_back({id_of_root[root], {}, {}});
    }
    sets_[static_cast<std::size_t>(id_of_root[root])].members.push_back(space_.state_copy(s));
  }
  for (std::int32_t s = 0; s < n; ++s) {
    auto& c = class_[static_cast<std::size_t>(s)];
    if (c.endorsed()) c.set_id = id_of_root[static_cast<std::size_t>(uf.find_set(static_cast<std::size_t>(s)))];
  }

  std::vector<std::vector<std::int32_t>> neighbors(sets_.size());
  for (std::int32_t s = 0; s < n; ++s) {
    const auto& c = class_[static_cast<std::size_t>(s)];
    if (!c.endorsed() || c.set_id < 0 || space_.level_of(s) > window_.level_cap) continue;
    for (int k = 0; k < net_.r(); ++k) {
      const auto t = space_.jump(s, k);
      if (t >= 0 && class_[static_cast<std::size_t>(t)].absorbing())
        neighbors[static_cast<std::size_t>(c.set_id)].push_back(t);
    }
  }
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    auto& nb = neighbors[i];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (auto t : nb) sets_[i].absorbing_neighbors.push_back(space_.state_copy(t));
  }
}

void Decomposition::condense() {
  using Graph = boost::compressed_sparse_row_graph<boost::directedS>;
  const std::int32_t n = space_.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::int32_t s = 0; s < n; ++s)
    for (int k = 0; k < net_.r(); ++k)
      if (auto t = space_.jump(s, k); t >= 0 && t != s)
        edges.emplace_back(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
  Graph g(boost::edges_are_unsorted_multi_pass, edges.begin(), edges.end(),
          static_cast<std::size_t>(n));

  scc_.assign(static_cast<std::size_t>(n), 0);
  const auto count = static_cast<std::size_t>(boost::strong_components(
      g, boost::make_iterator_property_map(scc_.begin(), get(boost::vertex_index, g))));

  scc_leaves_.assign(count, 0);
  scc_out_.assign(count, {});
  scc_set_.assign(count, -1);
  scc_to_dag_.assign(count, -1);
  scc_marking_.assign(count, ClassDag::Marking::Unknown);
  auto& marking = scc_marking_;

  for (std::int32_t s = 0; s < n; ++s) {
    const auto c = static_cast<std::size_t>(scc_[static_cast<std::size_t>(s)]);
    const auto& cls = class_[static_cast<std::size_t>(s)];
    marking[c] = cls.endorsed()    ? ClassDag::Marking::Endorsed
                 : cls.absorbing() ? ClassDag::Marking::Absorbing
                                   : ClassDag::Marking::Unknown;
    if (cls.endorsed()) scc_set_[c] = cls.set_id;
    for (int k = 0; k < net_.r(); ++k) {
      const auto t = space_.jump(s, k);
      if (t == StateSpace::kLeaves) scc_leaves_[c] = 1;
      if (t >= 0 && scc_[static_cast<std::size_t>(t)] != static_cast<std::int32_t>(c))
        scc_out_[c].push_back(scc_[static_cast<std::size_t>(t)]);
    }
  }
  for (auto& out : scc_out_) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  // dag classes: components meeting the window, ordered by least member
  for (std::int32_t s = 0; s < n; ++s) {
    if (space_.level_of(s) > window_.level_cap) continue;
    const auto c = static_cast<std::size_t>(scc_[static_cast<std::size_t>(s)]);
    if (scc_to_dag_[c] < 0) {
      scc_to_dag_[c] = static_cast<std::int32_t>(dag_.classes.size());
      dag_.classes.emplace_back();
      dag_.marking.push_back(marking[c]);
    }
    dag_.classes[static_cast<std::size_t>(scc_to_dag_[c])].push_back(space_.state_copy(s));
  }
  for (std::size_t c = 0; c < count; ++c) {
    if (scc_to_dag_[c] < 0) continue;
    for (auto t : scc_out_[c])
      if (scc_to_dag_[static_cast<std::size_t>(t)] >= 0)
        dag_.edges.emplace_back(scc_to_dag_[c], scc_to_dag_[static_cast<std::size_t>(t)]);
  }
  std::sort(dag_.edges.begin(), dag_.edges.end());
}

const EndorsedSet& Decomposition::set(int id) const {
  if (id < 0 || id >= set_count()) throw PreconditionError("unknown set id " + std::to_string(id));
  return sets_[static_cast<std::size_t>(id)];
}

StateClass Decomposition::classify(const State& x) const {
  if (x.size() != net_.d() || !nonnegative(x)) throw WindowError("invalid state " + to_string(x));
  if (level(window_.v, x) > window_.level_cap)
    throw WindowError("state " + to_string(x) + " lies outside the window");
  return class_[static_cast<std::size_t>(*space_.index_of(x))];
}

std::optional<StateClass> Decomposition::lookup(const State& x) const {
  auto s = space_.index_of(x);
  if (!s) return std::nullopt;
  return class_[static_cast<std::size_t>(*s)];
}

std::optional<int> Decomposition::set_with_anchor(const State& x) const {
  for (const auto& s : sets_)
    if (!s.members.empty() && s.members.front() == x) return s.id;
  return std::nullopt;
}

MinimalClassReport Decomposition::minimal_class(int set_id) const {
  const EndorsedSet& es = set(set_id);
  MinimalClassReport rep;
  rep.set_id = set_id;
  rep.has_absorbing_neighbors = !es.absorbing_neighbors.empty();

  std::vector<std::size_t> minimal;
  for (std::size_t c = 0; c < scc_set_.size(); ++c) {
    if (scc_set_[c] != set_id) continue;
    bool to_endorsed = false;
    bool to_unknown = false;
    for (auto t : scc_out_[c]) {
      const auto u = static_cast<std::size_t>(t);
      if (scc_marking_[u] == ClassDag::Marking::Endorsed) to_endorsed = true;
      if (scc_marking_[u] == ClassDag::Marking::Unknown) to_unknown = true;
    }
    if (scc_leaves_[c] || to_unknown) rep.window_limited = true;
    if (to_endorsed || scc_to_dag_[c] < 0) continue;
    // an unknown successor may well be endorsed, so such a class is not counted
    if (to_unknown) {
      ++rep.uncertain_count;
    } else {
      minimal.push_back(c);
    }
  }

  rep.minimal_count = static_cast<int>(minimal.size());
  for (auto c : minimal) {
    const auto& members = dag_.classes[static_cast<std::size_t>(scc_to_dag_[c])];
    if (rep.sample.size() < 10) rep.sample.push_back(members.front());
  }
  if (minimal.size() == 1) {
    const auto c = minimal.front();
    rep.members = dag_.classes[static_cast<std::size_t>(scc_to_dag_[c])];
    for (auto t : scc_out_[c])
      if (scc_marking_[static_cast<std::size_t>(t)] == ClassDag::Marking::Absorbing)
        rep.edge_to_absorbing = true;
    rep.passes = rep.uncertain_count == 0 && (!rep.has_absorbing_neighbors || rep.edge_to_absorbing);
  }
  return rep;
}

Decomposition endorsed_partition(const ReactionNetwork& net, const Window& window) {
  return Decomposition(net, window);
}

ClassDag condensation(const ReactionNetwork& net, const Window& window) {
  return Decomposition(net, window).dag();
}

MinimalClassReport check_assumption_class(const Decomposition& decomp, int set_id) {
  return decomp.minimal_class(set_id);
}

StateClass classify_state(const Decomposition& decomp, const State& x) {
  return decomp.classify(x);
}

StateClass forward_reachability(const ReactionNetwork& net, const State& x, const IntVector& v,
                                std::int64_t bound) {
  if (x.size() != net.d() || !nonnegative(x)) throw WindowError("invalid state " + to_string(x));
  if (level(v, x) > bound) throw WindowError("state " + to_string(x) + " lies outside the bound");
  const State& M = net.max_source();
  SiphonTest siphons(net);
  std::unordered_set<State, StateHash, StateEqual> seen{x};
  std::deque<State> queue{x};
  bool truncated = false;
  while (!queue.empty()) {
    State y = std::move(queue.front());
    queue.pop_front();
    if (dominates(y, M)) return StateClass::endorsed_in(-1);
    if (siphons.excludes(y)) continue;
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
  return truncated ? StateClass::unknown_state() : StateClass::absorbing_state();
}

}  // namespace qsdkit
