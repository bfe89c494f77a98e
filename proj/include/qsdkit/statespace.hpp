#pragma once

#include "qsdkit/lattice.hpp"
#include "qsdkit/network.hpp"
#include "qsdkit/types.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace qsdkit {

struct Window {
  IntVector v;
  std::int64_t level_cap = 0;
};

/// max_k max(<v, xi_k>, 0)
std::int64_t window_slack(const ReactionNetwork& net, const IntVector& v);

/// Smallest level_cap accepted for v: <v, M> + max_k <v, xi_k>, and at least 1.
std::int64_t minimum_level_cap(const ReactionNetwork& net, const IntVector& v);

/// Throws WindowError unless v >= 1 entrywise and level_cap >= minimum_level_cap.
void validate_window(const ReactionNetwork& net, const Window& w);

Window default_window(const ReactionNetwork& net, std::int64_t level_cap);

bool in_region_R(const ReactionNetwork& net, const State& x);

struct StateClass {
  enum class Kind { Endorsed, Absorbing, Unknown };
  Kind kind = Kind::Unknown;
  int set_id = -1;  // only for Endorsed; -1 when the state lies outside every reported set

  bool endorsed() const { return kind == Kind::Endorsed; }
  bool absorbing() const { return kind == Kind::Absorbing; }
  bool unknown() const { return kind == Kind::Unknown; }

  static StateClass endorsed_in(int id) { return {Kind::Endorsed, id}; }
  static StateClass absorbing_state() { return {Kind::Absorbing, -1}; }
  static StateClass unknown_state() { return {Kind::Unknown, -1}; }
};

const char* to_string(StateClass::Kind kind);

/// Faces {x : x_i = 0 for i in Z} that no admissible jump leaves, with Z a siphon.
/// A face that misses R certifies its states as not endorsed without any search.
class SiphonTest {
 public:
  explicit SiphonTest(const ReactionNetwork& net);

  /// True if x lies on a closed face disjoint from R.
  bool excludes(const State& x) const;

  std::uint32_t largest_siphon(std::uint32_t zeros) const;

 private:
  std::vector<std::uint32_t> source_mask_;
  std::vector<std::uint32_t> product_mask_;
  std::uint32_t needed_ = 0;
  std::vector<char> closed_;  // indexed by zero pattern
};

/// All lattice points with <v,x> <= bound, in lexicographic order, with their jump graph.
class StateSpace {
 public:
  static constexpr std::int32_t kNoJump = -1;    // reaction not admissible
  static constexpr std::int32_t kLeaves = -2;    // target beyond the bound
  static constexpr std::size_t kMaxStates = 20'000'000;

  StateSpace(const ReactionNetwork& net, IntVector v, std::int64_t bound);

  std::int64_t bound() const { return bound_; }
  const IntVector& v() const { return v_; }
  std::int32_t size() const { return static_cast<std::int32_t>(levels_.size()); }

  auto state(std::int32_t i) const { return states_.col(i); }
  State state_copy(std::int32_t i) const { return states_.col(i); }
  std::int64_t level_of(std::int32_t i) const { return levels_[static_cast<std::size_t>(i)]; }

  std::optional<std::int32_t> index_of(const State& x) const;

  /// Target of reaction k from state i: an index, kNoJump or kLeaves.
  std::int32_t jump(std::int32_t i, int k) const {
    return jumps_[static_cast<std::size_t>(i) * static_cast<std::size_t>(r_) +
                  static_cast<std::size_t>(k)];
  }
  int reactions() const { return r_; }

  /// Indices of the states on level n, in lexicographic order.
  std::vector<std::int32_t> level(std::int64_t n) const;

 private:
  std::uint64_t code(const State& x) const;

  IntVector v_;
  std::int64_t bound_;
  int r_;
  IntMatrix states_;
  std::vector<std::int64_t> levels_;
  std::vector<std::int32_t> jumps_;
  std::vector<std::uint64_t> radix_;
  std::vector<std::int32_t> dense_;
  std::unordered_map<std::uint64_t, std::int32_t> sparse_;
  bool use_dense_ = true;
  std::vector<std::int32_t> by_level_;
  std::vector<std::size_t> level_offset_;
};

struct ClassDag {
  enum class Marking { Endorsed, Absorbing, Unknown };
  /// Members restricted to the window, lexicographic.
  std::vector<std::vector<State>> classes;
  std::vector<std::pair<int, int>> edges;
  std::vector<Marking> marking;
};

struct EndorsedSet {
  int id = 0;
  std::vector<State> members;  // window members, lexicographic
  std::vector<State> absorbing_neighbors;
};

struct MinimalClassReport {
  int set_id = 0;
  int minimal_count = 0;
  int uncertain_count = 0;  // sink candidates with a jump into Unknown states
  std::vector<State> sample;
  std::vector<State> members;  // of the minimal class, when unique
  bool edge_to_absorbing = false;
  bool has_absorbing_neighbors = false;
  bool window_limited = false;
  bool passes = false;
};

/// Classification, endorsed-set partition and condensation of one window.
class Decomposition {
 public:
  Decomposition(const ReactionNetwork& net, const Window& window);

  const ReactionNetwork& network() const { return net_; }
  const Window& window() const { return window_; }
  std::int64_t slack() const { return slack_; }
  const StateSpace& space() const { return space_; }

  const std::vector<EndorsedSet>& sets() const { return sets_; }
  const EndorsedSet& set(int id) const;
  int set_count() const { return static_cast<int>(sets_.size()); }

  /// Unknown states with <v,x> <= level_cap.
  std::int64_t unknown_count() const { return unknown_count_; }

  StateClass class_of(std::int32_t index) const { return class_[static_cast<std::size_t>(index)]; }

  /// Throws WindowError when <v,x> exceeds level_cap.
  StateClass classify(const State& x) const;
  /// Same lookup over the whole explored region (level_cap + slack); nullopt outside it.
  std::optional<StateClass> lookup(const State& x) const;

  /// Set whose least member is x, if any.
  std::optional<int> set_with_anchor(const State& x) const;

  const ClassDag& dag() const { return dag_; }
  MinimalClassReport minimal_class(int set_id) const;

 private:
  void classify_all();
  void partition();
  void condense();

  ReactionNetwork net_;
  Window window_;
  std::int64_t slack_;
  StateSpace space_;
  SiphonTest siphons_;
  std::vector<StateClass> class_;
  std::vector<EndorsedSet> sets_;
  std::int64_t unknown_count_ = 0;

  std::vector<std::int32_t> scc_;          // state -> component
  std::vector<std::int32_t> scc_to_dag_;   // component -> dag class or -1
  std::vector<char> scc_leaves_;           // component has a jump past the explored region
  std::vector<std::vector<std::int32_t>> scc_out_;  // distinct successor components
  std::vector<std::int32_t> scc_set_;      // endorsed set id per component or -1
  std::vector<ClassDag::Marking> scc_marking_;
  ClassDag dag_;
};

Decomposition endorsed_partition(const ReactionNetwork& net, const Window& window);
ClassDag condensation(const ReactionNetwork& net, const Window& window);
MinimalClassReport check_assumption_class(const Decomposition& decomp, int set_id);
StateClass classify_state(const Decomposition& decomp, const State& x);

/// Forward search from x alone, bounded at <v,y> <= level_cap + slack. Endorsed results carry
/// no set id.
StateClass forward_reachability(const ReactionNetwork& net, const State& x, const IntVector& v,
                                std::int64_t bound);

}  // namespace qsdkit
