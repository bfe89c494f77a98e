#include "qsdkit/report.hpp"

#include <cstdio>
#include <limits>

namespace qsdkit {

namespace {

std::string real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

Json big_json(const BigInt& x) {
  if (x <= std::numeric_limits<std::int64_t>::max() && x >= std::numeric_limits<std::int64_t>::min())
    return Json(static_cast<std::int64_t>(x));
  return Json(x.str());
}

Json states_json(const std::vector<State>& xs) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(to_json(x));
  return out;
}

}  // namespace

Json to_json(const State& x) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

Json to_json(const LatticeInfo& info) {
  Json basis = Json::array();
  for (Eigen::Index i = 0; i < info.hnf_basis.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < info.hnf_basis.cols(); ++j) row.push_back(big_json(info.hnf_basis(i, j)));
    basis.push_back(row);
  }
  return Json{{"rank", info.rank},
              {"hnf_basis", basis},
              {"abs_det", info.abs_det ? big_json(*info.abs_det) : Json(nullptr)},
              {"n_endorsed_asymptotic",
               info.n_endorsed_asymptotic ? big_json(*info.n_endorsed_asymptotic) : Json("infinite")},
              {"unimodular", info.unimodular}};
}

Json to_json(const MinimalClassReport& r) {
  return Json{{"set_id", r.set_id},
              {"minimal_count", r.minimal_count},
              {"uncertain_count", r.uncertain_count},
              {"members", states_json(r.members)},
              {"sample", states_json(r.sample)},
              {"edge_to_absorbing", r.edge_to_absorbing},
              {"has_absorbing_neighbors", r.has_absorbing_neighbors},
              {"window_limited", r.window_limited},
              {"passes", r.passes}};
}

Json to_json(const Decomposition& dec) {
  Json sets = Json::array();
  for (const auto& s : dec.sets())
    sets.push_back(Json{{"id", s.id},
                        {"size", s.members.size()},
                        {"least_member", to_json(s.members.front())},
                        {"members", states_json(s.members)},
                        {"absorbing_neighbors", states_json(s.absorbing_neighbors)}});
  return Json{{"window", {{"v", to_json(dec.window().v)}, {"level_cap", dec.window().level_cap}}},
              {"slack", dec.slack()},
              {"set_count", dec.set_count()},
              {"unknown_count", dec.unknown_count()},
              {"sets", sets}};
}

Json to_json(const VCertificate& c) {
  Json out{{"v", to_json(c.v)},
           {"eta", optional_json(c.eta)},
           {"N", c.threshold_N ? Json(*c.threshold_N) : Json(nullptr)},
           {"slope", c.fit ? Json(c.fit->slope) : Json(nullptr)},
           {"intercept", c.fit ? Json(c.fit->intercept) : Json(nullptr)},
           {"r2", c.fit ? Json(c.fit->r2) : Json(nullptr)},
           {"verdict", to_string(c.verdict)},
           {"reason", c.reason}};
  if (c.failed_clause) out["failed_clause"] = std::string(1, c.failed_clause);
  out["absorption_evidence"] = c.absorption_evidence;
  return out;
}

Json to_json(const DriftProfile& p) {
  return Json{{"v", to_json(p.v)},
              {"set_id", p.set_id},
              {"n_min", p.entries.empty() ? Json(nullptr) : Json(p.entries.front().n)},
              {"n_max", p.entries.empty() ? Json(nullptr) : Json(p.entries.back().n)},
              {"defined", p.defined_count()},
              {"zeta", p.zeta ? Json(*p.zeta) : Json(nullptr)}};
}

Json to_json(const EnsembleSummary& s) {
  return Json{{"n_trajectories", s.n_trajectories},
              {"absorbed", s.absorbed},
              {"absorption_fraction", s.absorption_fraction},
              {"extinction_time_mean", optional_json(s.extinction_time_mean)},
              {"extinction_time_stderr", s.extinction_time_stderr},
              {"ci95", s.extinction_time_mean ? Json{s.ci_low, s.ci_high} : Json(nullptr)},
              {"level_cap_hits", s.level_cap_hits},
              {"unknown_flags", s.unknown_flags}};
}

Json to_json(const QsdEstimate& e) {
  Json out{{"set_id", e.set_id}, {"method", to_string(e.method)}, {"support_size", e.probabilities.size()}};
  if (e.K) out["K"] = *e.K;
  if (e.particles) out["particles"] = *e.particles;
  if (e.n_traj) out["n_traj"] = *e.n_traj;
  if (e.t_end) out["t_end"] = *e.t_end;
  if (e.seed) out["seed"] = *e.seed;
  if (e.decay_theta) out["theta"] = *e.decay_theta;
  if (e.eigenvalue) out["eigenvalue"] = *e.eigenvalue;
  if (e.residual) out["residual"] = *e.residual;
  if (e.iterations) out["iterations"] = e.iterations;
  if (e.truncation_size) out["truncation_size"] = e.truncation_size;
  if (e.method == QsdEstimate::Method::Conditioned) out["survivors"] = e.survivors;
  if (e.method == QsdEstimate::Method::FlemingViot) out["absorptions"] = e.absorptions;
  out["warnings"] = e.warnings;
  return out;
}

Json to_json(const ConvergenceSeries& s) {
  return Json{{"points", s.times.size()},
              {"gamma", optional_json(s.fitted_gamma)},
              {"r2", optional_json(s.fit_r2)}};
}

Json to_json(const SupportReport& r) {
  return Json{{"mass_outside", r.mass_outside},
              {"standard_error", r.standard_error},
              {"states_outside", r.states_outside},
              {"flagged", r.flagged},
              {"window_limited", r.window_limited}};
}

void write_profile_csv(std::ostream& out, const DriftProfile& p) {
  out << "n,d_lower,d_upper\n";
  for (const auto& e : p.entries) {
    out << e.n << ',';
    if (e.d_lower) out << real(*e.d_lower);
    out << ',';
    if (e.d_upper) out << real(*e.d_upper);
    out << '\n';
  }
}

namespace {

void header(std::ostream& out, const char* first, const ReactionNetwork& net, const char* last) {
  if (first) out << first << ',';
  for (int i = 0; i < net.d(); ++i) out << (i ? "," : "") << net.species()[static_cast<std::size_t>(i)].name;
  if (last) out << ',' << last;
  out << '\n';
}

void row(std::ostream& out, const State& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? "," : "") << x[i];
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ReactionNetwork& net) {
  header(out, "t", net, "event");
  out << "0,";
  row(out, traj.states.front());
  out << ",start\n";
  for (std::size_t i = 0; i < traj.jump_times.size(); ++i) {
    out << real(traj.jump_times[i]) << ',';
    row(out, traj.states[i + 1]);
    out << ",jump\n";
  }
  out << real(traj.t_end) << ',';
  row(out, traj.final_state());
  out << ',' << (traj.stop == Trajectory::Stop::Halt ? "t_max" : to_string(traj.stop)) << '\n';
}

void write_distribution_csv(std::ostream& out, const Distribution& p, const ReactionNetwork& net) {
  header(out, nullptr, net, "prob");
  for (const auto& [x, w] : p) {
    row(out, x);
    out << ',' << real(w) << '\n';
  }
}

void write_series_csv(std::ostream& out, const ConvergenceSeries& s) {
  out << "t,tv\n";
  for (std::size_t i = 0; i < s.times.size(); ++i) out << real(s.times[i]) << ',' << real(s.tv_values[i]) << '\n';
}

}  // namespace qsdkit
