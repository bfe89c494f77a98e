#include "qsdkit/drift.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/lattice.hpp"
#include "qsdkit/network.hpp"
#include "qsdkit/qsd.hpp"
#include "qsdkit/report.hpp"
#include "qsdkit/ssa.hpp"
#include "qsdkit/statespace.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace qsdkit;

namespace {

enum Exit { kOk = 0, kParse = 2, kWindow = 3, kNoPass = 4, kRuntime = 5 };

struct Config {
  std::string command;
  std::string file;
  std::string v;
  std::int64_t cap = 0;
  std::string out = ".";
  int threads = 0;
  int set = -1;
  std::string x0;
  std::string n_range;
  std::string eta_grid;
  int v_max = 10;
  std::uint64_t seed = 0;
  double t_max = 100.0;
  std::int64_t n = 0;
  std::int64_t guard = 1'000'000;
  bool trajectory = false;
  std::string method = "oracle";
  std::string solver = "resolvent";
  std::int64_t K = 200;
  std::int64_t particles = 1000;
  double t_end = 0.0;
  std::string record;
  double average_from = -1.0;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T number(const std::string& s, const char* what) {
  T value{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || p != s.data() + s.size())
    throw PreconditionError(std::string("bad ") + what + " '" + s + "'");
  return value;
}

IntVector int_vector(const std::string& s, const char* what) {
  auto parts = split(s, ',');
  IntVector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number<std::int64_t>(parts[i], what);
  return v;
}

std::pair<std::int64_t, std::int64_t> range(const std::string& s) {
  auto parts = split(s, ':');
  if (parts.size() != 2) throw PreconditionError("range must be a:b, got '" + s + "'");
  return {number<std::int64_t>(parts[0], "range"), number<std::int64_t>(parts[1], "range")};
}

std::vector<double> reals(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(number<double>(p, what));
  return out;
}

// "a:b:step" or a comma list
std::vector<double> record_times(const std::string& s) {
  if (s.empty()) return {};
  auto parts = split(s, ':');
  if (parts.size() == 1) return reals(s, "record time");
  if (parts.size() != 3) throw PreconditionError("record times must be a:b:step or a list");
  double a = number<double>(parts[0], "record time"), b = number<double>(parts[1], "record time"),
         h = number<double>(parts[2], "record step");
  if (!(h > 0.0)) throw PreconditionError("record step must be positive");
  std::vector<double> out;
  for (std::int64_t i = 0; a + static_cast<double>(i) * h <= b + 1e-12; ++i)
    out.push_back(a + static_cast<double>(i) * h);
  return out;
}

int thread_count(const Config& c) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("QSDKIT_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

IntVector window_v(const Config& c, const ReactionNetwork& net) {
  if (c.v.empty()) return IntVector::Ones(net.d());
  return int_vector(c.v, "--v");
}

void write_file(const Config& c, const std::string& name, const std::string& text) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw Error("cannot write " + (dir / name).string());
  f << text;
}

template <typename Fn>
std::string capture(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

int pick_set(const Config& c, const Decomposition& dec) {
  if (c.set >= 0) {
    dec.set(c.set);
    return c.set;
  }
  if (!c.x0.empty()) {
    auto cls = dec.classify(int_vector(c.x0, "--x0"));
    if (!cls.endorsed()) throw PreconditionError("--x0 is not endorsed");
    return cls.set_id;
  }
  if (dec.set_count() == 0) throw PreconditionError("no endorsed set in the window");
  return 0;
}

void summary(Json j) { std::cout << j.dump() << std::endl; }

int cmd_classify(const Config& c, const ReactionNetwork& net) {
  Window w{window_v(c, net), c.cap > 0 ? c.cap : 30};
  Decomposition dec(net, w);
  Json minimal = Json::array();
  for (const auto& s : dec.sets()) minimal.push_back(to_json(check_assumption_class(dec, s.id)));
  Json lattice = to_json(lattice_info(net));
  write_file(c, "decomposition.json",
             Json{{"file", c.file}, {"lattice", lattice}, {"decomposition", to_json(dec)}, {"minimal_classes", minimal}}
                     .dump(2) + "\n");
  summary({{"command", "classify"},
           {"file", c.file},
           {"window", {{"v", to_json(w.v)}, {"level_cap", w.level_cap}}},
           {"set_count", dec.set_count()},
           {"unknown_count", dec.unknown_count()},
           {"abs_det", lattice["abs_det"]},
           {"outputs", {"decomposition.json"}}});
  return kOk;
}

int cmd_drift(const Config& c, const ReactionNetwork& net) {
  auto [lo, hi] = range(c.n_range.empty() ? "2:60" : c.n_range);
  IntVector v = window_v(c, net);
  Window w{v, c.cap > 0 ? c.cap : std::max(hi + window_slack(net, v), minimum_level_cap(net, v))};
  Decomposition dec(net, w);
  int set = pick_set(c, dec);
  auto profile = drift_profile(dec, set, lo, hi, thread_count(c));
  write_file(c, "drift_profile.csv", capture([&](std::ostream& os) { write_profile_csv(os, profile); }));
  summary({{"command", "drift"},
           {"file", c.file},
           {"window", {{"v", to_json(v)}, {"level_cap", w.level_cap}}},
           {"profile", to_json(profile)},
           {"outputs", {"drift_profile.csv"}}});
  return kOk;
}

int cmd_certify(const Config& c, const ReactionNetwork& net) {
  auto [lo, hi] = range(c.n_range.empty() ? "20:200" : c.n_range);
  std::vector<double> grid = c.eta_grid.empty() ? default_eta_grid() : reals(c.eta_grid, "--eta-grid");
  std::vector<VCertificate> certs;
  const int threads = thread_count(c);
  if (!c.v.empty()) {
    IntVector v = window_v(c, net);
    Window w{v, c.cap > 0 ? c.cap : std::max(hi + window_slack(net, v), minimum_level_cap(net, v))};
    Decomposition dec(net, w);
    int set = pick_set(c, dec);
    try {
      certs.push_back(certify_v(dec, set, grid, lo, hi, threads));
    } catch (const InconclusiveError& e) {
      VCertificate cert;
      cert.v = v;
      cert.reason = e.what();
      certs.push_back(cert);
    }
  } else {
    IntVector ones = IntVector::Ones(net.d());
    Window w{ones, c.cap > 0 ? c.cap : std::max<std::int64_t>(30, minimum_level_cap(net, ones))};
    Decomposition dec(net, w);
    int set = pick_set(c, dec);
    certs = search_v(dec, set, c.v_max, grid, lo, hi, threads);
  }
  Json all = Json::array();
  for (const auto& cert : certs) all.push_back(to_json(cert));
  write_file(c, "certificates.json", all.dump(2) + "\n");
  std::int64_t passes = 0;
  for (const auto& cert : certs) passes += cert.passed();
  Json line{{"command", "certify"},
            {"file", c.file},
            {"n_range", {lo, hi}},
            {"eta_grid", grid},
            {"v_max", c.v.empty() ? Json(c.v_max) : Json(nullptr)},
            {"certificates", certs.size()},
            {"passes", passes},
            {"first_pass", passes ? to_json(certs.front().v) : Json(nullptr)},
            {"outputs", {"certificates.json"}}};
  if (!passes && !certs.empty()) line["reason"] = certs.front().reason;
  summary(line);
  return passes ? kOk : kNoPass;
}

int cmd_simulate(const Config& c, const ReactionNetwork& net) {
  if (c.x0.empty()) throw PreconditionError("simulate needs --x0");
  State x0 = int_vector(c.x0, "--x0");
  if (x0.size() != net.d()) throw PreconditionError("--x0 has the wrong dimension");
  AbsorptionOracle oracle(net, window_v(c, net));
  const std::int64_t n = c.n > 0 ? c.n : 1;
  Json line{{"command", "simulate"}, {"file", c.file}, {"x0", to_json(x0)}, {"t_max", c.t_max},
            {"seed", c.seed},         {"n", n},          {"guard", c.guard}};
  Json outputs = Json::array();
  if (n == 1 || c.trajectory) {
    auto traj = simulate_path(net, x0, c.t_max, {c.seed, 0}, c.guard, oracle);
    write_file(c, "trajectory.csv", capture([&](std::ostream& os) { write_trajectory_csv(os, traj, net); }));
    outputs.push_back("trajectory.csv");
    line["jumps"] = traj.jumps();
    line["stop"] = to_string(traj.stop);
    line["absorbed_at"] = traj.absorbed_at ? Json(*traj.absorbed_at) : Json(nullptr);
  }
  auto ens = ensemble(net, x0, c.t_max, n, c.seed, c.guard, oracle, thread_count(c));
  write_file(c, "ensemble.json", to_json(ens).dump(2) + "\n");
  outputs.push_back("ensemble.json");
  line["ensemble"] = to_json(ens);
  line["outputs"] = outputs;
  summary(line);
  return kOk;
}

int cmd_qsd(const Config& c, const ReactionNetwork& net) {
  IntVector v = window_v(c, net);
  const bool truncated = c.method == "oracle" || c.method == "stationary";
  std::int64_t cap = c.cap > 0 ? c.cap : std::max<std::int64_t>(truncated ? c.K : 30, minimum_level_cap(net, v));
  Window w{v, cap};
  Decomposition dec(net, w);
  int set = pick_set(c, dec);
  QsdEstimate est;
  std::optional<ConvergenceSeries> series;
  Json params{{"method", c.method}};
  if (c.method == "oracle") {
    TruncationOptions opt;
    if (c.solver == "uniformized") opt.solver = EigenSolver::Uniformized;
    else if (c.solver != "resolvent") throw PreconditionError("--solver must be resolvent or uniformized");
    est = truncation_oracle(dec, set, c.K, opt);
    params["K"] = c.K;
    params["solver"] = c.solver;
    params["tolerance"] = opt.tolerance;
  } else if (c.method == "stationary") {
    est = stationary_mode(dec, set, c.K);
    params["K"] = c.K;
  } else if (c.method == "fv") {
    FlemingViotOptions opt;
    opt.particles = c.particles;
    opt.t_end = c.t_end > 0 ? c.t_end : 100.0;
    opt.seed = c.seed;
    opt.record_times = record_times(c.record);
    if (!c.x0.empty()) opt.start = {{int_vector(c.x0, "--x0"), 1.0}};
    if (c.average_from >= 0) opt.average_from = c.average_from;
    auto res = fleming_viot(dec, set, opt);
    est = res.estimate;
    series = res.series;
    params["particles"] = opt.particles;
    params["t_end"] = opt.t_end;
    params["average_from"] = opt.average_from.value_or(opt.t_end / 2);
    params["seed"] = c.seed;
  } else if (c.method == "conditioned") {
    ConditionedOptions opt;
    opt.t_end = c.t_end > 0 ? c.t_end : 50.0;
    opt.n_traj = c.n > 0 ? c.n : 10000;
    opt.seed = c.seed;
    opt.threads = thread_count(c);
    State x0 = c.x0.empty() ? dec.set(set).members.front() : int_vector(c.x0, "--x0");
    est = conditioned_estimate(dec, set, x0, opt);
    params["t_end"] = opt.t_end;
    params["n"] = opt.n_traj;
    params["x0"] = to_json(x0);
    params["seed"] = c.seed;
  } else {
    throw PreconditionError("--method must be oracle, fv, conditioned or stationary");
  }
  Json report{{"file", c.file}, {"params", params}, {"estimate", to_json(est)}};
  report["support"] = to_json(support_check(est, check_assumption_class(dec, set)));
  Json outputs{"qsd.csv", "qsd.json"};
  write_file(c, "qsd.csv", capture([&](std::ostream& os) { write_distribution_csv(os, est.probabilities, net); }));
  if (series) {
    report["convergence"] = to_json(*series);
    write_file(c, "convergence.csv", capture([&](std::ostream& os) { write_series_csv(os, *series); }));
    outputs.push_back("convergence.csv");
  }
  write_file(c, "qsd.json", report.dump(2) + "\n");
  summary({{"command", "qsd"},
           {"file", c.file},
           {"window", {{"v", to_json(v)}, {"level_cap", cap}}},
           {"set_id", set},
           {"estimate", to_json(est)},
           {"outputs", outputs}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsdkit: endorsed sets, drift certificates and quasi-stationary distributions"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("file", c.file, "network file (.crn)")->required();
    sub->add_option("--v", c.v, "level vector, comma separated (default all ones)");
    sub->add_option("--cap", c.cap, "window level cap");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--threads", c.threads, "worker threads (default QSDKIT_THREADS or 1)");
    sub->add_option("--set", c.set, "endorsed set id");
    sub->add_option("--x0", c.x0, "state, comma separated");
  };
  auto* classify = app.add_subcommand("classify", "endorsed/absorbing decomposition and lattice report");
  common(classify);
  auto* drift = app.add_subcommand("drift", "tabulate d_v and d^v");
  common(drift);
  drift->add_option("--n", c.n_range, "level range a:b (default 2:60)");
  auto* certify = app.add_subcommand("certify", "certify or search drift vectors");
  common(certify);
  certify->add_option("--n", c.n_range, "level range a:b (default 20:200)");
  certify->add_option("--eta-grid", c.eta_grid, "comma separated eta values (default 2^-6..1)");
  certify->add_option("--v-max", c.v_max, "search v in {1..v_max}^d when --v is absent");
  auto* simulate = app.add_subcommand("simulate", "exact stochastic simulation");
  common(simulate);
  simulate->add_option("--seed", c.seed, "master seed");
  simulate->add_option("--t-max", c.t_max, "time horizon");
  simulate->add_option("--n", c.n, "number of trajectories");
  simulate->add_option("--guard", c.guard, "level guard on <v,x>");
  simulate->add_flag("--trajectory", c.trajectory, "write stream 0 as trajectory.csv for n > 1");
  auto* qsd = app.add_subcommand("qsd", "estimate a quasi-stationary distribution");
  common(qsd);
  qsd->add_option("--method", c.method, "oracle | fv | conditioned | stationary");
  qsd->add_option("-K", c.K, "truncation level");
  qsd->add_option("--solver", c.solver, "resolvent | uniformized");
  qsd->add_option("--particles", c.particles, "Fleming-Viot particles");
  qsd->add_option("--t-end", c.t_end, "end time");
  qsd->add_option("--record", c.record, "record times a:b:step or list");
  qsd->add_option("--average-from", c.average_from, "Fleming-Viot averaging start");
  qsd->add_option("--seed", c.seed, "master seed");
  qsd->add_option("--n", c.n, "conditioned trajectories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kRuntime;
  }

  try {
    auto net = load_network(c.file);
    if (classify->parsed()) return cmd_classify(c, net);
    if (drift->parsed()) return cmd_drift(c, net);
    if (certify->parsed()) return cmd_certify(c, net);
    if (simulate->parsed()) return cmd_simulate(c, net);
    return cmd_qsd(c, net);
  } catch (const ParseError& e) {
    std::cerr << "qsdkit: parse error: " << e.what() << '\n';
    return kParse;
  } catch (const WindowError& e) {
    std::cerr << "qsdkit: window error: " << e.what() << '\n';
    return kWindow;
  } catch (const std::exception& e) {
    std::cerr << "qsdkit: " << e.what() << '\n';
    return kRuntime;
  }
}
