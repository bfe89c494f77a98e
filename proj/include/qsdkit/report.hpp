#pragma once

#include "qsdkit/drift.hpp"
#include "qsdkit/lattice.hpp"
#include "qsdkit/qsd.hpp"
#include "qsdkit/ssa.hpp"
#include "qsdkit/statespace.hpp"

#include "json.hpp"

#include <ostream>

namespace qsdkit {

using Json = nlohmann::ordered_json;

Json to_json(const State& x);
Json to_json(const LatticeInfo& info);
Json to_json(const MinimalClassReport& report);
/// Window, sets with members and absorbing neighbours, unknown count.
Json to_json(const Decomposition& decomp);
Json to_json(const VCertificate& cert);
Json to_json(const DriftProfile& profile);
Json to_json(const EnsembleSummary& summary);
Json to_json(const QsdEstimate& estimate);  // metadata only; the table goes to CSV
Json to_json(const ConvergenceSeries& series);
Json to_json(const SupportReport& report);

/// n,d_lower,d_upper with empty fields for none
void write_profile_csv(std::ostream& out, const DriftProfile& profile);
/// t,x1..xd rows at jump times; the last row repeats the final state at t_end with its stop reason
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ReactionNetwork& net);
/// x1..xd,prob sorted lexicographically
void write_distribution_csv(std::ostream& out, const Distribution& p, const ReactionNetwork& net);
/// t,tv
void write_series_csv(std::ostream& out, const ConvergenceSeries& series);

}  // namespace qsdkit
