#include "qsdkit/errors.hpp"
#include "qsdkit/ssa.hpp"

#include <Eigen/LU>

#include <cmath>

namespace qsdkit {

namespace {

Eigen::VectorXd powers(const ReactionNetwork& net, int k) {
  const auto& rx = net.reaction(k);
  if (const auto* pl = std::get_if<PowerLaw>(&rx.rate)) return pl->exponents;
  return rx.source.cast<double>();
}

// alpha prod z_i^{e_i}
double monomial(double alpha, const Eigen::VectorXd& e, const Eigen::VectorXd& z) {
  double out = alpha;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (e[i] != 0.0) out *= std::pow(z[i], e[i]);
  return out;
}

void check(const ReactionNetwork& net, const Eigen::VectorXd& z) {
  if (z.size() != net.d()) throw PreconditionError("dimension mismatch");
  if ((z.array() < 0.0).any() || !z.allFinite()) throw PreconditionError("z must be nonnegative");
}

}  // namespace

Eigen::VectorXd deterministic_field(const ReactionNetwork& net, const Eigen::VectorXd& z) {
  check(net, z);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(net.d());
  for (int k = 0; k < net.r(); ++k)
    f += monomial(rate_constant(net.reaction(k).rate), powers(net, k), z) *
         net.xi(k).cast<double>();
  return f;
}

Eigen::MatrixXd deterministic_jacobian(const ReactionNetwork& net, const Eigen::VectorXd& z) {
  check(net, z);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(net.d(), net.d());
  for (int k = 0; k < net.r(); ++k) {
    const Eigen::VectorXd e = powers(net, k);
    const double alpha = rate_constant(net.reaction(k).rate);
    for (int j = 0; j < net.d(); ++j) {
      if (e[j] == 0.0) continue;
      Eigen::VectorXd ej = e;
      ej[j] -= 1.0;
      double dj = e[j] * monomial(alpha, ej, z);
      J.col(j) += dj * net.xi(k).cast<double>();
    }
  }
  return J;
}

Eigen::VectorXd find_fixed_point(const ReactionNetwork& net, const Eigen::VectorXd& z0,
                                 FixedPointOptions options) {
  Eigen::VectorXd z = z0;
  Eigen::VectorXd f = deterministic_field(net, z);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (f.norm() <= options.tolerance) return z;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(deterministic_jacobian(net, z));
    if (!(std::fabs(lu.determinant()) > 1e-300))
      throw ConvergenceError("singular Jacobian at iteration " + std::to_string(it));
    Eigen::VectorXd dz = lu.solve(-f);
    if (!dz.allFinite()) throw ConvergenceError("singular Jacobian at iteration " + std::to_string(it));
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      Eigen::VectorXd trial = (z + t * dz).cwiseMax(0.0);
      Eigen::VectorXd ft = deterministic_field(net, trial);
      if (ft.norm() < f.norm() || ft.norm() <= options.tolerance) {
        z = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw ConvergenceError("line search stalled at iteration " + std::to_string(it));
    if ((t * dz).norm() <= options.tolerance * (1.0 + z.norm())) return z;
  }
  if (f.norm() <= options.tolerance) return z;
  throw ConvergenceError("Newton did not converge in " + std::to_string(options.max_iterations) +
                         " iterations");
}

}  // namespace qsdkit
