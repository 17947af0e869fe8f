#include "innovgrad/montecarlo.hpp"

#include <cmath>
#include <sstream>

#include "innovgrad/random.hpp"

namespace innovgrad {

MonteCarloEstimate simulate(const SystemModel& sys, const Gain& L,
                            const SimConfig& cfg) {
  if (cfg.horizon < 1) throw DomainError("simulate: horizon must be >= 1");
  if (cfg.burn_in < 0) throw DomainError("simulate: burn_in must be >= 0");
  if (!is_stabilizing(sys, L, LoopForm::filter)) {
    throw DomainError("simulate: L is not stabilizing, error would diverge");
  }
  const auto n = sys.n();
  const auto p = sys.p();

  // Eigendecomposition square roots, matching the psd handling elsewhere.
  const Matrix Sw = sym_sqrt(sys.Qw);
  const Matrix Sv = sym_sqrt(sys.Rv);

  Vector x = (cfg.x0.size() == n) ? cfg.x0 : Vector::Zero(n);
  Vector xhat = (cfg.xhat0.size() == n) ? cfg.xhat0 : Vector::Zero(n);
  if (cfg.x0.size() != 0 && cfg.x0.size() != n) {
    throw DimensionError("simulate: x0 has wrong dimension");
  }
  if (cfg.xhat0.size() != 0 && cfg.xhat0.size() != n) {
    throw DimensionError("simulate: xhat0 has wrong dimension");
  }

  GaussianStream rng(cfg.seed);
  Matrix sum_dd = Matrix::Zero(p, p);
  Matrix sum_ed = Matrix::Zero(n, p);
  Matrix sum_ee = Matrix::Zero(n, n);
  double sum_j = 0.0, sum_j2 = 0.0;

  const long total = cfg.burn_in + cfg.horizon;
  for (long t = 0; t < total; ++t) {
    const Vector w = Sw * rng.next_vector(n);
    const Vector v = Sv * rng.next_vector(p);
    x = sys.A * x + w;
    const Vector y = sys.C * x + v;
    const Vector xpred = sys.A * xhat;
    const Vector delta = y - sys.C * xpred;
    xhat = xpred + L * delta;
    if (t < cfg.burn_in) continue;
    const Vector e = x - xhat;
    sum_dd += delta * delta.transpose();
    sum_ed += e * delta.transpose();
    sum_ee += e * e.transpose();
    const double d2 = delta.squaredNorm();
    sum_j += d2;
    sum_j2 += d2 * d2;
  }

  const double inv = 1.0 / static_cast<double>(cfg.horizon);
  MonteCarloEstimate est;
  est.Sigma_delta_hat = 0.5 * (sum_dd + sum_dd.transpose()) * inv;
  est.K_hat = sum_ed * inv;
  est.P_hat = 0.5 * (sum_ee + sum_ee.transpose()) * inv;
  est.J_hat = sum_j * inv;
  est.n_samples = cfg.horizon;
  const double var =
      std::max(0.0, sum_j2 * inv - est.J_hat * est.J_hat);
  est.stderr_J = std::sqrt(var * inv);
  est.seed = cfg.seed;
  return est;
}

Matrix fd_gradient(const SystemModel& sys, const Gain& L, double h) {
  if (h <= 0) throw DomainError("fd_gradient: h must be positive");
  Matrix grad(L.rows(), L.cols());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      Gain Lp = L, Lm = L;
      Lp(i, j) += h;
      Lm(i, j) -= h;
      if (!is_stabilizing(sys, Lp, LoopForm::filter) ||
          !is_stabilizing(sys, Lm, LoopForm::filter)) {
        std::ostringstream os;
        os << "fd_gradient: perturbed gain at (" << i << "," << j
           << ") leaves the stabilizing set; try a smaller h";
        throw DomainError(os.str());
      }
      grad(i, j) = (innov_loss(sys, Lp) - innov_loss(sys, Lm)) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace innovgrad
