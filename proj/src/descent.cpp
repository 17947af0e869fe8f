#include "innovgrad/descent.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "innovgrad/random.hpp"

namespace innovgrad {

namespace {

constexpr double kRk4Tol = 1e-9;     // step-doubling error control, relative
constexpr double kRk4AbsTol = 1e-13;  // absolute floor per unit gain norm
constexpr double kTerminalKNorm = 1e-12;  // excluded from the c-hat ratio

TrajectorySample make_sample(double t, const GainAnalysis& g) {
  return TrajectorySample{t,      g.L,          g.J_innov,     g.grad.norm(),
                          g.rho_F, g.lambda_min_Wo, g.K.norm()};
}

// Loss only, without the Gramian solve; ok = false if the closed loop is
// outside the margin.
double loss_if_stable(const SystemModel& sys, const Gain& L, double margin,
                      bool& ok) {
  const Matrix F = closed_loop(sys, L);
  if (spectral_radius(F) >= 1.0 - margin) {
    ok = false;
    return std::numeric_limits<double>::quiet_NaN();
  }
  ok = true;
  const Matrix P = solve_dlyap(F, effective_noise_cov(sys, L));
  return (sys.C * (sys.A * P * sys.A.transpose() + sys.Qw) * sys.C.transpose() +
          sys.Rv)
      .trace();
}

// Flow field 2 W_o K = -grad J.
Matrix flow_field(const SystemModel& sys, const Gain& L, double margin,
                  bool& ok) {
  const Matrix F = closed_loop(sys, L);
  if (spectral_radius(F) >= 1.0 - margin) {
    ok = false;
    return Matrix();
  }
  ok = true;
  return -innov_loss_gradient(sys, L);
}

Matrix rk4_step(const SystemModel& sys, const Gain& L, double h, double margin,
                bool& ok) {
  const Matrix k1 = flow_field(sys, L, margin, ok);
  if (!ok) return Matrix();
  const Matrix k2 = flow_field(sys, L + 0.5 * h * k1, margin, ok);
  if (!ok) return Matrix();
  const Matrix k3 = flow_field(sys, L + 0.5 * h * k2, margin, ok);
  if (!ok) return Matrix();
  const Matrix k4 = flow_field(sys, L + h * k3, margin, ok);
  if (!ok) return Matrix();
  return L + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

DescentTrajectory run_gd(const SystemModel& sys, const Gain& L0,
                         const DescentConfig& cfg) {
  DescentTrajectory traj;
  Gain L = L0;
  GainAnalysis g = analyze(sys, L, cfg.stability_margin);
  traj.samples.push_back(make_sample(0.0, g));

  double alpha = cfg.step_init;
  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    if (g.grad.norm() <= cfg.grad_tol) {
      traj.status = DescentStatus::converged;
      return traj;
    }
    const double g2 = g.grad.squaredNorm();
    const double gnorm = std::sqrt(g2);
    // Near a minimizer the sufficient-decrease amount drops below what a
    // double can resolve in J. The gradient is still accurate to roughly
    // machine precision in absolute terms, so in that regime the step is
    // judged by gradient contraction instead of by loss decrease.
    const double resolution =
        32.0 * std::numeric_limits<double>::epsilon() *
        (1.0 + std::abs(g.J_innov));
    bool accepted = false;
    while (alpha >= cfg.step_min) {
      const Gain Lnew = L - alpha * g.grad;
      bool ok = false;
      const double Jnew = loss_if_stable(sys, Lnew, cfg.stability_margin, ok);
      const double required = cfg.armijo_slope * alpha * g2;
      if (ok && alpha * g2 >= resolution) {
        if (Jnew <= g.J_innov - required) {
          L = Lnew;
          accepted = true;
          break;
        }
      } else if (ok && Jnew <= g.J_innov + resolution &&
                 innov_loss_gradient(sys, Lnew).norm() <=
                     (1.0 - cfg.armijo_slope) * gnorm) {
        L = Lnew;
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack_factor;
    }
    if (!accepted) {
      throw StallError("descend: line search stalled below step_min", L,
                       g.J_innov);
    }
    g = analyze(sys, L, cfg.stability_margin);
    traj.samples.push_back(make_sample(static_cast<double>(iter), g));
    alpha = std::min(alpha / cfg.backtrack_factor, 1e12);
  }
  traj.status = DescentStatus::max_iters;
  return traj;
}

DescentTrajectory run_flow(const SystemModel& sys, const Gain& L0,
                           const DescentConfig& cfg) {
  DescentTrajectory traj;
  Gain L = L0;
  GainAnalysis g = analyze(sys, L, cfg.stability_margin);
  double t = 0.0;
  traj.samples.push_back(make_sample(t, g));

  double h = cfg.step_init;
  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    if (g.grad.norm() <= cfg.grad_tol) {
      traj.status = DescentStatus::converged;
      return traj;
    }
    bool accepted = false;
    while (h >= cfg.step_min) {
      bool ok = false;
      const Matrix Lfull = rk4_step(sys, L, h, cfg.stability_margin, ok);
      Matrix Lhalf;
      if (ok) {
        Lhalf = rk4_step(sys, L, 0.5 * h, cfg.stability_margin, ok);
        if (ok) Lhalf = rk4_step(sys, Lhalf, 0.5 * h, cfg.stability_margin, ok);
      }
      if (!ok) {
        h *= 0.5;
        continue;
      }
      // Local error controlled relative to the step displacement, with a
      // small absolute floor for roundoff in the field evaluation. A
      // tolerance relative to ||L|| alone puts a floor under the reachable
      // gradient; a purely displacement-relative one demands sub-roundoff
      // accuracy once the motion per step is tiny.
      const double err = (Lhalf - Lfull).norm();
      const double tol = kRk4Tol * (Lfull - L).norm() +
                         kRk4AbsTol * (1.0 + L.norm());
      if (err > tol) {
        h *= std::clamp(0.9 * std::pow(tol / err, 0.2), 0.1, 0.5);
        continue;
      }
      bool stable = false;
      const double Jnew =
          loss_if_stable(sys, Lhalf, cfg.stability_margin, stable);
      if (!stable || Jnew > g.J_innov * (1.0 + 1e-12) + 1e-12) {
        h *= 0.5;
        continue;
      }
      L = Lhalf;
      t += h;
      h *= std::clamp(0.9 * std::pow(tol / std::max(err, 1e-300), 0.2),
                      0.5, 4.0);
      accepted = true;
      break;
    }
    if (!accepted) {
      throw StallError("descend: flow step collapsed below step_min", L,
                       g.J_innov);
    }
    g = analyze(sys, L, cfg.stability_margin);
    traj.samples.push_back(make_sample(t, g));
  }
  traj.status = DescentStatus::max_iters;
  return traj;
}

}  // namespace

DescentTrajectory descend(const SystemModel& sys, const Gain& L0,
                          const DescentConfig& cfg) {
  if (cfg.step_min > cfg.step_init || cfg.step_init <= 0 ||
      cfg.step_min <= 0 || cfg.grad_tol <= 0 || cfg.armijo_slope <= 0 ||
      cfg.armijo_slope >= 1 || cfg.backtrack_factor <= 0 ||
      cfg.backtrack_factor >= 1 || cfg.stability_margin < 0) {
    throw DomainError("descend: invalid DescentConfig");
  }
  if (!is_stabilizing(sys, L0, LoopForm::filter, cfg.stability_margin)) {
    throw DomainError("descend: L0 is not stabilizing within the margin");
  }
  DescentTrajectory traj = (cfg.mode == DescentMode::gd_linesearch)
                               ? run_gd(sys, L0, cfg)
                               : run_flow(sys, L0, cfg);
  traj.assumptions_hold = check_assumptions(sys).observable_A_CA;
  return traj;
}

RateCertificate rate_certificate(const SystemModel& sys,
                                 const DescentTrajectory& traj) {
  if (traj.status != DescentStatus::converged || traj.samples.empty()) {
    throw DomainError("rate_certificate: trajectory did not converge");
  }
  const DareSolution dare =
      solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
  RateCertificate cert{};
  cert.J_star = innov_loss(sys, dare.gain);

  double kappa = std::numeric_limits<double>::infinity();
  double c = 0.0;
  for (const auto& s : traj.samples) {
    kappa = std::min(kappa, s.lambda_min_Wo);
    if (s.K_norm >= kTerminalKNorm) {
      c = std::max(c, (s.J - cert.J_star) / (s.K_norm * s.K_norm));
    }
  }
  cert.kappa_hat = std::max(kappa, 0.0);
  cert.c_hat = c;

  const double rate =
      (cert.kappa_hat > 0.0 && cert.c_hat > 0.0)
          ? 4.0 * cert.kappa_hat * cert.kappa_hat / cert.c_hat
          : 0.0;
  const double gap0 = traj.samples.front().J - cert.J_star;
  double max_violation = 0.0;
  for (const auto& s : traj.samples) {
    const double gap = s.J - cert.J_star;
    const double envelope = gap0 * std::exp(-rate * s.t);
    if (gap <= 0.0) continue;
    if (envelope <= 0.0) {
      max_violation = std::numeric_limits<double>::infinity();
      continue;
    }
    max_violation = std::max(max_violation, gap / envelope - 1.0);
  }
  cert.max_violation = max_violation;
  cert.bound_satisfied = (max_violation <= 1e-6);
  return cert;
}

double estimate_kappa_levelset(const SystemModel& sys, const Gain& L0,
                               int n_samples, std::uint64_t seed) {
  const GainAnalysis g0 = analyze(sys, L0);
  double kappa = g0.lambda_min_Wo;
  GaussianStream rng(seed);
  double scale = 0.1 * (1.0 + L0.norm());
  int accepted = 0;
  for (int i = 0; i < n_samples; ++i) {
    const Gain L = L0 + scale * rng.next_matrix(sys.n(), sys.p());
    if (!is_stabilizing(sys, L, LoopForm::filter)) {
      scale = std::max(scale * 0.9, 1e-4);
      continue;
    }
    if (innov_loss(sys, L) > g0.J_innov) {
      scale = std::max(scale * 0.9, 1e-4);
      continue;
    }
    ++accepted;
    scale = std::min(scale * 1.1, 1e3);
    kappa = std::min(kappa, lambda_min_sym(obs_gramian(sys, L)));
  }
  if (accepted == 0) {
    throw NumericalError("estimate_kappa_levelset: no samples accepted");
  }
  return std::max(kappa, 0.0);
}

double estimate_c_local(const SystemModel& sys) {
  if (!check_assumptions(sys).observable_A_CA) {
    throw DomainError("estimate_c_local: (A, CA) is not observable");
  }
  const DareSolution dare =
      solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
  const Gain& Lkf = dare.gain;
  const auto n = sys.n();
  const auto p = sys.p();
  const Eigen::Index d = n * p;
  const double h = 1e-6;

  // Jacobian of K and Hessian of J at L_KF, both by central differences over
  // the canonical basis (column-major vec ordering).
  std::vector<Matrix> DK(static_cast<std::size_t>(d));
  Matrix H(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    Matrix E = Matrix::Zero(n, p);
    E(a % n, a / n) = 1.0;
    DK[a] = (cross_cov(sys, Lkf + h * E) - cross_cov(sys, Lkf - h * E)) /
            (2.0 * h);
    const Matrix dg = (innov_loss_gradient(sys, Lkf + h * E) -
                       innov_loss_gradient(sys, Lkf - h * E)) /
                      (2.0 * h);
    H.col(a) = Eigen::Map<const Vector>(dg.data(), d);
  }
  H = 0.5 * (H + H.transpose()).eval();
  const Matrix M = 0.5 * H;

  Matrix N(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      N(a, b) = N(b, a) = (DK[a].array() * DK[b].array()).sum();
    }
  }

  // Lemma condition: directions annihilated by N must also be annihilated
  // by M, up to finite-difference noise.
  Eigen::SelfAdjointEigenSolver<Matrix> es(N);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (es.eigenvalues()(i) <= 1e-10) {
      const Vector v = es.eigenvectors().col(i);
      if (std::abs(v.dot(M * v)) > 1e-8) {
        throw NumericalError(
            "estimate_c_local: kernel condition violated (x'Nx = 0 but "
            "x'Mx != 0)");
      }
    }
  }

  const Matrix Nphalf = sym_pinv_sqrt(N, 1e-10);
  Matrix ratio = Nphalf * M * Nphalf;
  ratio = 0.5 * (ratio + ratio.transpose()).eval();
  return lambda_max_sym(ratio);
}

std::vector<ProbePoint> coercivity_probe(const SystemModel& sys,
                                         const Gain& direction,
                                         const std::vector<double>& alphas,
                                         ProbeMode mode) {
  const LoopForm form =
      (mode == ProbeMode::ray) ? LoopForm::predictor : LoopForm::filter;
  auto rho_at = [&](double alpha) {
    const Gain L = alpha * direction;
    return spectral_radius(form == LoopForm::predictor
                               ? predictor_closed_loop(sys, L)
                               : closed_loop(sys, L));
  };

  double alpha_star = std::numeric_limits<double>::infinity();
  if (mode == ProbeMode::boundary) {
    // Bisect for the rho = 1 crossing along the segment.
    double lo = 0.0, hi = 1.0;
    bool bracketed = false;
    for (int i = 0; i < 64 && !bracketed; ++i) {
      if (rho_at(hi) >= 1.0) {
        bracketed = true;
      } else {
        lo = hi;
        hi *= 2.0;
      }
    }
    if (bracketed) {
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double r = rho_at(mid);
        if (std::abs(r - 1.0) <= 1e-10) {
          lo = hi = mid;
          break;
        }
        (r < 1.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
      }
      alpha_star = 0.5 * (lo + hi);
    }
  }

  std::vector<ProbePoint> out;
  for (double alpha : alphas) {
    if (alpha >= alpha_star) continue;
    const Gain L = alpha * direction;
    const double rho = rho_at(alpha);
    // Keep a hair inside the boundary so the Lyapunov solve stays well-posed.
    if (rho >= 1.0 - 2e-9) continue;
    const double J = (mode == ProbeMode::ray) ? pred_loss(sys, L)
                                              : innov_loss(sys, L);
    out.push_back(ProbePoint{alpha, J, rho});
  }
  if (out.empty()) {
    throw DomainError("coercivity_probe: all probe points non-stabilizing");
  }
  return out;
}

void write_trajectory_csv(const DescentTrajectory& traj, std::ostream& out) {
  out << "t,J,grad_norm,rho_F,lambda_min_Wo,K_norm\n";
  char buf[256];
  for (const auto& s : traj.samples) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.J,
                  s.grad_norm, s.rho_F, s.lambda_min_Wo, s.K_norm);
    out << buf;
  }
}

}  // namespace innovgrad
