// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria are pinned tolerances; do not relax them here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "innovgrad/montecarlo.hpp"
#include "test_support.hpp"

using namespace innovgrad;
using namespace test_support;

namespace {

int failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name,
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// Criterion 1: closed-form landscape of the built-in example.
void criterion1() {
  Timer timer;
  const SystemModel sys = spurious_example_system();
  double max_err = 0.0;
  for (double l1 : {-10.0, 0.0, 10.0}) {
    for (double l2 : {0.0, 0.25, -0.25, 0.5, -0.5, 0.9, -0.9}) {
      max_err = std::max(
          max_err,
          std::abs(innov_loss(sys, example_gain(l1, l2)) - example_loss(l2)));
    }
  }
  const double t = timer.seconds();
  report(1, "example landscape matches (1+2*l2^2)/(1-l2^2)+2",
         max_err <= 1e-9 && t < 1.0,
         fmt("max abs err %.3g, %.2fs", max_err, t));
}

// Criterion 2: closed-form gradient and the stationary line.
void criterion2() {
  const SystemModel sys = spurious_example_system();
  double max_err = 0.0, max_first = 0.0;
  for (double l1 : {-10.0, 0.0, 10.0}) {
    for (double l2 : {0.0, 0.25, -0.25, 0.5, -0.5, 0.9, -0.9}) {
      const Matrix g = innov_loss_gradient(sys, example_gain(l1, l2));
      max_first = std::max(max_first, std::abs(g(0, 0)));
      max_err = std::max(max_err, std::abs(g(1, 0) - example_grad_l2(l2)));
    }
  }
  bool fixed = true;
  DescentConfig cfg;
  cfg.mode = DescentMode::gd_linesearch;
  cfg.grad_tol = 1e-300;
  cfg.max_iters = 100;
  for (double l1 : {-10.0, 0.0, 3.0, 10.0}) {
    const Gain L0 = example_gain(l1, 0.0);
    const DescentTrajectory traj = descend(sys, L0, cfg);
    for (const auto& s : traj.samples) {
      if ((s.L - L0).cwiseAbs().maxCoeff() > 0.0) fixed = false;
    }
  }
  report(2, "example gradient and stationary-line fixed points",
         max_err <= 1e-8 && max_first <= 1e-12 && fixed,
         fmt("grad err %.3g, first comp %.3g", max_err, max_first) +
             (fixed ? "" : ", movement at a stationary point"));
}

// Criterion 3: analytic gradient vs central finite differences.
void criterion3() {
  Timer timer;
  GaussianStream rng(301);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const int p = 1 + trial % 2;
    const SystemModel sys = random_system(rng, n, p);
    const Gain L = random_stabilizing_gain(rng, sys);
    const Matrix g = innov_loss_gradient(sys, L);
    const Matrix fd = fd_gradient(sys, L, 1e-5);
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() /
                                std::max(g.norm(), 1e-12));
  }
  const double t = timer.seconds();
  report(3, "gradient matches finite differences on 100 random systems",
         worst <= 1e-5 && t < 30.0,
         fmt("max rel err %.3g, %.2fs", worst, t));
}

// Criteria 4 and 5 share the same 50 systems.
void criteria4and5() {
  Timer timer;
  GaussianStream rng(401);
  std::vector<SystemModel> systems;
  for (int trial = 0; trial < 50; ++trial) {
    systems.push_back(random_system(rng, 2 + trial % 3, 1 + trial % 2, true));
  }

  double worst_dist = 0.0, worst_orth = 0.0;
  bool all_converged = true;
  DescentConfig gd;
  gd.mode = DescentMode::gd_linesearch;
  gd.grad_tol = 1e-10;
  for (const auto& sys : systems) {
    const auto sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
    worst_orth = std::max(worst_orth, cross_cov(sys, sol.gain).norm());
    const DescentTrajectory traj =
        descend(sys, Matrix::Zero(sys.n(), sys.p()), gd);
    if (traj.status != DescentStatus::converged) all_converged = false;
    worst_dist =
        std::max(worst_dist, (traj.samples.back().L - sol.gain).norm());
  }
  const double t4 = timer.seconds();
  report(4, "gradient descent recovers the Kalman gain on 50 systems",
         all_converged && worst_dist <= 1e-6 && worst_orth <= 1e-8 &&
             t4 < 60.0,
         fmt("max ||L-L_KF|| %.3g, max ||K(L_KF)|| %.3g", worst_dist,
             worst_orth) +
             fmt(", %.2fs", t4));

  DescentConfig flow;
  flow.mode = DescentMode::flow_rk4;
  flow.grad_tol = 1e-8;
  bool all_certified = true;
  double worst_violation = 0.0;
  for (const auto& sys : systems) {
    const DescentTrajectory traj =
        descend(sys, Matrix::Zero(sys.n(), sys.p()), flow);
    if (traj.status != DescentStatus::converged) {
      all_certified = false;
      continue;
    }
    const RateCertificate cert = rate_certificate(sys, traj);
    if (!cert.bound_satisfied) all_certified = false;
    worst_violation = std::max(worst_violation, cert.max_violation);
  }
  report(5, "rate certificate holds on the same 50 flow trajectories",
         all_certified, fmt("max relative violation %.3g", worst_violation));
}

// Criterion 6: coercivity probes, lower bound, predictor/innovations identity.
void criterion6() {
  // (a) boundary probe on the example.
  const SystemModel ex = spurious_example_system();
  Gain dir(2, 1);
  dir << 0.0, 1.0;
  const auto boundary =
      coercivity_probe(ex, dir, {0.9, 0.99, 0.999}, ProbeMode::boundary);
  const double J999 = boundary.back().J;
  const bool a_ok =
      J999 > 1000.0 &&
      std::abs(J999 - example_loss(0.999)) <= 1e-6 * example_loss(0.999);

  // (b), (c): ray probes on 20 random (A, C)-observable systems.
  GaussianStream rng(601);
  bool b_ok = true, c_ok = true;
  int done = 0;
  while (done < 20) {
    const SystemModel sys = random_system(rng, 2 + done % 3, 1 + done % 2);
    if (!check_assumptions(sys).observable_A_C) continue;
    Gain d = rng.next_matrix(sys.n(), sys.p());
    d /= d.norm();
    auto stable = [&](double alpha) {
      return is_stabilizing(sys, (alpha * d).eval(), LoopForm::predictor);
    };
    std::vector<double> alphas;
    double hi = 1.0;
    bool crosses = false;
    for (int i = 0; i < 60 && !crosses; ++i) {
      if (!stable(hi)) crosses = true;
      else hi *= 2.0;
    }
    if (crosses) {
      double lo = 0.0;
      while (hi - lo > 1e-12 * (1.0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
      }
      for (int k = 1; k <= 40; ++k) {
        alphas.push_back(lo * (1.0 - std::pow(2.0, -k)));
      }
    } else {
      for (int k = 0; k <= 60; ++k) alphas.push_back(0.1 * std::pow(2.0, k));
    }
    const auto pts = coercivity_probe(sys, d, alphas, ProbeMode::ray);
    double maxJ = 0.0;
    for (const auto& pt : pts) {
      maxJ = std::max(maxJ, pt.J);
      const Gain L = pt.alpha * d;
      Matrix S = sys.Qw + L * sys.Rv * L.transpose();
      S = 0.5 * (S + S.transpose()).eval();
      const Matrix Xo = solve_dlyap(predictor_closed_loop(sys, L).transpose(),
                                    sys.C.transpose() * sys.C);
      if (pt.J < lambda_min_sym(S) * Xo.trace() - 1e-8) c_ok = false;
    }
    if (maxJ <= 1e6) b_ok = false;
    ++done;
  }

  // (d) J_innov(L) = J_pred(AL) on 100 random stabilizing gains.
  bool d_ok = true;
  int checked = 0;
  while (checked < 100) {
    const SystemModel sys = random_system(rng, 2 + checked % 4, 1 + checked % 2);
    const Gain L = random_stabilizing_gain(rng, sys);
    if (!is_stabilizing(sys, (sys.A * L).eval(), LoopForm::predictor)) continue;
    const double ji = innov_loss(sys, L);
    if (std::abs(ji - pred_loss(sys, sys.A * L)) > 1e-9 * (1.0 + ji)) {
      d_ok = false;
    }
    ++checked;
  }
  report(6, "coercivity probes, lower bound, predictor identity",
         a_ok && b_ok && c_ok && d_ok,
         std::string(a_ok ? "" : "boundary probe failed; ") +
             (b_ok ? "" : "ray probe failed; ") +
             (c_ok ? "" : "lower bound failed; ") +
             (d_ok ? "" : "identity failed; ") +
             fmt("J(0.999) = %.7g", J999));
}

// Criterion 7: Monte Carlo end-to-end on two fixed systems.
void criterion7() {
  bool ok = true;
  std::string detail;
  GaussianStream rng(701);
  const SystemModel random_sys = random_system(rng, 2, 1, true);
  const Gain random_L = random_stabilizing_gain(rng, random_sys);
  const std::pair<SystemModel, Gain> cases[] = {
      {spurious_example_system(), example_gain(0.0, 0.5)},
      {random_sys, random_L}};
  for (const auto& [sys, L] : cases) {
    SimConfig cfg;
    cfg.horizon = 1000000;
    cfg.burn_in = 10000;
    cfg.seed = 2024;
    Timer timer;
    const auto est = simulate(sys, L, cfg);
    const double t = timer.seconds();
    const auto est2 = simulate(sys, L, cfg);
    const double J = innov_loss(sys, L);
    const Matrix Sd = innovation_cov(sys, L);
    const Matrix K = cross_cov(sys, L);
    const bool deterministic =
        (est.Sigma_delta_hat - est2.Sigma_delta_hat).norm() == 0.0 &&
        est.J_hat == est2.J_hat && (est.K_hat - est2.K_hat).norm() == 0.0;
    const bool this_ok =
        std::abs(est.J_hat - J) <= 0.02 * J &&
        (est.Sigma_delta_hat - Sd).norm() <= 0.05 * Sd.norm() &&
        (est.K_hat - K).norm() <= 0.05 * (1.0 + K.norm()) && t < 10.0 &&
        deterministic;
    if (!this_ok) {
      ok = false;
      detail += fmt("J_hat %.5g vs %.5g; ", est.J_hat, J);
    }
  }
  report(7, "Monte Carlo matches analytic quantities at horizon 1e6", ok,
         detail);
}

// Criterion 8: local curvature-ratio machinery at the Kalman gain.
void criterion8() {
  GaussianStream rng(801);
  bool ineq_ok = true, identity_ok = true;
  for (int sys_idx = 0; sys_idx < 10; ++sys_idx) {
    const SystemModel sys =
        random_system(rng, 2 + sys_idx % 3, 1 + sys_idx % 2, true);
    const double beta = estimate_c_local(sys);
    const auto sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
    const Gain& lkf = sol.gain;
    const int n = static_cast<int>(sys.n());
    const int p = static_cast<int>(sys.p());
    const int d = n * p;
    const double h = 1e-6;
    std::vector<Matrix> DK(d);
    Matrix H(d, d);
    for (int a = 0; a < d; ++a) {
      Matrix E = Matrix::Zero(n, p);
      E(a % n, a / n) = 1.0;
      DK[a] = (cross_cov(sys, lkf + h * E) - cross_cov(sys, lkf - h * E)) /
              (2.0 * h);
      const Matrix dg = (innov_loss_gradient(sys, lkf + h * E) -
                         innov_loss_gradient(sys, lkf - h * E)) /
                        (2.0 * h);
      H.col(a) = Eigen::Map<const Vector>(dg.data(), d);
    }
    H = 0.5 * (H + H.transpose()).eval();
    const Matrix Wo = obs_gramian(sys, lkf);
    for (int trial = 0; trial < 1000; ++trial) {
      Vector dl = rng.next_vector(d);
      dl /= dl.norm();
      Matrix dkv = Matrix::Zero(n, p);
      for (int a = 0; a < d; ++a) dkv += dl(a) * DK[a];
      if (0.5 * dl.dot(H * dl) > beta * dkv.squaredNorm() + 1e-8) {
        ineq_ok = false;
      }
      Vector hv = H * dl;
      const Matrix hm = Eigen::Map<const Matrix>(hv.data(), n, p);
      const Matrix rhs = -2.0 * Wo * dkv;
      if ((hm - rhs).norm() > 1e-4 * (1.0 + rhs.norm())) identity_ok = false;
    }
  }
  report(8, "curvature-ratio inequality and Hessian identity at L_KF",
         ineq_ok && identity_ok,
         std::string(ineq_ok ? "" : "inequality violated; ") +
             (identity_ok ? "" : "Hessian identity violated"));
}

// Criterion 9: kernel hygiene.
void criterion9() {
  GaussianStream rng(901);
  double worst_lyap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;  // 2..10
    Matrix F = rng.next_matrix(n, n);
    F *= (0.2 + 0.7 * rng.uniform()) / spectral_radius(F);
    const Matrix G = rng.next_matrix(n, n);
    const Matrix Q = G * G.transpose();
    const Matrix X = solve_dlyap(F, Q);
    worst_lyap = std::max(
        worst_lyap,
        (X - F * X * F.transpose() - Q).norm() / (1.0 + X.norm()));
  }

  double worst_dare = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const SystemModel sys = random_system(rng, 2 + trial % 4, 1 + trial % 2);
    const auto sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
    worst_dare =
        std::max(worst_dare, sol.residual / (1.0 + sol.Pminus.norm()));
  }

  double worst_sim = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix M = rng.next_matrix(4, 4);
    Matrix T = rng.next_matrix(4, 4) + 4.0 * Matrix::Identity(4, 4);
    const double r1 = spectral_radius(M);
    const double r2 = spectral_radius(T * M * T.inverse());
    worst_sim = std::max(worst_sim, std::abs(r1 - r2) / (1.0 + r1));
  }
  report(9, "Lyapunov/DARE residuals and spectral-radius invariance",
         worst_lyap <= 1e-10 && worst_dare <= 1e-10 && worst_sim <= 1e-8,
         fmt("lyap %.3g, dare %.3g", worst_lyap, worst_dare) +
             fmt(", sim %.3g", worst_sim));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criteria4and5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
