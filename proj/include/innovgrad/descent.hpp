#ifndef INNOVGRAD_DESCENT_HPP
#define INNOVGRAD_DESCENT_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "innovgrad/model.hpp"

namespace innovgrad {

enum class DescentMode { flow_rk4, gd_linesearch };

struct DescentConfig {
  DescentMode mode = DescentMode::gd_linesearch;
  double step_init = 0.1;
  double step_min = 1e-14;
  double grad_tol = 1e-10;
  long max_iters = 200000;
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  double stability_margin = 1e-9;
};

struct TrajectorySample {
  double t;  // accumulated flow time (flow_rk4) or iteration index (gd)
  Gain L;
  double J;
  double grad_norm;
  double rho_F;
  double lambda_min_Wo;
  double K_norm;
};

enum class DescentStatus { converged, max_iters, left_stabilizing_set };

struct DescentTrajectory {
  std::vector<TrajectorySample> samples;
  DescentStatus status = DescentStatus::max_iters;
  bool assumptions_hold = true;  // (A, CA) observable at the start
};

// Line search could not find an acceptable step above step_min.
struct StallError : NumericalError {
  Gain last_gain;
  double last_J;
  StallError(const std::string& msg, Gain L, double J)
      : NumericalError(msg), last_gain(std::move(L)), last_J(J) {}
};

DescentTrajectory descend(const SystemModel& sys, const Gain& L0,
                          const DescentConfig& cfg);

struct RateCertificate {
  double kappa_hat;    // min over trajectory of lambda_min(W_o)
  double c_hat;        // max over trajectory of (J - J*)/||K||_F^2
  double J_star;       // loss at the Riccati gain
  bool bound_satisfied;
  double max_violation;  // largest relative exceedance of the envelope
};

// Checks J(t) - J* <= (J(0) - J*) exp(-4 (kappa^2/c) t) (1 + 1e-6) along a
// converged flow trajectory, with kappa, c estimated from the samples.
RateCertificate rate_certificate(const SystemModel& sys,
                                 const DescentTrajectory& traj);

// Rejection-samples the sublevel set {J <= J(L0)} and returns the smallest
// lambda_min(W_o) seen; an upper estimate of the level-set constant.
double estimate_kappa_levelset(const SystemModel& sys, const Gain& L0,
                               int n_samples, std::uint64_t seed);

// Local estimate of the curvature ratio at the Kalman gain: beta =
// lambda_max(N^{t/2} M N^{t/2}) with M the halved finite-difference Hessian
// of the loss and N the Gram form of the cross-covariance Jacobian.
double estimate_c_local(const SystemModel& sys);

enum class ProbeMode { ray, boundary };

struct ProbePoint {
  double alpha;
  double J;    // pred_loss (ray mode) or innov_loss (boundary mode)
  double rho;  // spectral radius of the corresponding closed loop
};

// Evaluates the loss along alpha * direction, skipping non-stabilizing
// points; boundary mode also bisects for the rho = 1 crossing and caps the
// sweep there.
std::vector<ProbePoint> coercivity_probe(const SystemModel& sys,
                                         const Gain& direction,
                                         const std::vector<double>& alphas,
                                         ProbeMode mode);

void write_trajectory_csv(const DescentTrajectory& traj, std::ostream& out);

}  // namespace innovgrad

#endif
