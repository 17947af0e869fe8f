#ifndef INNOVGRAD_MODEL_HPP
#define INNOVGRAD_MODEL_HPP

#include "innovgrad/matrix_ops.hpp"

namespace innovgrad {

// Discrete LTI plant x_{t+1} = A x_t + w_t, y_{t+1} = C x_{t+1} + v_{t+1}
// with noise covariances Q_w > 0 and R_v > 0. Immutable after construction.
struct SystemModel {
  Matrix A;   // n x n state transition
  Matrix C;   // p x n measurement map
  Matrix Qw;  // n x n process-noise covariance
  Matrix Rv;  // p x p measurement-noise covariance

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index p() const { return C.rows(); }

  // Validates dimensions and definiteness (lambda_min > 1e-12 * lambda_max).
  static SystemModel create(Matrix A, Matrix C, Matrix Qw, Matrix Rv);
};

// Filter gains are plain n x p matrices; membership in the stabilizing set
// is a predicate, not a type invariant.
using Gain = Matrix;

enum class LoopForm { filter, predictor };

// Two-state system with (A, C) observable but (A, CA) of rank 1; its
// innovations loss has a whole line of spurious stationary points.
SystemModel spurious_example_system();

// All steady-state quantities at one stabilizing gain, computed in a single
// bundle (two Lyapunov solves shared across fields).
struct GainAnalysis {
  Gain L;
  Matrix F;             // (I - LC)A
  double rho_F;
  Matrix Q_eta;
  Matrix P;
  Matrix P_minus;
  Matrix Sigma_delta;
  Matrix W_o;
  Matrix K;             // cross-covariance E[e delta^T]
  double J_innov;
  Matrix grad;          // -2 W_o K
  double lambda_min_Wo;
};

Matrix closed_loop(const SystemModel& sys, const Gain& L);
Matrix predictor_closed_loop(const SystemModel& sys, const Gain& L);
bool is_stabilizing(const SystemModel& sys, const Gain& L, LoopForm form,
                    double margin = 0.0);

Matrix effective_noise_cov(const SystemModel& sys, const Gain& L);
Matrix error_cov(const SystemModel& sys, const Gain& L);
Matrix apriori_cov(const SystemModel& sys, const Gain& L);
Matrix innovation_cov(const SystemModel& sys, const Gain& L);
double innov_loss(const SystemModel& sys, const Gain& L);
Matrix obs_gramian(const SystemModel& sys, const Gain& L);
Matrix cross_cov(const SystemModel& sys, const Gain& L);
Matrix innov_loss_gradient(const SystemModel& sys, const Gain& L);

// Loss of the one-step-ahead predictor filter, Tr(C Ptilde C^T + R_v) with
// Ptilde solving the predictor-form Lyapunov equation.
double pred_loss(const SystemModel& sys, const Gain& L);

GainAnalysis analyze(const SystemModel& sys, const Gain& L,
                     double margin = 0.0);

struct AssumptionReport {
  int rank_obs_A_CA;
  bool observable_A_CA;
  int rank_obs_A_C;
  bool observable_A_C;
  bool stabilizable_A_Qw_sqrt;
  bool A_invertible;
};

// Checks the observability/stabilizability conditions the descent theory
// relies on. Report-style; never throws on a violated condition.
AssumptionReport check_assumptions(const SystemModel& sys, double tol = 1e-8);

}  // namespace innovgrad

#endif
