#include "innovgrad/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <sstream>

namespace innovgrad {

namespace {

void check_gain_dims(const SystemModel& sys, const Gain& L) {
  if (L.rows() != sys.n() || L.cols() != sys.p()) {
    std::ostringstream os;
    os << "gain: expected " << sys.n() << "x" << sys.p() << ", got "
       << L.rows() << "x" << L.cols();
    throw DimensionError(os.str());
  }
  require_finite(L, "gain");
}

void check_definite(const Matrix& S, const char* name) {
  const double lmax = lambda_max_sym(S);
  const double lmin = lambda_min_sym(S);
  if (lmin <= 1e-12 * lmax) {
    std::ostringstream os;
    os << name << " not positive definite: lambda_min = " << lmin
       << ", lambda_max = " << lmax;
    throw DomainError(os.str());
  }
}

double require_stable(const SystemModel& sys, const Gain& L, LoopForm form) {
  const Matrix M = (form == LoopForm::filter) ? closed_loop(sys, L)
                                              : predictor_closed_loop(sys, L);
  const double rho = spectral_radius(M);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "not stabilizing: rho(" << (form == LoopForm::filter ? "F(L)" : "A-LC")
       << ") = " << rho;
    throw InstabilityError(os.str(), rho);
  }
  return rho;
}

}  // namespace

SystemModel SystemModel::create(Matrix A, Matrix C, Matrix Qw, Matrix Rv) {
  require_square(A, "A");
  require_finite(A, "A");
  require_finite(C, "C");
  const auto n = A.rows();
  const auto p = C.rows();
  if (n < 1 || p < 1) throw DimensionError("system dimensions must be >= 1");
  if (C.cols() != n) {
    throw DimensionError("C: column count must equal the state dimension");
  }
  if (Qw.rows() != n || Qw.cols() != n) {
    throw DimensionError("Q_w: must be n x n");
  }
  if (Rv.rows() != p || Rv.cols() != p) {
    throw DimensionError("R_v: must be p x p");
  }
  require_finite(Qw, "Q_w");
  require_finite(Rv, "R_v");
  Qw = symmetrize(Qw, "Q_w");
  Rv = symmetrize(Rv, "R_v");
  check_definite(Qw, "Q_w");
  check_definite(Rv, "R_v");
  return SystemModel{std::move(A), std::move(C), std::move(Qw), std::move(Rv)};
}

SystemModel spurious_example_system() {
  Matrix A(2, 2), C(1, 2);
  A << 0, 1, 0, 0;
  C << 1, 0;
  return SystemModel::create(A, C, Matrix::Identity(2, 2),
                             Matrix::Identity(1, 1));
}

Matrix closed_loop(const SystemModel& sys, const Gain& L) {
  check_gain_dims(sys, L);
  return (Matrix::Identity(sys.n(), sys.n()) - L * sys.C) * sys.A;
}

Matrix predictor_closed_loop(const SystemModel& sys, const Gain& L) {
  check_gain_dims(sys, L);
  return sys.A - L * sys.C;
}

bool is_stabilizing(const SystemModel& sys, const Gain& L, LoopForm form,
                    double margin) {
  const Matrix M = (form == LoopForm::filter) ? closed_loop(sys, L)
                                              : predictor_closed_loop(sys, L);
  return spectral_radius(M) < 1.0 - margin;
}

Matrix effective_noise_cov(const SystemModel& sys, const Gain& L) {
  check_gain_dims(sys, L);
  const Matrix ImLC = Matrix::Identity(sys.n(), sys.n()) - L * sys.C;
  Matrix Q = ImLC * sys.Qw * ImLC.transpose() + L * sys.Rv * L.transpose();
  return 0.5 * (Q + Q.transpose());
}

Matrix error_cov(const SystemModel& sys, const Gain& L) {
  require_stable(sys, L, LoopForm::filter);
  return solve_dlyap(closed_loop(sys, L), effective_noise_cov(sys, L));
}

Matrix apriori_cov(const SystemModel& sys, const Gain& L) {
  const Matrix P = error_cov(sys, L);
  Matrix Pm = sys.A * P * sys.A.transpose() + sys.Qw;
  return 0.5 * (Pm + Pm.transpose());
}

Matrix innovation_cov(const SystemModel& sys, const Gain& L) {
  Matrix S = sys.C * apriori_cov(sys, L) * sys.C.transpose() + sys.Rv;
  return 0.5 * (S + S.transpose());
}

double innov_loss(const SystemModel& sys, const Gain& L) {
  return innovation_cov(sys, L).trace();
}

Matrix obs_gramian(const SystemModel& sys, const Gain& L) {
  require_stable(sys, L, LoopForm::filter);
  const Matrix F = closed_loop(sys, L);
  const Matrix CA = sys.C * sys.A;
  return solve_dlyap(F.transpose(), CA.transpose() * CA);
}

Matrix cross_cov(const SystemModel& sys, const Gain& L) {
  require_stable(sys, L, LoopForm::filter);
  const Matrix F = closed_loop(sys, L);
  const Matrix P = solve_dlyap(F, effective_noise_cov(sys, L));
  const Matrix ImLC = Matrix::Identity(sys.n(), sys.n()) - L * sys.C;
  return F * P * sys.A.transpose() * sys.C.transpose() +
         ImLC * sys.Qw * sys.C.transpose() - L * sys.Rv;
}

Matrix innov_loss_gradient(const SystemModel& sys, const Gain& L) {
  return -2.0 * obs_gramian(sys, L) * cross_cov(sys, L);
}

double pred_loss(const SystemModel& sys, const Gain& L) {
  require_stable(sys, L, LoopForm::predictor);
  const Matrix Ft = predictor_closed_loop(sys, L);
  Matrix S = sys.Qw + L * sys.Rv * L.transpose();
  S = 0.5 * (S + S.transpose());
  const Matrix Pt = solve_dlyap(Ft, S);
  return (sys.C * Pt * sys.C.transpose() + sys.Rv).trace();
}

GainAnalysis analyze(const SystemModel& sys, const Gain& L, double margin) {
  check_gain_dims(sys, L);
  GainAnalysis g;
  g.L = L;
  g.F = closed_loop(sys, L);
  g.rho_F = spectral_radius(g.F);
  if (g.rho_F >= 1.0 - margin) {
    std::ostringstream os;
    os << "not stabilizing: rho(F(L)) = " << g.rho_F;
    throw InstabilityError(os.str(), g.rho_F);
  }
  g.Q_eta = effective_noise_cov(sys, L);
  g.P = solve_dlyap(g.F, g.Q_eta);
  g.P_minus = sys.A * g.P * sys.A.transpose() + sys.Qw;
  g.P_minus = 0.5 * (g.P_minus + g.P_minus.transpose()).eval();
  g.Sigma_delta = sys.C * g.P_minus * sys.C.transpose() + sys.Rv;
  g.Sigma_delta = 0.5 * (g.Sigma_delta + g.Sigma_delta.transpose()).eval();
  g.J_innov = g.Sigma_delta.trace();
  const Matrix CA = sys.C * sys.A;
  g.W_o = solve_dlyap(g.F.transpose(), CA.transpose() * CA);
  const Matrix ImLC = Matrix::Identity(sys.n(), sys.n()) - L * sys.C;
  g.K = g.F * g.P * sys.A.transpose() * sys.C.transpose() +
        ImLC * sys.Qw * sys.C.transpose() - L * sys.Rv;
  g.grad = -2.0 * g.W_o * g.K;
  g.lambda_min_Wo = lambda_min_sym(g.W_o);
  return g;
}

namespace {

// Rank of the stacked observability matrix [H; HA; ...; HA^{n-1}].
int obs_matrix_rank(const Matrix& A, const Matrix& H, double tol) {
  const auto n = A.rows();
  const auto p = H.rows();
  Matrix O(p * n, n);
  Matrix block = H;
  for (Eigen::Index k = 0; k < n; ++k) {
    O.middleRows(k * p, p) = block;
    block = block * A;
  }
  return sym_rank(O, tol);
}

}  // namespace

AssumptionReport check_assumptions(const SystemModel& sys, double tol) {
  AssumptionReport r{};
  const auto n = sys.n();
  r.rank_obs_A_CA = obs_matrix_rank(sys.A, sys.C * sys.A, tol);
  r.observable_A_CA = (r.rank_obs_A_CA == n);
  r.rank_obs_A_C = obs_matrix_rank(sys.A, sys.C, tol);
  r.observable_A_C = (r.rank_obs_A_C == n);
  r.A_invertible = (sym_rank(sys.A, tol) == n);

  // PBH: rank [A - lambda I | Qw^{1/2}] = n for every |lambda| >= 1 - tol.
  const Matrix B = sym_sqrt(sys.Qw);
  r.stabilizable_A_Qw_sqrt = true;
  Eigen::EigenSolver<Matrix> es(sys.A, /*computeEigenvectors=*/false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0 - tol) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) =
        sys.A.cast<std::complex<double>>() -
        lam * Eigen::MatrixXcd::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) > tol * sv(0)) ++rank;
    }
    if (rank < n) r.stabilizable_A_Qw_sqrt = false;
  }
  return r;
}

}  // namespace innovgrad
