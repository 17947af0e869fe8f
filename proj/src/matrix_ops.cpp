#include "innovgrad/matrix_ops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace innovgrad {

void require_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) {
    throw DomainError(std::string(name) + ": entries must be finite");
  }
}

void require_square(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) {
    std::ostringstream os;
    os << name << ": expected square matrix, got " << M.rows() << "x"
       << M.cols();
    throw DimensionError(os.str());
  }
}

Matrix symmetrize(const Matrix& S, const char* name) {
  require_square(S, name);
  const double scale = 1.0 + S.cwiseAbs().maxCoeff();
  const double skew = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12 * scale) {
    std::ostringstream os;
    os << name << ": not symmetric, max |S_ij - S_ji| = " << skew;
    throw DomainError(os.str());
  }
  return 0.5 * (S + S.transpose());
}

double spectral_radius(const Matrix& M) {
  require_square(M, "spectral_radius");
  require_finite(M, "spectral_radius");
  if (M.rows() == 1) return std::abs(M(0, 0));
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double lambda_min_sym(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lambda_max_sym(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Matrix solve_dlyap(const Matrix& F, const Matrix& Q) {
  require_square(F, "solve_dlyap: F");
  require_square(Q, "solve_dlyap: Q");
  if (F.rows() != Q.rows()) {
    throw DimensionError("solve_dlyap: F and Q orders differ");
  }
  const double rho = spectral_radius(F);
  if (rho >= 1.0 - 1e-9) {
    std::ostringstream os;
    os << "solve_dlyap: rho(F) = " << rho << " >= 1";
    throw InstabilityError(os.str(), rho);
  }

  // Squared Smith: X <- X + Fk X Fk^T, Fk <- Fk^2; the tail contribution is
  // bounded by ||Fk||^2 ||X||.
  Matrix X = 0.5 * (Q + Q.transpose());
  Matrix Fk = F;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    X += Fk * X * Fk.transpose();
    Fk = Fk * Fk;
    if (!X.allFinite() || !Fk.allFinite()) {
      throw NumericalError("solve_dlyap: iteration overflowed");
    }
    const double tail = Fk.norm() * Fk.norm() * X.norm();
    if (tail < 1e-14 * (1.0 + X.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("solve_dlyap: doubling iteration did not converge in 100 steps");
  }
  X = 0.5 * (X + X.transpose());
  const double residual = (X - F * X * F.transpose() - Q).norm();
  if (residual > 1e-10 * (1.0 + X.norm())) {
    std::ostringstream os;
    os << "solve_dlyap: residual " << residual << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  return X;
}

DareSolution solve_dare_predictive(const Matrix& A, const Matrix& C,
                                   const Matrix& Qw, const Matrix& Rv) {
  const auto n = A.rows();
  const auto p = C.rows();
  require_square(A, "solve_dare_predictive: A");
  if (C.cols() != n || Qw.rows() != n || Qw.cols() != n || Rv.rows() != p ||
      Rv.cols() != p) {
    throw DimensionError("solve_dare_predictive: inconsistent dimensions");
  }

  Matrix P = symmetrize(Qw, "solve_dare_predictive: Q_w");
  const Matrix Rvs = symmetrize(Rv, "solve_dare_predictive: R_v");
  int it = 0;
  const int max_iters = 100000;
  for (; it < max_iters; ++it) {
    const Matrix S = C * P * C.transpose() + Rvs;
    const Matrix PCt = P * C.transpose();
    const Matrix Pnext =
        A * (P - PCt * S.ldlt().solve(PCt.transpose())) * A.transpose() + Qw;
    const double diff = (Pnext - P).norm();
    P = 0.5 * (Pnext + Pnext.transpose());
    if (diff <= 1e-13) break;
  }
  if (it == max_iters) {
    throw NumericalError("solve_dare_predictive: fixed-point iteration did not converge");
  }

  const Matrix S = C * P * C.transpose() + Rvs;
  const Matrix gain = (S.ldlt().solve(C * P).transpose()).eval();
  const Matrix residual_mat =
      A * (P - P * C.transpose() * S.ldlt().solve(C * P)) * A.transpose() + Qw -
      P;
  const double residual = residual_mat.norm();
  if (residual > 1e-10 * (1.0 + P.norm())) {
    std::ostringstream os;
    os << "solve_dare_predictive: residual " << residual << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  const Matrix F = (Matrix::Identity(n, n) - gain * C) * A;
  const double rho = spectral_radius(F);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "solve_dare_predictive: resulting gain not stabilizing, rho = " << rho;
    throw NumericalError(os.str());
  }
  return DareSolution{P, gain, it, residual};
}

int sym_rank(const Matrix& M, double tol) {
  if (tol <= 0) throw DomainError("sym_rank: tol must be positive");
  require_finite(M, "sym_rank");
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = tol * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++r;
  }
  return r;
}

Matrix sym_pinv_sqrt(const Matrix& N, double tol) {
  const Matrix S = symmetrize(N, "sym_pinv_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const Vector& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  Vector d = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol * std::max(lmax, 0.0)) {
      std::ostringstream os;
      os << "sym_pinv_sqrt: eigenvalue " << ev(i) << " is negative";
      throw NotPsdError(os.str());
    }
    if (ev(i) > tol * std::max(lmax, 0.0)) {
      d(i) = 1.0 / std::sqrt(ev(i));
    }
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix sym_sqrt(const Matrix& N) {
  const Matrix S = symmetrize(N, "sym_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace innovgrad
