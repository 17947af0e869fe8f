#ifndef INNOVGRAD_MATRIX_OPS_HPP
#define INNOVGRAD_MATRIX_OPS_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace innovgrad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dimension or shape mismatch between inputs.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input violates a domain invariant (definiteness, stability of an initial
// gain, malformed serialized data, ...).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A steady-state quantity was requested at a non-stabilizing closed loop.
struct InstabilityError : std::runtime_error {
  double rho;
  InstabilityError(const std::string& msg, double rho_in)
      : std::runtime_error(msg), rho(rho_in) {}
};

// An iteration failed to converge or a residual tolerance was not met.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A matrix required to be positive semidefinite is not.
struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_finite(const Matrix& M, const char* name);
void require_square(const Matrix& M, const char* name);

// Checks |S - S^T| against 1e-12 * (1 + max|S|) and returns (S + S^T)/2.
Matrix symmetrize(const Matrix& S, const char* name = "matrix");

// max |lambda_i(M)| over the (possibly complex) eigenvalues of a square M.
double spectral_radius(const Matrix& M);

// Smallest / largest eigenvalue of a symmetric matrix.
double lambda_min_sym(const Matrix& S);
double lambda_max_sym(const Matrix& S);

// Unique solution X of X = F X F^T + Q for rho(F) < 1, Q symmetric psd.
// Squared-Smith doubling iteration.
Matrix solve_dlyap(const Matrix& F, const Matrix& Q);

struct DareSolution {
  Matrix Pminus;   // fixed point of the predictive Riccati map
  Matrix gain;     // L_KF = Pminus C^T (C Pminus C^T + R_v)^{-1}
  int iterations;
  double residual;
};

// Fixed-point iteration for the predictive discrete algebraic Riccati
// equation; returns the steady-state a priori covariance and the Kalman gain.
DareSolution solve_dare_predictive(const Matrix& A, const Matrix& C,
                                   const Matrix& Qw, const Matrix& Rv);

// Number of singular values above tol * sigma_max.
int sym_rank(const Matrix& M, double tol = 1e-8);

// N^{dagger/2} for symmetric psd N via eigendecomposition; eigenvalues below
// tol * lambda_max are treated as zero.
Matrix sym_pinv_sqrt(const Matrix& N, double tol = 1e-8);

// Symmetric psd square root; tiny negative eigenvalues are clamped to zero.
Matrix sym_sqrt(const Matrix& N);

}  // namespace innovgrad

#endif
