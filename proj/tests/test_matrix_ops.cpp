#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace innovgrad;
using namespace test_support;

TEST_CASE("spectral_radius: zero matrix") {
  CHECK(spectral_radius(Matrix::Zero(2, 2)) == 0.0);
}

TEST_CASE("spectral_radius: triangular error-transition matrix") {
  Matrix F(2, 2);
  F << 0, 1 - 0.3, 0, -0.5;
  CHECK(spectral_radius(F) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("spectral_radius: random 5x5 vs companion-polynomial oracle") {
  GaussianStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix M = rng.next_matrix(5, 5);
    const double r = spectral_radius(M);
    const double r_oracle = spectral_radius_oracle(M);
    CHECK(std::abs(r - r_oracle) <= 1e-8 * std::max(1.0, r_oracle));
  }
}

TEST_CASE("spectral_radius: similarity invariance") {
  GaussianStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix M = rng.next_matrix(4, 4);
    Matrix T = rng.next_matrix(4, 4);
    T += 4.0 * Matrix::Identity(4, 4);  // keep T well-conditioned
    const Matrix Ms = T * M * T.inverse();
    CHECK(std::abs(spectral_radius(M) - spectral_radius(Ms)) <=
          1e-8 * (1.0 + spectral_radius(M)));
  }
}

TEST_CASE("spectral_radius: rejects non-square input") {
  CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("solve_dlyap: F = 0 returns Q") {
  const Matrix X = solve_dlyap(Matrix::Zero(3, 3), Matrix::Identity(3, 3));
  CHECK((X - Matrix::Identity(3, 3)).norm() <= 1e-14);
}

TEST_CASE("solve_dlyap: scalar geometric series") {
  Matrix F(1, 1), Q(1, 1);
  F << 0.5;
  Q << 1.0;
  CHECK(solve_dlyap(F, Q)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("solve_dlyap: example closed loop at l2 = 0.5") {
  const SystemModel sys = spurious_example_system();
  const Gain L = example_gain(0.3, 0.5);
  const Matrix X = solve_dlyap(closed_loop(sys, L), effective_noise_cov(sys, L));
  // (2,2) entry solves c = l2^2 c + (2 l2^2 + 1).
  CHECK(X(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("solve_dlyap: rejects unstable F") {
  Matrix F(1, 1), Q(1, 1);
  F << 1.0;
  Q << 1.0;
  CHECK_THROWS_AS(solve_dlyap(F, Q), InstabilityError);
}

TEST_CASE("solve_dlyap: psd output and residual, random stable F up to n=10") {
  GaussianStream rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 9);  // 2..10
    Matrix F = rng.next_matrix(n, n);
    F *= (0.3 + 0.6 * rng.uniform()) / spectral_radius(F);
    const Matrix G = rng.next_matrix(n, n);
    const Matrix Q = G * G.transpose();
    const Matrix X = solve_dlyap(F, Q);
    CHECK((X - X.transpose()).norm() <= 1e-12 * (1.0 + X.norm()));
    CHECK(lambda_min_sym(X) >= -1e-10 * std::max(lambda_max_sym(X), 1.0));
    CHECK((X - F * X * F.transpose() - Q).norm() <= 1e-10 * (1.0 + X.norm()));
  }
}

TEST_CASE("solve_dlyap: agrees with the truncated series") {
  GaussianStream rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 4);
    Matrix F = rng.next_matrix(n, n);
    const double rho = 0.3 + 0.6 * rng.uniform();  // <= 0.9
    F *= rho / spectral_radius(F);
    const Matrix G = rng.next_matrix(n, n);
    const Matrix Q = G * G.transpose();
    const int K =
        static_cast<int>(std::ceil(0.5 * std::log(1e-12) / std::log(rho))) + 50;
    const Matrix X = solve_dlyap(F, Q);
    CHECK((X - dlyap_series(F, Q, K)).norm() <= 1e-8 * (1.0 + X.norm()));
  }
}

TEST_CASE("solve_dare_predictive: A = 0 gives Pminus = Q_w in one step") {
  GaussianStream rng(15);
  const int n = 3, p = 2;
  const Matrix C = rng.next_matrix(p, n);
  const auto sol = solve_dare_predictive(Matrix::Zero(n, n), C,
                                         Matrix::Identity(n, n),
                                         Matrix::Identity(p, p));
  CHECK((sol.Pminus - Matrix::Identity(n, n)).norm() <= 1e-12);
  const Matrix expected =
      C.transpose() *
      (C * C.transpose() + Matrix::Identity(p, p)).inverse();
  CHECK((sol.gain - expected).norm() <= 1e-10);
}

TEST_CASE("solve_dare_predictive: scalar fixed point oracle") {
  Matrix A(1, 1), C(1, 1), Q(1, 1), R(1, 1);
  A << 0.9;
  C << 1.0;
  Q << 1.0;
  R << 1.0;
  // Independent scalar iteration.
  double P = 1.0;
  for (int i = 0; i < 100000; ++i) {
    const double Pn = 0.81 * (P - P * P / (P + 1.0)) + 1.0;
    if (std::abs(Pn - P) < 1e-15) {
      P = Pn;
      break;
    }
    P = Pn;
  }
  const auto sol = solve_dare_predictive(A, C, Q, R);
  CHECK(sol.Pminus(0, 0) == doctest::Approx(P).epsilon(1e-12));
  CHECK(sol.gain(0, 0) == doctest::Approx(P / (P + 1.0)).epsilon(1e-12));
}

TEST_CASE("solve_dare_predictive: example gain zeroes the cross-covariance") {
  const SystemModel sys = spurious_example_system();
  const auto sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
  CHECK(cross_cov(sys, sol.gain).norm() <= 1e-8);
}

TEST_CASE("solve_dare_predictive: residual and stabilizing gain on random systems") {
  GaussianStream rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemModel sys = random_system(rng, 2 + trial % 4, 1 + trial % 2);
    const auto sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
    CHECK(sol.residual <= 1e-10 * (1.0 + sol.Pminus.norm()));
    CHECK(is_stabilizing(sys, sol.gain, LoopForm::filter));
  }
}

TEST_CASE("sym_rank: examples") {
  Matrix N(2, 2);
  N << 0, 1, 0, 0;
  CHECK(sym_rank(N, 1e-8) == 1);
  CHECK(sym_rank(Matrix::Identity(3, 3), 1e-8) == 3);

  GaussianStream rng(17);
  // 4x3 built from two outer products: rank 2 by construction.
  const Matrix M = rng.next_vector(4) * rng.next_vector(3).transpose() +
                   rng.next_vector(4) * rng.next_vector(3).transpose();
  CHECK(sym_rank(M, 1e-8) == 2);
}

TEST_CASE("sym_pinv_sqrt: identity and diagonal cases") {
  CHECK((sym_pinv_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() <=
        1e-12);
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 4.0;
  const Matrix S = sym_pinv_sqrt(D);
  CHECK(S(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(S(1, 1)) <= 1e-14);
}

TEST_CASE("sym_pinv_sqrt: projector identity on rank-deficient psd input") {
  GaussianStream rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix G = rng.next_matrix(5, 3);
    const Matrix N = G * G.transpose();  // rank 3 psd
    const Matrix Nph = sym_pinv_sqrt(N);
    const Matrix proj = Nph * N * Nph;
    CHECK((proj * proj - proj).norm() <= 1e-9);
    // Projector acts as identity on range(N).
    const Vector z = N * rng.next_vector(5);
    CHECK((proj * z - z).norm() <= 1e-9 * (1.0 + z.norm()));
  }
}

TEST_CASE("sym_pinv_sqrt: rejects indefinite input") {
  Matrix N(2, 2);
  N << 1, 0, 0, -1;
  CHECK_THROWS_AS(sym_pinv_sqrt(N), NotPsdError);
}
