#ifndef INNOVGRAD_MONTECARLO_HPP
#define INNOVGRAD_MONTECARLO_HPP

#include <cstdint>

#include "innovgrad/model.hpp"

namespace innovgrad {

struct SimConfig {
  long horizon = 1000000;  // post-burn-in steps
  long burn_in = 10000;
  std::uint64_t seed = 0;
  Vector x0;     // initial state; zero vector if empty
  Vector xhat0;  // initial estimate; zero vector if empty
};

struct MonteCarloEstimate {
  Matrix Sigma_delta_hat;
  Matrix K_hat;
  Matrix P_hat;
  double J_hat;
  long n_samples;
  double stderr_J;  // naive i.i.d. formula; optimistic under correlation
  std::uint64_t seed;
};

// Runs the plant and filter with Gaussian noise and time-averages the
// post-burn-in outer products of innovation and estimation error.
MonteCarloEstimate simulate(const SystemModel& sys, const Gain& L,
                            const SimConfig& cfg);

// Entrywise central differences of the analytic innovations loss; an oracle
// for the closed-form gradient.
Matrix fd_gradient(const SystemModel& sys, const Gain& L, double h);

}  // namespace innovgrad

#endif
