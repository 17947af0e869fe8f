// innovgrad: analyses of the innovations loss of a discrete LTI filter gain
// (closed-form steady-state quantities, gradient descent to the Kalman gain,
// rate certificates, Monte Carlo verification).

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "innovgrad/descent.hpp"
#include "innovgrad/json_io.hpp"
#include "innovgrad/model.hpp"
#include "innovgrad/montecarlo.hpp"

using nlohmann::json;
using namespace innovgrad;

namespace {

int log_level() {
  static int level = [] {
    const char* env = std::getenv("INNOVGRAD_LOG");
    if (!env) return 0;
    const std::string s(env);
    if (s == "debug") return 2;
    if (s == "info") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[info] " << msg << "\n";
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void print_matrix(std::ostream& out, const std::string& name, const Matrix& M) {
  out << name << " (" << M.rows() << "x" << M.cols() << "):\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << "  ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "% .10g", M(i, j));
      out << buf << (j + 1 < M.cols() ? "  " : "");
    }
    out << "\n";
  }
}

struct Options {
  std::string system = "paper-example";
  std::string gain;
  std::uint64_t seed = 0;
  double tol = -1.0;
  long horizon = 1000000;
  long burn_in = -1;
  std::string mode = "gd";
  std::string out;
  std::string format = "table";
};

SystemModel get_system(const Options& opt) {
  if (opt.system == "paper-example") return spurious_example_system();
  log_info("loading system from " + opt.system);
  return load_system_file(opt.system);
}

Gain get_gain_or_zero(const Options& opt, const SystemModel& sys) {
  if (opt.gain.empty()) return Matrix::Zero(sys.n(), sys.p());
  return load_gain_file(opt.gain);
}

// Writes to --out when given, else stdout.
class Sink {
 public:
  explicit Sink(const Options& opt) {
    if (!opt.out.empty()) {
      file_.open(opt.out);
      if (!file_) throw DomainError("cannot open output file: " + opt.out);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_analyze(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const Gain L = get_gain_or_zero(opt, sys);
  const GainAnalysis g = analyze(sys, L);
  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json j{{"system", system_to_json(sys)},
           {"L", matrix_to_json(g.L)},
           {"F", matrix_to_json(g.F)},
           {"rho_F", g.rho_F},
           {"Q_eta", matrix_to_json(g.Q_eta)},
           {"P", matrix_to_json(g.P)},
           {"P_minus", matrix_to_json(g.P_minus)},
           {"Sigma_delta", matrix_to_json(g.Sigma_delta)},
           {"W_o", matrix_to_json(g.W_o)},
           {"K", matrix_to_json(g.K)},
           {"J_innov", g.J_innov},
           {"grad", matrix_to_json(g.grad)},
           {"lambda_min_Wo", g.lambda_min_Wo}};
    out << j.dump(2) << "\n";
  } else {
    out << "J_innov        = " << fmt(g.J_innov) << "\n";
    out << "rho(F)         = " << fmt(g.rho_F) << "\n";
    out << "||grad||_F     = " << fmt(g.grad.norm()) << "\n";
    out << "||K||_F        = " << fmt(g.K.norm()) << "\n";
    out << "lambda_min(Wo) = " << fmt(g.lambda_min_Wo) << "\n";
    print_matrix(out, "L", g.L);
    print_matrix(out, "P", g.P);
    print_matrix(out, "Sigma_delta", g.Sigma_delta);
    print_matrix(out, "K", g.K);
    print_matrix(out, "grad", g.grad);
  }
  return 0;
}

int cmd_kalman(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const DareSolution sol = solve_dare_predictive(sys.A, sys.C, sys.Qw, sys.Rv);
  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json j{{"L_KF", matrix_to_json(sol.gain)},
           {"P_minus", matrix_to_json(sol.Pminus)},
           {"residual", sol.residual},
           {"iterations", sol.iterations}};
    out << j.dump(2) << "\n";
  } else {
    print_matrix(out, "L_KF", sol.gain);
    print_matrix(out, "P_minus", sol.Pminus);
    out << "residual   = " << fmt(sol.residual) << "\n";
    out << "iterations = " << sol.iterations << "\n";
  }
  return 0;
}

DescentConfig make_config(const Options& opt) {
  DescentConfig cfg;
  cfg.mode = (opt.mode == "flow") ? DescentMode::flow_rk4
                                  : DescentMode::gd_linesearch;
  if (opt.tol > 0) cfg.grad_tol = opt.tol;
  return cfg;
}

const char* status_name(DescentStatus s) {
  switch (s) {
    case DescentStatus::converged: return "converged";
    case DescentStatus::max_iters: return "max_iters";
    default: return "left_stabilizing_set";
  }
}

int cmd_descend(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const Gain L0 = get_gain_or_zero(opt, sys);
  const DescentConfig cfg = make_config(opt);
  const DescentTrajectory traj = descend(sys, L0, cfg);
  const auto& last = traj.samples.back();

  if (!opt.out.empty()) {
    Sink sink(opt);
    write_trajectory_csv(traj, sink.stream());
    // Gains go in a JSON file next to the CSV.
    json gains = json::array();
    for (const auto& s : traj.samples) {
      gains.push_back(json{{"t", s.t}, {"L", matrix_to_json(s.L)}});
    }
    std::ofstream gf(opt.out + ".gains.json");
    gf << gains.dump() << "\n";
  } else if (opt.format == "csv") {
    write_trajectory_csv(traj, std::cout);
  }

  std::ostream& out = std::cout;
  if (opt.format == "json" && opt.out.empty()) {
    json j{{"status", status_name(traj.status)},
           {"samples", traj.samples.size()},
           {"final_J", last.J},
           {"final_grad_norm", last.grad_norm},
           {"assumptions_hold", traj.assumptions_hold},
           {"final_L", matrix_to_json(last.L)}};
    out << j.dump(2) << "\n";
  } else if (opt.format != "csv") {
    out << "status          = " << status_name(traj.status) << "\n";
    out << "samples         = " << traj.samples.size() << "\n";
    out << "final J         = " << fmt(last.J) << "\n";
    out << "final ||grad||  = " << fmt(last.grad_norm) << "\n";
    out << "(A,CA) observable = " << (traj.assumptions_hold ? "yes" : "no")
        << "\n";
    print_matrix(out, "final L", last.L);
  }
  return traj.status == DescentStatus::converged ? 0 : 3;
}

int cmd_rate(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const Gain L0 = get_gain_or_zero(opt, sys);
  DescentConfig cfg = make_config(opt);
  cfg.mode = DescentMode::flow_rk4;
  log_info("integrating gradient flow");
  const DescentTrajectory traj = descend(sys, L0, cfg);
  const RateCertificate cert = rate_certificate(sys, traj);
  double kappa_ls = -1.0;
  try {
    kappa_ls = estimate_kappa_levelset(sys, L0, 500, opt.seed);
  } catch (const NumericalError&) {
    // Level-set sampling is best-effort; the certificate stands on its own.
  }
  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json j{{"kappa_hat", cert.kappa_hat},
           {"c_hat", cert.c_hat},
           {"J_star", cert.J_star},
           {"bound_satisfied", cert.bound_satisfied},
           {"max_violation", cert.max_violation},
           {"kappa_levelset_estimate", kappa_ls},
           {"flow_samples", traj.samples.size()}};
    out << j.dump(2) << "\n";
  } else {
    out << "kappa_hat (trajectory min lambda_min(Wo)) = " << fmt(cert.kappa_hat)
        << "\n";
    out << "c_hat (trajectory max gap/||K||^2)        = " << fmt(cert.c_hat)
        << "\n";
    out << "J*                                        = " << fmt(cert.J_star)
        << "\n";
    out << "bound_satisfied                           = "
        << (cert.bound_satisfied ? "true" : "false") << "\n";
    out << "max_violation                             = "
        << fmt(cert.max_violation) << "\n";
    if (kappa_ls >= 0) {
      out << "kappa level-set estimate (upper)          = " << fmt(kappa_ls)
          << "\n";
    }
  }
  return cert.bound_satisfied ? 0 : 3;
}

int cmd_verify_grad(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const Gain L = get_gain_or_zero(opt, sys);
  const double h = (opt.tol > 0) ? opt.tol : 1e-5;
  const Matrix g = innov_loss_gradient(sys, L);
  const Matrix fd = fd_gradient(sys, L, h);
  const double scale = std::max(g.norm(), 1e-12);
  const double max_rel = (g - fd).cwiseAbs().maxCoeff() / scale;
  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json j{{"max_relative_mismatch", max_rel},
           {"h", h},
           {"grad", matrix_to_json(g)},
           {"fd_grad", matrix_to_json(fd)}};
    out << j.dump(2) << "\n";
  } else {
    out << "max relative FD mismatch = " << fmt(max_rel) << " (h = " << fmt(h)
        << ")\n";
    print_matrix(out, "analytic gradient", g);
    print_matrix(out, "finite-difference gradient", fd);
  }
  return 0;
}

int cmd_montecarlo(const Options& opt) {
  const SystemModel sys = get_system(opt);
  const Gain L = get_gain_or_zero(opt, sys);
  SimConfig cfg;
  cfg.horizon = opt.horizon;
  cfg.burn_in =
      (opt.burn_in >= 0) ? opt.burn_in : std::max<long>(1000, opt.horizon / 100);
  cfg.seed = opt.seed;
  log_info("simulating " + std::to_string(cfg.horizon) + " steps");
  const MonteCarloEstimate est = simulate(sys, L, cfg);
  const double J = innov_loss(sys, L);
  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json j = estimate_to_json(est, cfg.horizon);
    j["J_innov_analytic"] = J;
    out << j.dump(2) << "\n";
  } else {
    out << "J_hat     = " << fmt(est.J_hat) << "  (analytic " << fmt(J)
        << ")\n";
    out << "stderr_J  = " << fmt(est.stderr_J) << "\n";
    out << "samples   = " << est.n_samples << ", seed = " << est.seed << "\n";
    print_matrix(out, "Sigma_delta_hat", est.Sigma_delta_hat);
    print_matrix(out, "K_hat", est.K_hat);
    print_matrix(out, "P_hat", est.P_hat);
  }
  return 0;
}

int cmd_spurious_demo(const Options& opt) {
  const SystemModel sys = spurious_example_system();
  const AssumptionReport rep = check_assumptions(sys);
  Sink sink(opt);
  auto& out = sink.stream();

  const double l2_grid[] = {-0.9, -0.5, -0.25, 0.0, 0.25, 0.5, 0.9};
  if (opt.format == "json" || opt.format == "csv") {
    if (opt.format == "csv") {
      out << "l2,J,grad_l1,grad_l2\n";
      for (double l2 : l2_grid) {
        Gain L(2, 1);
        L << 0.0, l2;
        const Matrix g = innov_loss_gradient(sys, L);
        out << fmt(l2) << "," << fmt(innov_loss(sys, L)) << "," << fmt(g(0, 0))
            << "," << fmt(g(1, 0)) << "\n";
      }
    } else {
      json rows = json::array();
      for (double l2 : l2_grid) {
        Gain L(2, 1);
        L << 0.0, l2;
        const Matrix g = innov_loss_gradient(sys, L);
        rows.push_back(json{{"l2", l2},
                            {"J", innov_loss(sys, L)},
                            {"grad", matrix_to_json(g)}});
      }
      json j{{"system", system_to_json(sys)},
             {"rank_obs_A_CA", rep.rank_obs_A_CA},
             {"observable_A_CA", rep.observable_A_CA},
             {"observable_A_C", rep.observable_A_C},
             {"landscape", rows}};
      out << j.dump(2) << "\n";
    }
    return 0;
  }

  out << "Two-state system with a line of spurious stationary points\n";
  out << "A = [[0,1],[0,0]], C = [1,0], Q_w = I, R_v = 1\n\n";
  out << "(A, C)  observable: " << (rep.observable_A_C ? "yes" : "no")
      << " (rank " << rep.rank_obs_A_C << ")\n";
  out << "(A, CA) observable: " << (rep.observable_A_CA ? "yes" : "no")
      << " (rank " << rep.rank_obs_A_CA << ")\n\n";
  out << "J depends on l2 only; every L = (l1, 0)^T is a stationary point.\n\n";
  out << "   l2          J(l2)      dJ/dl1      dJ/dl2\n";
  for (double l2 : l2_grid) {
    Gain L(2, 1);
    L << 0.0, l2;
    const Matrix g = innov_loss_gradient(sys, L);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %5.2f  %11.6f  %10.3g  %10.6f\n", l2,
                  innov_loss(sys, L), g(0, 0), g(1, 0));
    out << buf;
  }
  return 0;
}

int cmd_coercivity(const Options& opt) {
  const SystemModel sys = get_system(opt);
  Gain dir;
  if (!opt.gain.empty()) {
    dir = load_gain_file(opt.gain);
  } else if (opt.system == "paper-example") {
    dir = Matrix::Zero(sys.n(), sys.p());
    dir(sys.n() - 1, 0) = 1.0;
  } else {
    dir = Matrix::Ones(sys.n(), sys.p());
  }
  dir /= dir.norm();
  const bool boundary = (opt.mode == "boundary");
  const ProbeMode mode = boundary ? ProbeMode::boundary : ProbeMode::ray;
  const LoopForm form = boundary ? LoopForm::filter : LoopForm::predictor;

  // Find where the ray crosses the stability boundary, if it does, and probe
  // geometrically toward it; otherwise sweep doubling alphas.
  auto stable_at = [&](double a) {
    return is_stabilizing(sys, a * dir, form);
  };
  std::vector<double> alphas;
  double hi = 1.0;
  bool crosses = false;
  for (int i = 0; i < 64 && !crosses; ++i) {
    if (!stable_at(hi)) crosses = true;
    else hi *= 2.0;
  }
  if (crosses) {
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      (stable_at(mid) ? lo : hi) = mid;
    }
    for (int k = 1; k <= 30; ++k) {
      alphas.push_back(lo * (1.0 - std::pow(2.0, -k)));
    }
  } else {
    for (int k = 0; k <= 60; ++k) alphas.push_back(std::pow(2.0, k) * 0.1);
  }
  const auto points = coercivity_probe(sys, dir, alphas, mode);

  Sink sink(opt);
  auto& out = sink.stream();
  if (opt.format == "json") {
    json rows = json::array();
    for (const auto& p : points) {
      rows.push_back(json{{"alpha", p.alpha}, {"J", p.J}, {"rho", p.rho}});
    }
    out << json{{"mode", boundary ? "boundary" : "ray"},
                {"direction", matrix_to_json(dir)},
                {"points", rows}}
               .dump(2)
        << "\n";
  } else if (opt.format == "csv") {
    out << "alpha,J,rho\n";
    for (const auto& p : points) {
      out << fmt(p.alpha) << "," << fmt(p.J) << "," << fmt(p.rho) << "\n";
    }
  } else {
    out << "mode = " << (boundary ? "boundary" : "ray") << "\n";
    out << "        alpha               J            rho\n";
    for (const auto& p : points) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %13.8g  %14.8g  %13.10f\n", p.alpha,
                    p.J, p.rho);
      out << buf;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"innovations-loss analysis of discrete LTI filter gains"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--system", opt.system,
                    "system JSON file or the built-in \"paper-example\"");
    sub->add_option("--gain", opt.gain, "gain JSON file ({\"L\": [[...]]})");
    sub->add_option("--seed", opt.seed, "RNG seed");
    sub->add_option("--tol", opt.tol, "tolerance / step override");
    sub->add_option("--horizon", opt.horizon, "simulation steps");
    sub->add_option("--burn-in", opt.burn_in, "burn-in steps");
    sub->add_option("--mode", opt.mode, "flow|gd (descend), ray|boundary (coercivity)");
    sub->add_option("--out", opt.out, "write results to file");
    sub->add_option("--format", opt.format, "table|json|csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    return sub;
  };

  auto* analyze_cmd = add_common(app.add_subcommand(
      "analyze", "steady-state quantities at a gain"));
  auto* kalman_cmd = add_common(app.add_subcommand(
      "kalman", "Riccati fixed point and Kalman gain"));
  auto* descend_cmd = add_common(app.add_subcommand(
      "descend", "gradient descent / flow on the innovations loss"));
  auto* rate_cmd = add_common(app.add_subcommand(
      "rate", "flow trajectory plus geometric-rate certificate"));
  auto* verify_cmd = add_common(app.add_subcommand(
      "verify-grad", "analytic gradient vs central finite differences"));
  auto* mc_cmd = add_common(app.add_subcommand(
      "montecarlo", "simulate the plant and filter, estimate covariances"));
  auto* demo_cmd = add_common(app.add_subcommand(
      "spurious-demo", "built-in example with a stationary line"));
  auto* coer_cmd = add_common(app.add_subcommand(
      "coercivity", "loss growth along a ray / toward the stability boundary"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (analyze_cmd->parsed()) return cmd_analyze(opt);
    if (kalman_cmd->parsed()) return cmd_kalman(opt);
    if (descend_cmd->parsed()) return cmd_descend(opt);
    if (rate_cmd->parsed()) return cmd_rate(opt);
    if (verify_cmd->parsed()) return cmd_verify_grad(opt);
    if (mc_cmd->parsed()) return cmd_montecarlo(opt);
    if (demo_cmd->parsed()) return cmd_spurious_demo(opt);
    if (coer_cmd->parsed()) return cmd_coercivity(opt);
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InstabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NotPsdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
