#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace vstokes {

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct SolverConfig {
  double tol = 1e-6;       // relative residual tolerance
  int max_iter = 5000;
  int gmres_restart = 0;   // 0 = full-memory Arnoldi
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;  // nonpositive curvature or indefinite preconditioner
  std::vector<double> residuals;       // preconditioned norm for PCG, true norm for GMRES
  std::vector<double> true_residuals;  // unpreconditioned recursion residual (PCG)
  bool has_eigs = false;
  double lambda_min = 0.0, lambda_max = 0.0, cond = 0.0;
};

struct PcgResult {
  Eigen::VectorXd x;
  SolveReport report;
};

// Conjugate gradients with a symmetric positive definite preconditioner.
// Stops on the preconditioned residual norm relative to its initial value;
// the true-residual history is recorded alongside. Extreme eigenvalues of the
// preconditioned operator are estimated from the recurrence coefficients.
PcgResult pcg(const LinearOp& apply_A, const LinearOp& apply_M, const Eigen::VectorXd& b,
              const SolverConfig& cfg = {});

// Full-memory GMRES (optional restart) on the unpreconditioned operator.
PcgResult gmres(const LinearOp& apply_A, const Eigen::VectorXd& b, const SolverConfig& cfg = {});

struct EigEstimate {
  bool available = false;
  double lambda_min = 0.0, lambda_max = 0.0, cond = 0.0;
};

// Extreme eigenvalues of the tridiagonal built from the PCG coefficients
// (alpha_i, beta_i); requires at least 2 iterations.
EigEstimate lanczos_condition_estimate(const std::vector<double>& alphas,
                                       const std::vector<double>& betas);

}  // namespace vstokes
