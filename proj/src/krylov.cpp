#include "vstokes/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace vstokes {

EigEstimate lanczos_condition_estimate(const std::vector<double>& alphas,
                                       const std::vector<double>& betas) {
  EigEstimate est;
  const int m = static_cast<int>(alphas.size());
  if (m < 2) return est;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = 1.0 / alphas[i];
    if (i > 0) T(i, i) += betas[i - 1] / alphas[i - 1];
    if (i + 1 < m) {
      const double off = std::sqrt(std::max(0.0, betas[i])) / alphas[i];
      T(i, i + 1) = off;
      T(i + 1, i) = off;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  est.available = true;
  est.lambda_min = eig.eigenvalues().minCoeff();
  est.lambda_max = eig.eigenvalues().maxCoeff();
  est.cond = est.lambda_max / est.lambda_min;
  return est;
}

PcgResult pcg(const LinearOp& apply_A, const LinearOp& apply_M, const Eigen::VectorXd& b,
              const SolverConfig& cfg) {
  PcgResult out;
  const int n = static_cast<int>(b.size());
  out.x = Eigen::VectorXd::Zero(n);
  SolveReport& rep = out.report;

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.residuals = {0.0};
    rep.true_residuals = {0.0};
    return out;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = apply_M(r);
  double rz = r.dot(z);
  if (rz <= 0.0) {
    rep.breakdown = true;
    return out;
  }
  Eigen::VectorXd p = z;
  const double prec0 = std::sqrt(rz);
  rep.residuals.push_back(1.0);
  rep.true_residuals.push_back(1.0);

  std::vector<double> alphas, betas;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Eigen::VectorXd q = apply_A(p);
    const double pq = p.dot(q);
    if (pq <= 0.0) {
      rep.breakdown = true;
      rep.iterations = it;
      break;
    }
    const double alpha = rz / pq;
    out.x += alpha * p;
    r -= alpha * q;
    z = apply_M(r);
    const double rz_new = r.dot(z);
    alphas.push_back(alpha);
    rep.iterations = it + 1;
    rep.true_residuals.push_back(r.norm() / bnorm);
    if (rz_new <= 0.0) {
      if (std::sqrt(std::abs(rz_new)) / prec0 <= cfg.tol) {
        rep.residuals.push_back(std::sqrt(std::abs(rz_new)) / prec0);
        rep.converged = true;
      } else {
        rep.breakdown = true;
      }
      break;
    }
    const double prec = std::sqrt(rz_new) / prec0;
    rep.residuals.push_back(prec);
    if (prec <= cfg.tol) {
      rep.converged = true;
      betas.push_back(rz_new / rz);
      break;
    }
    const double beta = rz_new / rz;
    betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }

  const EigEstimate est = lanczos_condition_estimate(alphas, betas);
  rep.has_eigs = est.available;
  rep.lambda_min = est.lambda_min;
  rep.lambda_max = est.lambda_max;
  rep.cond = est.cond;
  return out;
}

PcgResult gmres(const LinearOp& apply_A, const Eigen::VectorXd& b, const SolverConfig& cfg) {
  PcgResult out;
  const int n = static_cast<int>(b.size());
  out.x = Eigen::VectorXd::Zero(n);
  SolveReport& rep = out.report;

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.residuals = {0.0};
    return out;
  }
  const int restart = (cfg.gmres_restart > 0) ? cfg.gmres_restart : cfg.max_iter;

  int total_it = 0;
  rep.residuals.push_back(1.0);
  while (total_it < cfg.max_iter && !rep.converged) {
    Eigen::VectorXd r = b - apply_A(out.x);
    double beta = r.norm();
    if (beta / bnorm <= cfg.tol) {
      rep.converged = true;
      break;
    }
    const int m = std::min(restart, cfg.max_iter - total_it);
    std::vector<Eigen::VectorXd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g(0) = beta;
    std::vector<double> cs(m), sn(m);
    int k = 0;
    bool happy = false;
    for (; k < m; ++k) {
      Eigen::VectorXd w = apply_A(V[k]);
      for (int i = 0; i <= k; ++i) {           // modified Gram-Schmidt
        H(i, k) = w.dot(V[i]);
        w -= H(i, k) * V[i];
      }
      H(k + 1, k) = w.norm();
      ++total_it;
      const bool tiny = H(k + 1, k) <= 1e-14 * bnorm;
      if (!tiny) V.push_back(w / H(k + 1, k));
      // Givens rotations keep the least-squares residual explicit
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = cs[k] * g(k);
      rep.residuals.push_back(std::abs(g(k + 1)) / bnorm);
      if (std::abs(g(k + 1)) / bnorm <= cfg.tol || tiny) {
        happy = tiny;
        ++k;
        break;
      }
    }
    // back substitution on the k x k triangular system
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g(i);
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y(j);
      y(i) = s / H(i, i);
    }
    for (int i = 0; i < k; ++i) out.x += y(i) * V[i];
    rep.iterations = total_it;
    const double res = (b - apply_A(out.x)).norm() / bnorm;
    if (res <= cfg.tol || happy) rep.converged = true;
  }
  rep.iterations = total_it;
  return out;
}

}  // namespace vstokes
