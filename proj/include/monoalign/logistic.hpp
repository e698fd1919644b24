#ifndef MONOALIGN_LOGISTIC_HPP
#define MONOALIGN_LOGISTIC_HPP

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "monoalign/common.hpp"

namespace monoalign {

class RegressionError : public Error {
 public:
  RegressionError(const std::string& what, bool separation) : Error(what), separation_(separation) {}
  bool separation() const { return separation_; }

 private:
  bool separation_;
};

struct LogisticFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  double log_likelihood = 0;
  int iterations = 0;
  bool converged = false;
};

struct IrlsOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;        // on the log-likelihood change
  double separation_bound = 15.0;  // |coefficient| treated as diverging
};

/// Bernoulli log-likelihood of coefficients `beta`, computed stably.
template <typename DX, typename DY, typename DB>
double logistic_log_likelihood(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                               const Eigen::MatrixBase<DB>& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) without overflow
    const double softplus = eta(i) > 0 ? eta(i) + std::log1p(std::exp(-eta(i))) : std::log1p(std::exp(eta(i)));
    ll += y(i) * eta(i) - softplus;
  }
  return ll;
}

/// Maximum-likelihood logistic regression by Newton/IRLS. Standard errors come
/// from the inverse information X'WX at the optimum; p values are two-sided Wald.
/// Throws RegressionError on non-convergence or diverging coefficients.
template <typename DX, typename DY>
LogisticFit fit_logistic_irls(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                              const IrlsOptions& opt = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (y.size() != n) throw ShapeError("irls: design and response differ in rows");
  if (n <= k) throw RegressionError("irls: fewer observations than coefficients", false);

  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(k);
  double ll = logistic_log_likelihood(x, y, fit.coefficients);
  Eigen::MatrixXd info(k, k);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd eta = x * fit.coefficients;
    const Eigen::VectorXd p = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    const Eigen::VectorXd w = p.array() * (1.0 - p.array());
    info.noalias() = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd score = x.transpose() * (y - p);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw RegressionError("irls: information matrix is singular", true);
    fit.coefficients += ldlt.solve(score);
    const double next = logistic_log_likelihood(x, y, fit.coefficients);
    fit.iterations = it;
    const bool small = std::abs(next - ll) < opt.tolerance;
    ll = next;
    if (small) {
      fit.converged = true;
      break;
    }
  }
  fit.log_likelihood = ll;
  const double largest = fit.coefficients.cwiseAbs().maxCoeff();
  if (!fit.converged) {
    throw RegressionError("irls: no convergence after " + std::to_string(opt.max_iterations) +
                              " iterations" + (largest > opt.separation_bound ? " (separation suspected)" : ""),
                          largest > opt.separation_bound);
  }
  if (largest > opt.separation_bound)
    throw RegressionError("irls: coefficient magnitude " + std::to_string(largest) +
                              " indicates perfect or quasi separation", true);

  const Eigen::VectorXd eta = x * fit.coefficients;
  const Eigen::VectorXd p = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  info.noalias() = x.transpose() * w.asDiagonal() * x;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.standard_errors = cov.diagonal().cwiseSqrt();
  fit.z = fit.coefficients.cwiseQuotient(fit.standard_errors);
  fit.p = fit.z.unaryExpr([](double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); });
  return fit;
}

}  // namespace monoalign

#endif  // MONOALIGN_LOGISTIC_HPP
