#pragma once

#include "ghsel/baseline.hpp"
#include "ghsel/dataset.hpp"
#include "ghsel/modelspace.hpp"

#include <Eigen/Dense>

namespace ghsel {

/// Parameters in the reparametrised coordinates
///   exp(nu) = 1/sigma, theta0 = mu/sigma, theta = -alpha/sigma, eta = -beta.
/// AFT models carry no eta; it is tied to theta by eta = exp(-nu) theta.
struct Psi {
  double nu = 0.0;
  double theta0 = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd eta;

  /// Flat layout (nu, theta0, theta, eta).
  Eigen::VectorXd flatten() const;
  static Psi unflatten(const Eigen::VectorXd& v, int q, int p);
};

/// Parameters on the original hazard scale.
struct NaturalParams {
  double mu = 0.0;
  double sigma = 1.0;
  Eigen::VectorXd alpha;  // time level, one per time column
  Eigen::VectorXd beta;   // hazard level, one per hazard column (AFT: equal to alpha)
};

NaturalParams to_natural(const Eigen::VectorXd& psi, const Gamma& g);

/// Value, gradient and Hessian of the log-likelihood at one point.
struct LikEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  /// Set when the hazard-level linear predictor had to be clamped.
  bool boundary = false;
};

/// Log-likelihood of one model on one dataset. The time and hazard designs are
/// extracted once; evaluations are pure and thread-safe.
class GhLikelihood {
 public:
  GhLikelihood(const Gamma& g, const Dataset& data, Kernel k);

  /// 2 + number of coefficients.
  int dim() const { return 2 + q_ + (aft_ ? 0 : p_); }
  int n_time() const { return q_; }
  int n_hazard() const { return aft_ ? 0 : p_; }
  bool is_aft() const { return aft_; }
  Kernel kernel() const { return kernel_; }
  const Gamma& gamma() const { return gamma_; }
  const Dataset& data() const { return *data_; }

  /// order 0: value only, 1: with gradient, 2: with Hessian.
  LikEval evaluate(const Eigen::VectorXd& psi, int order = 2) const;

  double value(const Eigen::VectorXd& psi) const { return evaluate(psi, 0).value; }

  /// Direct AFT evaluator sum delta (nu - log t + log f(u)) + (1 - delta) log F(-u).
  /// Only valid for AFT models.
  double value_aft(const Eigen::VectorXd& psi) const;

  /// Linear-predictor clamp applied before exponentiation.
  static constexpr double kClamp = 500.0;

 private:
  // Generic evaluation in (nu, theta0, theta, eta) with eta's design Xh.
  LikEval evaluate_full(double nu, double theta0, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& eta, int order, bool tie_aft) const;

  Gamma gamma_;
  const Dataset* data_;
  Kernel kernel_;
  bool aft_;
  int q_;
  int p_;
  Eigen::MatrixXd Xt_;
  Eigen::MatrixXd Xh_;
};

/// Free-function forms. Throw std::invalid_argument if psi has the wrong length.
double loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data, Kernel k);
Eigen::VectorXd grad_loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                            Kernel k);
Eigen::MatrixXd hess_loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                            Kernel k);
Eigen::MatrixXd observed_fisher(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                                Kernel k);

/// Index ranges of the observed Fisher information: common block (nu, theta0)
/// and coefficient block (theta, eta).
struct FisherBlocks {
  Eigen::Matrix2d common;
  Eigen::MatrixXd cross;  // coefficients x common
  Eigen::MatrixXd coef;
};

FisherBlocks split_fisher(const Eigen::MatrixXd& J);

}  // namespace ghsel
