#pragma once

#include "ghsel/dataset.hpp"
#include "ghsel/modelspace.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ghsel {

/// Priors on the common parameters: exp(nu) ~ Gamma(alpha, beta) and
/// theta0 ~ N(0, K). The ILA replaces the nu prior by N(nu_mean, nu_sd^2).
struct CommonPrior {
  double alpha_nu = 0.01;
  double beta_nu = 0.01;
  double K = 1e6;
  double nu_mean = 9.34;
  double nu_sd = 41.15;

  void validate() const;
  bool default_gamma() const { return alpha_nu == 0.01 && beta_nu == 0.01; }
};

/// Mean and sd of nu = log(tau) for tau ~ Gamma(alpha, beta). Used to build the
/// normal nu prior when the Gamma hyperparameters are not the defaults.
std::pair<double, double> nu_normal_moments(double alpha, double beta);

/// log pi(nu) with exp(nu) ~ Gamma(alpha, beta) (density on the nu scale).
double log_nu_prior(double nu, const CommonPrior& cp);
double log_theta0_prior(double theta0, const CommonPrior& cp);
double log_common_prior(double nu, double theta0, const CommonPrior& cp);

enum class PriorKind { LCM, Product };
enum class GMode { Fixed, RobustHyper };

std::string_view to_string(PriorKind k);

struct CoefficientPrior {
  PriorKind kind = PriorKind::LCM;
  double g_E = 1.0;
  double g_Ct = 1.0;
  double g_Ch = 1.0;
  GMode g_mode = GMode::Fixed;

  void validate() const;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Product g-prior: theta ~ N(0, g_Ct n (Xt'Xt)^-1), eta ~ N(0, g_Ch n (Xh'Xh)^-1).
/// AFT models only carry the theta factor.
class ProductPrior {
 public:
  /// Throws RankDeficiencyError naming the block whose Gram matrix is singular.
  ProductPrior(const Gamma& g, const Dataset& data, double g_ct, double g_ch);

  int n_time() const { return static_cast<int>(Gt_.rows()); }
  int n_hazard() const { return static_cast<int>(Gh_.rows()); }

  double logpdf(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const;
  /// Constant block-diagonal Hessian over (theta, eta).
  Eigen::MatrixXd hess() const;

  /// Full log prior over psi = (nu, theta0, theta, eta): coefficient part plus
  /// the log-Gamma nu prior and the N(0, K) theta0 prior. Gradient and Hessian
  /// are returned through the optional pointers.
  double log_joint(const Eigen::VectorXd& psi, const CommonPrior& cp, Eigen::VectorXd* grad = nullptr,
                   Eigen::MatrixXd* hess = nullptr) const;

  /// Covariance of theta and eta blocks (block diagonal).
  Eigen::MatrixXd covariance() const;

 private:
  double scale_t_;  // 1 / (g_Ct n)
  double scale_h_;  // 1 / (g_Ch n)
  Eigen::MatrixXd Gt_;
  Eigen::MatrixXd Gh_;
  double logdet_t_ = 0.0;
  double logdet_h_ = 0.0;
};

/// n g_E J_coef^{-1}. Throws NotPositiveDefiniteError if J_coef is not PD.
Eigen::MatrixXd lcm_prior_cov(const Eigen::MatrixXd& fisher_coef, int n, double g_E);

/// Lower end of the robust hyper-g support, (1+n)/(n(d+1)) - 1/n.
double robust_g_lower_bound(int n, int d);

/// log of 0.5 sqrt((1+n)/(n(d+1))) (g + 1/n)^{-3/2} on its support, -inf below it.
double robust_g_logpdf(double g, int n, int d);

}  // namespace ghsel
