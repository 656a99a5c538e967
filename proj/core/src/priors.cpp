#include "ghsel/priors.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace ghsel {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;
}

void CommonPrior::validate() const {
  if (!(alpha_nu > 0 && beta_nu > 0 && K > 0 && nu_sd > 0))
    throw std::invalid_argument("common prior hyperparameters must be positive");
}

std::pair<double, double> nu_normal_moments(double alpha, double beta) {
  return {boost::math::digamma(alpha) - std::log(beta), std::sqrt(boost::math::trigamma(alpha))};
}

double log_nu_prior(double nu, const CommonPrior& cp) {
  return cp.alpha_nu * std::log(cp.beta_nu) + cp.alpha_nu * nu - cp.beta_nu * std::exp(nu) -
         std::lgamma(cp.alpha_nu);
}

double log_theta0_prior(double theta0, const CommonPrior& cp) {
  return -0.5 * (kLog2Pi + std::log(cp.K)) - 0.5 * theta0 * theta0 / cp.K;
}

double log_common_prior(double nu, double theta0, const CommonPrior& cp) {
  return log_nu_prior(nu, cp) + log_theta0_prior(theta0, cp);
}

std::string_view to_string(PriorKind k) { return k == PriorKind::LCM ? "lcm" : "product"; }

void CoefficientPrior::validate() const {
  if (!(g_E > 0 && g_Ct > 0 && g_Ch > 0)) throw std::invalid_argument("g values must be positive");
  if (kind == PriorKind::Product && g_mode == GMode::RobustHyper)
    throw std::invalid_argument("the robust hyper-g prior is only available with the LCM prior");
}

namespace {

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd S(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) S.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return S.transpose() * S;
}

double checked_logdet(const Eigen::MatrixXd& G, const char* block) {
  if (G.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  const double tiny = 1e-10 * std::max(1.0, G.diagonal().maxCoeff());
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= std::sqrt(tiny))
    throw RankDeficiencyError(std::string("Gram matrix of the ") + block +
                              " design is singular; the selected columns are collinear");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

ProductPrior::ProductPrior(const Gamma& g, const Dataset& data, double g_ct, double g_ch) {
  const double n = data.n();
  scale_t_ = 1.0 / (g_ct * n);
  scale_h_ = 1.0 / (g_ch * n);
  Gt_ = gram(data.X(), time_columns(g));
  if (classify(g) == HazardClass::AFT)
    Gh_.resize(0, 0);
  else
    Gh_ = gram(data.X(), hazard_columns(g));
  logdet_t_ = checked_logdet(Gt_, "time-level");
  logdet_h_ = checked_logdet(Gh_, "hazard-level");
}

double ProductPrior::logpdf(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const {
  // Precision of each block is scale * Gram.
  const auto q = static_cast<double>(Gt_.rows());
  const auto p = static_cast<double>(Gh_.rows());
  double lp = 0.0;
  if (q > 0)
    lp += -0.5 * q * kLog2Pi + 0.5 * (q * std::log(scale_t_) + logdet_t_) -
          0.5 * scale_t_ * theta.dot(Gt_ * theta);
  if (p > 0)
    lp += -0.5 * p * kLog2Pi + 0.5 * (p * std::log(scale_h_) + logdet_h_) -
          0.5 * scale_h_ * eta.dot(Gh_ * eta);
  return lp;
}

Eigen::VectorXd ProductPrior::grad(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) const {
  Eigen::VectorXd g(Gt_.rows() + Gh_.rows());
  g << -scale_t_ * (Gt_ * theta), -scale_h_ * (Gh_ * eta);
  return g;
}

Eigen::MatrixXd ProductPrior::hess() const {
  const auto q = Gt_.rows();
  const auto p = Gh_.rows();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q + p, q + p);
  H.topLeftCorner(q, q) = -scale_t_ * Gt_;
  H.bottomRightCorner(p, p) = -scale_h_ * Gh_;
  return H;
}

double ProductPrior::log_joint(const Eigen::VectorXd& psi, const CommonPrior& cp,
                               Eigen::VectorXd* grad_out, Eigen::MatrixXd* hess_out) const {
  const auto q = Gt_.rows();
  const auto p = Gh_.rows();
  if (psi.size() != 2 + q + p) throw std::invalid_argument("ProductPrior: psi length mismatch");
  const Eigen::VectorXd theta = psi.segment(2, q);
  const Eigen::VectorXd eta = psi.segment(2 + q, p);
  const double nu = psi[0];
  const double value = log_common_prior(nu, psi[1], cp) + logpdf(theta, eta);
  if (grad_out) {
    grad_out->resize(psi.size());
    (*grad_out)[0] = cp.alpha_nu - cp.beta_nu * std::exp(nu);
    (*grad_out)[1] = -psi[1] / cp.K;
    grad_out->tail(q + p) = grad(theta, eta);
  }
  if (hess_out) {
    *hess_out = Eigen::MatrixXd::Zero(psi.size(), psi.size());
    (*hess_out)(0, 0) = -cp.beta_nu * std::exp(nu);
    (*hess_out)(1, 1) = -1.0 / cp.K;
    hess_out->bottomRightCorner(q + p, q + p) = hess();
  }
  return value;
}

Eigen::MatrixXd ProductPrior::covariance() const {
  const auto q = Gt_.rows();
  const auto p = Gh_.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(q + p, q + p);
  if (q > 0) C.topLeftCorner(q, q) = Gt_.inverse() / scale_t_;
  if (p > 0) C.bottomRightCorner(p, p) = Gh_.inverse() / scale_h_;
  return C;
}

Eigen::MatrixXd lcm_prior_cov(const Eigen::MatrixXd& fisher_coef, int n, double g_E) {
  if (fisher_coef.rows() == 0) return fisher_coef;
  Eigen::LLT<Eigen::MatrixXd> llt(fisher_coef);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("coefficient block of the observed information is not positive definite");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(fisher_coef.rows(), fisher_coef.cols()));
  Eigen::MatrixXd cov = (n * g_E) * inv;
  return 0.5 * (cov + cov.transpose());
}

double robust_g_lower_bound(int n, int d) {
  const double nn = n;
  return (1.0 + nn) / (nn * (d + 1.0)) - 1.0 / nn;
}

double robust_g_logpdf(double g, int n, int d) {
  if (!(g > robust_g_lower_bound(n, d))) return -std::numeric_limits<double>::infinity();
  const double nn = n;
  return std::log(0.5) + 0.5 * std::log((1.0 + nn) / (nn * (d + 1.0))) - 1.5 * std::log(g + 1.0 / nn);
}

}  // namespace ghsel
