#include "ghsel/simulate.hpp"

#include "ghsel/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ghsel {

std::string_view to_string(BaselineFamily f) {
  return f == BaselineFamily::LogNormal ? "lognormal" : "pgw";
}

BaselineFamily parse_baseline_family(std::string_view name) {
  if (name == "lognormal" || name == "normal") return BaselineFamily::LogNormal;
  if (name == "pgw") return BaselineFamily::PGW;
  throw std::invalid_argument("unknown baseline family '" + std::string(name) + "'");
}

void SimBaseline::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("baseline: need finite mu and sigma > 0");
  if (!(pgw.kappa > 0.0 && pgw.theta > 0.0 && pgw.delta > 0.0))
    throw std::invalid_argument("baseline: PGW parameters must be positive");
}

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("simulate: n and p must be at least 1");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("simulate: |rho| must be below 1");
  if (!(target_censoring >= 0.0 && target_censoring < 1.0))
    throw std::invalid_argument("simulate: target censoring must lie in [0, 1)");
  if (truth.gamma.size() != p || truth.alpha.size() != p || truth.beta.size() != p)
    throw std::invalid_argument("simulate: truth dimensions do not match p");
  baseline.validate();
}

Eigen::MatrixXd simulate_covariates(int n, int p, double rho, Rng& rng) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("simulate_covariates: |rho| must be below 1");
  const double s = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    double prev = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z = standard_normal(rng);
      prev = j == 0 ? z : rho * prev + s * z;
      X(i, j) = prev;
    }
  }
  return X;
}

double pgw_cumhaz(double t, const PgwParams& q) {
  const double a = std::pow(t / q.kappa, q.theta);
  return std::expm1(std::log1p(a) / q.delta);
}

double pgw_hazard(double t, const PgwParams& q) {
  const double a = std::pow(t / q.kappa, q.theta);
  return (q.theta / (q.delta * t)) * a * std::pow(1.0 + a, 1.0 / q.delta - 1.0);
}

double pgw_inverse_cumhaz(double w, const PgwParams& q) {
  // (1 + a)^(1/delta) = 1 + w  =>  a = (1 + w)^delta - 1
  const double log_a = std::log(std::expm1(q.delta * std::log1p(w)));
  return q.kappa * std::exp(log_a / q.theta);
}

double baseline_cumhaz(double t, const SimBaseline& b) {
  if (b.family == BaselineFamily::PGW) return pgw_cumhaz(t, b.pgw);
  return -baseline::log_F_neg((std::log(t) - b.mu) / b.sigma, Kernel::Normal);
}

double gh_cumhaz(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x, const SimTruth& truth,
                 const SimBaseline& b) {
  const double xa = x.dot(truth.alpha);
  const double xb = x.dot(truth.beta);
  return baseline_cumhaz(t * std::exp(xa), b) * std::exp(xb - xa);
}

Eigen::VectorXd simulate_gh_times(const Eigen::MatrixXd& X, const SimTruth& truth,
                                  const SimBaseline& b, Rng& rng) {
  const Eigen::VectorXd xa = X * truth.alpha;
  const Eigen::VectorXd xb = X * truth.beta;
  Eigen::VectorXd t(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double e = standard_exponential(rng);
    const double log_w = std::log(std::max(e, 1e-300)) + xa(i) - xb(i);
    const double w = std::max(std::exp(log_w), 1e-300);
    double log_t0;
    if (b.family == BaselineFamily::LogNormal) {
      log_t0 = b.mu + b.sigma * baseline::upper_quantile_log(-w, Kernel::Normal);
    } else {
      log_t0 = std::log(pgw_inverse_cumhaz(w, b.pgw));
    }
    t(i) = std::exp(log_t0 - xa(i));
  }
  return t;
}

Censored apply_administrative_censoring(const Eigen::VectorXd& times, double target_rate) {
  if (!(target_rate >= 0.0 && target_rate < 1.0))
    throw std::invalid_argument("censoring rate must lie in [0, 1)");
  const auto n = times.size();
  Censored out{times, Eigen::VectorXd::Ones(n), std::numeric_limits<double>::infinity()};
  if (target_rate == 0.0 || n == 0) return out;
  std::vector<double> sorted(times.data(), times.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double h = (1.0 - target_rate) * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  out.c_admin = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (times(i) > out.c_admin) {
      out.t(i) = out.c_admin;
      out.delta(i) = 0.0;
    }
  }
  return out;
}

SimTruth standard_truth(HazardClass c, int p) {
  static constexpr double kCoef[4] = {1.0, -1.0, 0.25, -0.25};
  static constexpr double kGhAlpha[4] = {1.0, 0.25, -1.0, -0.25};
  static constexpr double kGhBeta[4] = {0.25, -1.0, -0.25, 1.0};
  SimTruth out{Gamma::null(p), Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  if (c == HazardClass::Null) return out;
  std::vector<int> pos(4);
  for (int k = 1; k <= 4; ++k) pos[k - 1] = static_cast<int>(std::lround(0.2 * k * p)) - 1;
  for (int k = 1; k < 4; ++k)
    if (pos[k] <= pos[k - 1] || pos[0] < 0)
      throw std::invalid_argument("standard_truth: p too small for four distinct active positions");
  std::vector<int> codes(static_cast<std::size_t>(p), 0);
  for (int k = 0; k < 4; ++k) {
    const int j = pos[k];
    switch (c) {
      case HazardClass::AH: codes[j] = 1; out.alpha(j) = kCoef[k]; break;
      case HazardClass::PH: codes[j] = 2; out.beta(j) = kCoef[k]; break;
      case HazardClass::AFT: codes[j] = 4; out.alpha(j) = out.beta(j) = kCoef[k]; break;
      case HazardClass::GH: codes[j] = 3; out.alpha(j) = kGhAlpha[k]; out.beta(j) = kGhBeta[k]; break;
      case HazardClass::Null: break;
    }
  }
  out.gamma = Gamma(codes);
  return out;
}

SimResult simulate_dataset(const SimConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, 0);
  Eigen::MatrixXd X = simulate_covariates(cfg.n, cfg.p, cfg.rho, rng);
  const Eigen::VectorXd o = simulate_gh_times(X, cfg.truth, cfg.baseline, rng);
  auto cens = apply_administrative_censoring(o, cfg.target_censoring);
  std::vector<std::string> names;
  for (int j = 0; j < cfg.p; ++j) names.push_back("x" + std::to_string(j + 1));
  return {Dataset(std::move(cens.t), std::move(cens.delta), std::move(X), std::move(names)), cens.c_admin};
}

}  // namespace ghsel
