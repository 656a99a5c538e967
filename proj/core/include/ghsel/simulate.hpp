#pragma once

#include "ghsel/dataset.hpp"
#include "ghsel/modelspace.hpp"
#include "ghsel/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace ghsel {

enum class BaselineFamily { LogNormal, PGW };

std::string_view to_string(BaselineFamily f);
BaselineFamily parse_baseline_family(std::string_view name);

/// Power generalised Weibull with scale kappa and shapes theta, delta:
/// H0(t) = (1 + (t/kappa)^theta)^(1/delta) - 1.
struct PgwParams {
  double kappa = 1.0;
  double theta = 1.0;
  double delta = 2.0;
};

struct SimBaseline {
  BaselineFamily family = BaselineFamily::LogNormal;
  double mu = 1.55;
  double sigma = 0.7;
  PgwParams pgw;

  void validate() const;
};

/// True model in the natural parametrisation of the GH hazard
/// h(t|x) = h0(t e^{x'alpha}) e^{x'beta}. alpha and beta have length p and are
/// zero outside the active set.
struct SimTruth {
  Gamma gamma;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

struct SimConfig {
  int n = 1000;
  int p = 10;
  double rho = 0.7;
  SimTruth truth;
  SimBaseline baseline;
  double target_censoring = 0.25;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Rows are i.i.d. N(0, Sigma) with Sigma_ij = rho^|i-j|.
Eigen::MatrixXd simulate_covariates(int n, int p, double rho, Rng& rng);

double pgw_cumhaz(double t, const PgwParams& q);
double pgw_hazard(double t, const PgwParams& q);
double pgw_inverse_cumhaz(double w, const PgwParams& q);

double baseline_cumhaz(double t, const SimBaseline& b);

/// Cumulative hazard of the GH model at t for covariate row x.
double gh_cumhaz(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x, const SimTruth& truth,
                 const SimBaseline& b);

/// Event times by inversion of H(t|x) = E, E ~ Exp(1).
Eigen::VectorXd simulate_gh_times(const Eigen::MatrixXd& X, const SimTruth& truth,
                                  const SimBaseline& b, Rng& rng);

struct Censored {
  Eigen::VectorXd t;
  Eigen::VectorXd delta;
  double c_admin;
};

/// Single cut-point at the empirical (1 - rate) quantile (linear interpolation
/// between order statistics). rate = 0 gives c_admin = +inf.
Censored apply_administrative_censoring(const Eigen::VectorXd& times, double target_rate);

/// Simulation-study truth for one hazard class: active variables at positions
/// round(0.2p), round(0.4p), round(0.6p), round(0.8p) (1-based) with
/// coefficients (1, -1, 0.25, -0.25).
SimTruth standard_truth(HazardClass c, int p);

struct SimResult {
  Dataset data;
  double c_admin;
};

SimResult simulate_dataset(const SimConfig& cfg);

}  // namespace ghsel
