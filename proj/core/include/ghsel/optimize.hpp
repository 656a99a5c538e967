#pragma once

#include "ghsel/baseline.hpp"
#include "ghsel/dataset.hpp"
#include "ghsel/ghlik.hpp"
#include "ghsel/modelspace.hpp"
#include "ghsel/priors.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string_view>

namespace ghsel {

enum class FitStatus { Converged, MaxIter, Boundary, SingularHessian };

std::string_view to_string(FitStatus s);

struct OptimOptions {
  double grad_tol = 1e-6;  // relative: max|g| <= grad_tol * (1 + |objective|)
  int max_iter = 500;
  double armijo_c = 1e-4;
  double nu_bound = 20.0;
  int newton_polish = 3;   // exact-Hessian steps after the quasi-Newton phase
};

struct FitRecord {
  Eigen::VectorXd psi;
  double objective = 0.0;  // log-likelihood (MLE) or log-posterior (MAP) at psi
  double loglik = 0.0;     // log-likelihood at psi
  Eigen::MatrixXd fisher;  // negated Hessian of the objective at psi
  FitStatus status = FitStatus::MaxIter;
  int n_evals = 0;
  int iterations = 0;
  double grad_max = 0.0;

  bool ok() const { return status == FitStatus::Converged; }
};

/// Objective to maximise; order has the meaning of GhLikelihood::evaluate.
using ObjectiveFn = std::function<LikEval(const Eigen::VectorXd&, int)>;

/// Dense BFGS on -f with Armijo backtracking, then a few exact Newton steps.
/// The exact Hessian is evaluated at the returned point.
FitRecord maximize(const ObjectiveFn& f, Eigen::VectorXd x0, const OptimOptions& opt = {});

/// Moment-matched start: nu = -log sd, theta0 = mean / sd of the uncensored
/// log times (all times if there are no events), coefficients zero.
Eigen::VectorXd default_init(const Gamma& g, const Dataset& data);

/// Start for model `to` from an optimum of model `from`: common parameters and
/// coefficients of columns present in both are copied, new coordinates are zero.
Eigen::VectorXd project_psi(const Gamma& from, const Eigen::VectorXd& psi, const Gamma& to);

/// Start with the given common parameters and zero coefficients.
Eigen::VectorXd common_init(const Gamma& g, double nu, double theta0);

FitRecord fit_mle(const Gamma& g, const Dataset& data, Kernel k,
                  const std::optional<Eigen::VectorXd>& init = std::nullopt,
                  const OptimOptions& opt = {});

/// MAP under the Product prior and the common priors.
FitRecord fit_map(const Gamma& g, const Dataset& data, Kernel k, const CoefficientPrior& prior,
                  const CommonPrior& cp, const std::optional<Eigen::VectorXd>& init = std::nullopt,
                  const OptimOptions& opt = {});

}  // namespace ghsel
