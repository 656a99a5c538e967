#pragma once

#include "ghsel/baseline.hpp"
#include "ghsel/dataset.hpp"
#include "ghsel/modelspace.hpp"
#include "ghsel/optimize.hpp"
#include "ghsel/priors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace ghsel {

enum class MarglikMethod { ILA, ILA_RobustG, LA };

std::string_view to_string(MarglikMethod m);

/// Completion of the square for the ILA. Corrected keeps the cross terms
/// between the common parameters and the MLE of the coefficients; AsPrinted
/// drops them.
enum class IlaForm { Corrected, AsPrinted };

struct MarglikRecord {
  std::string gamma_key;
  double log_ml = -std::numeric_limits<double>::infinity();
  MarglikMethod method = MarglikMethod::ILA;
  FitRecord fit;
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  Eigen::Vector2d h = Eigen::Vector2d::Zero();
  double C = 0.0;
  std::string failure;  // empty when log_ml is finite
};

/// ILA pieces shared by the fixed-g and robust-g variants.
struct IlaOptions {
  IlaForm form = IlaForm::Corrected;
  /// Include the normalising constant 0.5 log|D| of the (nu, theta0) priors.
  bool normalise_common = true;
};

/// ILA marginal likelihood for a given fit (the MLE of the model).
MarglikRecord ila_from_fit(const Gamma& g, const FitRecord& fit, int n, double g_E,
                           const CommonPrior& cp, const IlaOptions& opt = {});

MarglikRecord ila_log_marglik(const Gamma& g, const Dataset& data, Kernel k, double g_E,
                              const CommonPrior& cp, const IlaOptions& opt = {},
                              const std::optional<Eigen::VectorXd>& init = std::nullopt,
                              const OptimOptions& oo = {});

/// Mode of the Gaussian posterior behind the ILA: the likelihood expanded at the
/// MLE, the LCM coefficient prior and the normal (nu, theta0) prior. This is the
/// point estimate reported for ILA runs.
Eigen::VectorXd ila_posterior_mode(const FitRecord& fit, int n, double g_E, const CommonPrior& cp);

struct RobustGOptions {
  double cutoff = 1e6;
  double tol = 1e-13;
};

/// ILA integrated over the robust hyper-g prior (fit reused across g).
MarglikRecord ila_robust_from_fit(const Gamma& g, const FitRecord& fit, int n,
                                  const CommonPrior& cp, const IlaOptions& opt = {},
                                  const RobustGOptions& ro = {});

MarglikRecord ila_log_marglik_robust_g(const Gamma& g, const Dataset& data, Kernel k,
                                       const CommonPrior& cp, const IlaOptions& opt = {},
                                       const RobustGOptions& ro = {},
                                       const std::optional<Eigen::VectorXd>& init = std::nullopt,
                                       const OptimOptions& oo = {});

struct LaOptions {
  /// (2 + d)/2 exponent on 2 pi, matching the dimension of the curvature.
  /// false uses d/2.
  bool full_dimension = true;
};

/// Laplace approximation at the MAP under the Product prior.
MarglikRecord la_log_marglik(const Gamma& g, const Dataset& data, Kernel k,
                             const CoefficientPrior& prior, const CommonPrior& cp,
                             const LaOptions& opt = {},
                             const std::optional<Eigen::VectorXd>& init = std::nullopt,
                             const OptimOptions& oo = {});

/// Thread-safe memo of marginal-likelihood records keyed by a string that
/// encodes the model, method, hyperparameters and dataset. Optionally
/// capacity-bounded with least-recently-inserted eviction.
class MarglikCache {
 public:
  explicit MarglikCache(std::size_t capacity = 0) : capacity_(capacity) {}

  std::shared_ptr<const MarglikRecord> get(const std::string& key) const;
  std::shared_ptr<const MarglikRecord> insert(const std::string& key, MarglikRecord rec);
  std::size_t size() const;
  void clear();

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const MarglikRecord>> map_;
  std::list<std::string> order_;
  std::size_t capacity_;
};

struct MarglikConfig {
  MarglikMethod method = MarglikMethod::ILA;
  Kernel kernel = Kernel::Normal;
  CoefficientPrior coef;
  CommonPrior common;
  IlaOptions ila;
  LaOptions la;
  RobustGOptions robust;
  OptimOptions optim;

  /// Canonical text of everything that affects a record.
  std::string fingerprint() const;
};

/// Marginal likelihood of any model on one dataset, cached. Fits start from the
/// common parameters of the fitted Null model with zero coefficients.
class MarglikEngine {
 public:
  MarglikEngine(const Dataset& data, MarglikConfig cfg,
                std::shared_ptr<MarglikCache> cache = std::make_shared<MarglikCache>());

  std::shared_ptr<const MarglikRecord> evaluate(const Gamma& g);
  /// Evaluate with an explicit starting point; bypasses the cache lookup but
  /// stores the result.
  std::shared_ptr<const MarglikRecord> evaluate(const Gamma& g, const Eigen::VectorXd& init);

  double log_ml(const Gamma& g) { return evaluate(g)->log_ml; }

  const Dataset& data() const { return *data_; }
  const MarglikConfig& config() const { return cfg_; }
  MarglikCache& cache() { return *cache_; }
  std::string key(const Gamma& g) const;

 private:
  MarglikRecord compute(const Gamma& g, const Eigen::VectorXd& init) const;

  const Dataset* data_;
  MarglikConfig cfg_;
  std::shared_ptr<MarglikCache> cache_;
  std::string prefix_;
  Eigen::Vector2d common_start_;
};

}  // namespace ghsel
