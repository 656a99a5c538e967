#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ghsel {

/// Right-censored survival data: observed times, event indicators and a single
/// covariate matrix from which the time-level and hazard-level designs are
/// selected column-wise.
class Dataset {
 public:
  Dataset() = default;

  /// Throws std::invalid_argument on size mismatch, non-positive or non-finite
  /// times, status outside {0,1} or non-finite covariates.
  Dataset(Eigen::VectorXd t, Eigen::VectorXd delta, Eigen::MatrixXd X,
          std::vector<std::string> names = {});

  int n() const { return static_cast<int>(t_.size()); }
  int p() const { return static_cast<int>(X_.cols()); }

  const Eigen::VectorXd& t() const { return t_; }
  const Eigen::VectorXd& log_t() const { return log_t_; }
  const Eigen::VectorXd& delta() const { return delta_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const std::vector<std::string>& names() const { return names_; }

  int n_events() const;

  /// Hash of every stored value; used to key cached marginal likelihoods.
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Rows reordered as rows[i] -> i.
  Dataset permuted(const std::vector<int>& rows) const;

  /// Column means and population standard deviations removed in place.
  struct Scaling {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
  };
  Scaling standardize();

  /// True when every column has mean ~0 and sd ~1.
  bool is_standardized(double tol = 1e-8) const;

 private:
  void finalize();

  Eigen::VectorXd t_;
  Eigen::VectorXd log_t_;
  Eigen::VectorXd delta_;
  Eigen::MatrixXd X_;
  std::vector<std::string> names_;
  std::uint64_t fingerprint_ = 0;
};

}  // namespace ghsel
