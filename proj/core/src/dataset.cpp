#include "ghsel/dataset.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ghsel {
namespace {

std::uint64_t mix(std::uint64_t h, double x) {
  // FNV-1a over the bit pattern.
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd t, Eigen::VectorXd delta, Eigen::MatrixXd X,
                 std::vector<std::string> names)
    : t_(std::move(t)), delta_(std::move(delta)), X_(std::move(X)), names_(std::move(names)) {
  const auto n = t_.size();
  if (n < 1) throw std::invalid_argument("dataset needs at least one row");
  if (delta_.size() != n || X_.rows() != n)
    throw std::invalid_argument("dataset: t, delta and X must have the same number of rows");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(t_[i]) || t_[i] <= 0.0)
      throw std::invalid_argument("dataset: time in row " + std::to_string(i + 1) +
                                  " must be positive and finite");
    if (delta_[i] != 0.0 && delta_[i] != 1.0)
      throw std::invalid_argument("dataset: status in row " + std::to_string(i + 1) +
                                  " must be 0 or 1");
  }
  if (!X_.allFinite()) throw std::invalid_argument("dataset: covariates must be finite");
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < X_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Eigen::Index>(names_.size()) != X_.cols()) {
    throw std::invalid_argument("dataset: one name per covariate column required");
  }
  finalize();
}

void Dataset::finalize() {
  log_t_ = t_.array().log().matrix();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = mix(h, static_cast<double>(t_.size()));
  h = mix(h, static_cast<double>(X_.cols()));
  for (Eigen::Index i = 0; i < t_.size(); ++i) {
    h = mix(h, t_[i]);
    h = mix(h, delta_[i]);
  }
  for (Eigen::Index k = 0; k < X_.size(); ++k) h = mix(h, X_.data()[k]);
  fingerprint_ = h;
}

int Dataset::n_events() const { return static_cast<int>(delta_.sum()); }

Dataset Dataset::permuted(const std::vector<int>& rows) const {
  if (static_cast<int>(rows.size()) != n()) throw std::invalid_argument("permutation size");
  Eigen::VectorXd t(n()), d(n());
  Eigen::MatrixXd X(n(), p());
  for (int i = 0; i < n(); ++i) {
    t[i] = t_[rows[i]];
    d[i] = delta_[rows[i]];
    X.row(i) = X_.row(rows[i]);
  }
  return Dataset(std::move(t), std::move(d), std::move(X), names_);
}

Dataset::Scaling Dataset::standardize() {
  Scaling s{Eigen::VectorXd::Zero(p()), Eigen::VectorXd::Ones(p())};
  for (int j = 0; j < p(); ++j) {
    const double m = X_.col(j).mean();
    const double sd = std::sqrt((X_.col(j).array() - m).square().mean());
    s.mean[j] = m;
    s.sd[j] = sd;
    X_.col(j).array() -= m;
    if (sd > 0.0) X_.col(j) /= sd;
  }
  finalize();
  return s;
}

bool Dataset::is_standardized(double tol) const {
  for (int j = 0; j < p(); ++j) {
    const double m = X_.col(j).mean();
    const double var = (X_.col(j).array() - m).square().mean();
    if (std::abs(m) > tol || std::abs(var - 1.0) > 1e3 * tol) return false;
  }
  return true;
}

}  // namespace ghsel
