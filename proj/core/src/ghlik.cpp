#include "ghsel/ghlik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ghsel {

Eigen::VectorXd Psi::flatten() const {
  Eigen::VectorXd v(2 + theta.size() + eta.size());
  v << nu, theta0, theta, eta;
  return v;
}

Psi Psi::unflatten(const Eigen::VectorXd& v, int q, int p) {
  if (v.size() != 2 + q + p) throw std::invalid_argument("Psi::unflatten: length mismatch");
  Psi out;
  out.nu = v[0];
  out.theta0 = v[1];
  out.theta = v.segment(2, q);
  out.eta = v.segment(2 + q, p);
  return out;
}

NaturalParams to_natural(const Eigen::VectorXd& psi, const Gamma& g) {
  const int q = static_cast<int>(time_columns(g).size());
  const bool aft = classify(g) == HazardClass::AFT;
  const int p = aft ? 0 : static_cast<int>(hazard_columns(g).size());
  if (psi.size() != 2 + q + p) throw std::invalid_argument("to_natural: length mismatch");
  NaturalParams out;
  out.sigma = std::exp(-psi[0]);
  out.mu = psi[1] * out.sigma;
  out.alpha = -out.sigma * psi.segment(2, q);
  out.beta = aft ? out.alpha : Eigen::VectorXd(-psi.segment(2 + q, p));
  return out;
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return out;
}

}  // namespace

GhLikelihood::GhLikelihood(const Gamma& g, const Dataset& data, Kernel k)
    : gamma_(g), data_(&data), kernel_(k), aft_(classify(g) == HazardClass::AFT) {
  if (g.size() != data.p()) throw std::invalid_argument("gamma length does not match covariates");
  const auto tc = time_columns(g);
  const auto hc = hazard_columns(g);
  q_ = static_cast<int>(tc.size());
  Xt_ = select_columns(data.X(), tc);
  if (aft_) {
    p_ = q_;
    Xh_ = Xt_;
  } else {
    p_ = static_cast<int>(hc.size());
    Xh_ = select_columns(data.X(), hc);
  }
}

LikEval GhLikelihood::evaluate_full(double nu, double theta0, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& eta, int order, bool tie_aft) const {
  const int n = data_->n();
  const auto& logt = data_->log_t();
  const auto& delta = data_->delta();
  const double en = std::exp(nu);
  const double emn = std::exp(-nu);

  Eigen::VectorXd a = q_ > 0 ? Eigen::VectorXd(Xt_ * theta) : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd b;
  if (tie_aft)
    b = emn * a;
  else
    b = p_ > 0 ? Eigen::VectorXd(Xh_ * eta) : Eigen::VectorXd::Zero(n);

  LikEval out;
  Eigen::VectorXd lu, ls, luu, lus, lss;
  if (order >= 1) {
    lu.resize(n);
    ls.resize(n);
  }
  if (order >= 2) {
    luu.resize(n);
    lus.resize(n);
    lss.resize(n);
  }

  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    const double L = logt[i];
    const double d = delta[i];
    const double u = en * L - a[i] - theta0;
    double s = emn * a[i] - b[i];
    if (s > kClamp || s < -kClamp) {
      s = std::clamp(s, -kClamp, kClamp);
      out.boundary = true;
    }
    const double v = std::exp(s);
    const auto t = baseline::terms(u, kernel_);
    value += d * (nu - L + s + t.log_f) + t.log_F_neg * (v - d);
    if (order >= 1) {
      lu[i] = d * t.d1 - (v - d) * t.r;
      ls[i] = d + t.log_F_neg * v;
    }
    if (order >= 2) {
      luu[i] = d * (t.d2 - t.d1 * t.d1) - (v - d) * t.kappa;
      lus[i] = -t.r * v;
      lss[i] = t.log_F_neg * v;
    }
  }
  out.value = value;
  if (order < 1) return out;

  const int P = tie_aft ? q_ : p_;
  const int D = 2 + q_ + P;
  const Eigen::ArrayXd Lw = logt.array() * en;
  const Eigen::ArrayXd aw = a.array() * emn;

  out.grad.resize(D);
  out.grad[0] = delta.sum() + (lu.array() * Lw).sum() - (ls.array() * aw).sum();
  out.grad[1] = -lu.sum();
  if (q_ > 0) out.grad.segment(2, q_) = Xt_.transpose() * (emn * ls - lu);
  if (P > 0) out.grad.segment(2 + q_, P) = -(Xh_.transpose() * ls);
  if (order < 2) return out;

  // Gradients of u and s with respect to the parameters, one row per observation.
  Eigen::MatrixXd Gu = Eigen::MatrixXd::Zero(n, D);
  Eigen::MatrixXd Gs = Eigen::MatrixXd::Zero(n, D);
  Gu.col(0) = Lw.matrix();
  Gu.col(1).setConstant(-1.0);
  Gs.col(0) = -aw.matrix();
  if (q_ > 0) {
    Gu.middleCols(2, q_) = -Xt_;
    Gs.middleCols(2, q_) = emn * Xt_;
  }
  if (P > 0) Gs.middleCols(2 + q_, P) = -Xh_;

  const Eigen::MatrixXd A = Gu.transpose() * (lus.asDiagonal() * Gs);
  Eigen::MatrixXd H = Gu.transpose() * (luu.asDiagonal() * Gu) + A + A.transpose() +
                      Gs.transpose() * (lss.asDiagonal() * Gs);
  // Second derivatives of u and s themselves.
  H(0, 0) += (lu.array() * Lw).sum() + (ls.array() * aw).sum();
  if (q_ > 0) {
    const Eigen::VectorXd c = -emn * (Xt_.transpose() * ls);
    H.block(2, 0, q_, 1) += c;
    H.block(0, 2, 1, q_) += c.transpose();
  }
  out.hess = 0.5 * (H + H.transpose());
  return out;
}

LikEval GhLikelihood::evaluate(const Eigen::VectorXd& psi, int order) const {
  if (psi.size() != dim())
    throw std::invalid_argument("psi has length " + std::to_string(psi.size()) + ", model needs " +
                                std::to_string(dim()));
  const double nu = psi[0];
  const double theta0 = psi[1];
  const Eigen::VectorXd theta = psi.segment(2, q_);
  if (!aft_) return evaluate_full(nu, theta0, theta, psi.segment(2 + q_, p_), order, false);

  const double emn = std::exp(-nu);
  const Eigen::VectorXd eta = emn * theta;
  LikEval full = evaluate_full(nu, theta0, theta, eta, order, true);
  if (order < 1) return full;

  // Chain rule through eta = exp(-nu) theta.
  const int D = 2 + q_;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 + 2 * q_, D);
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  for (int j = 0; j < q_; ++j) {
    J(2 + j, 2 + j) = 1.0;
    J(2 + q_ + j, 0) = -eta[j];
    J(2 + q_ + j, 2 + j) = emn;
  }
  LikEval out;
  out.value = full.value;
  out.boundary = full.boundary;
  out.grad = J.transpose() * full.grad;
  if (order >= 2) {
    Eigen::MatrixXd H = J.transpose() * full.hess * J;
    for (int j = 0; j < q_; ++j) {
      const double ge = full.grad[2 + q_ + j];
      H(0, 0) += ge * eta[j];
      H(0, 2 + j) -= ge * emn;
      H(2 + j, 0) -= ge * emn;
    }
    out.hess = 0.5 * (H + H.transpose());
  }
  return out;
}

double GhLikelihood::value_aft(const Eigen::VectorXd& psi) const {
  if (!aft_) throw std::logic_error("value_aft called on a non-AFT model");
  if (psi.size() != dim()) throw std::invalid_argument("psi length mismatch");
  const double nu = psi[0];
  const double en = std::exp(nu);
  const Eigen::VectorXd a = q_ > 0 ? Eigen::VectorXd(Xt_ * psi.segment(2, q_))
                                   : Eigen::VectorXd::Zero(data_->n());
  const auto& logt = data_->log_t();
  const auto& delta = data_->delta();
  double value = 0.0;
  for (int i = 0; i < data_->n(); ++i) {
    const double L = logt[i];
    const double u = en * L - a[i] - psi[1];
    const auto t = baseline::terms(u, kernel_);
    value += delta[i] * (nu - L + t.log_f) + t.log_F_neg * (1.0 - delta[i]);
  }
  return value;
}

double loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data, Kernel k) {
  return GhLikelihood(g, data, k).evaluate(psi, 0).value;
}

Eigen::VectorXd grad_loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                            Kernel k) {
  return GhLikelihood(g, data, k).evaluate(psi, 1).grad;
}

Eigen::MatrixXd hess_loglik(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                            Kernel k) {
  return GhLikelihood(g, data, k).evaluate(psi, 2).hess;
}

Eigen::MatrixXd observed_fisher(const Eigen::VectorXd& psi, const Gamma& g, const Dataset& data,
                                Kernel k) {
  return -hess_loglik(psi, g, data, k);
}

FisherBlocks split_fisher(const Eigen::MatrixXd& J) {
  const Eigen::Index d = J.rows() - 2;
  FisherBlocks b;
  b.common = J.topLeftCorner<2, 2>();
  b.cross = J.bottomLeftCorner(d, 2);
  b.coef = J.bottomRightCorner(d, d);
  return b;
}

}  // namespace ghsel
