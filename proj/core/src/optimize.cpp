#include "ghsel/optimize.hpp"

#include <cmath>
#include <limits>

namespace ghsel {

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIter: return "max_iter";
    case FitStatus::Boundary: return "boundary";
    case FitStatus::SingularHessian: return "singular_hessian";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool usable(const LikEval& e) { return std::isfinite(e.value) && !e.boundary; }

double grad_max(const Eigen::VectorXd& g) { return g.size() ? g.cwiseAbs().maxCoeff() : 0.0; }

bool converged(const LikEval& e, double tol) {
  return grad_max(e.grad) <= tol * (1.0 + std::abs(e.value));
}

// Inverse of -H when it is positive definite.
std::optional<Eigen::MatrixXd> inverse_neg_hessian(const Eigen::MatrixXd& H) {
  Eigen::LLT<Eigen::MatrixXd> llt(-H);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
}

// Largest allowed coordinate change in one step.
constexpr double kMaxStep = 5.0;

}  // namespace

FitRecord maximize(const ObjectiveFn& f, Eigen::VectorXd x, const OptimOptions& opt) {
  FitRecord rec;
  const Eigen::Index D = x.size();
  LikEval cur = f(x, 2);
  ++rec.n_evals;
  if (!std::isfinite(cur.value)) {
    rec.psi = x;
    rec.objective = -kInf;
    rec.status = FitStatus::Boundary;
    return rec;
  }

  Eigen::MatrixXd Hinv;
  bool identity = false;
  if (auto inv = inverse_neg_hessian(cur.hess)) {
    Hinv = *inv;
  } else {
    Hinv = Eigen::MatrixXd::Identity(D, D);
    identity = true;
  }

  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (converged(cur, opt.grad_tol)) break;
    // Minimising F = -f, so grad F = -g and the quasi-Newton direction is Hinv g.
    Eigen::VectorXd dir = Hinv * cur.grad;
    double slope = cur.grad.dot(dir);
    if (!(slope > 0.0)) {
      Hinv.setIdentity();
      identity = true;
      dir = cur.grad;
      slope = cur.grad.squaredNorm();
    }
    double t = std::min(1.0, kMaxStep / std::max(grad_max(dir), 1e-300));
    LikEval next;
    Eigen::VectorXd xn;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      xn = x + t * dir;
      next = f(xn, 1);
      ++rec.n_evals;
      if (usable(next) && next.value >= cur.value + opt.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (identity) break;
      Hinv.setIdentity();
      identity = true;
      continue;
    }
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = cur.grad - next.grad;  // change in grad F
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (identity) {
        Hinv *= sy / y.squaredNorm();
        identity = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = Hinv * y;
      Hinv += rho * rho * (y.dot(Hy) + sy) * (s * s.transpose()) -
              rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    x = xn;
    cur = next;
  }
  rec.iterations = it;

  // Exact Newton refinement; only accepted steps that increase the objective.
  cur = f(x, 2);
  ++rec.n_evals;
  for (int k = 0; k < opt.newton_polish; ++k) {
    if (grad_max(cur.grad) <= 1e-12 * (1.0 + std::abs(cur.value))) break;
    auto inv = inverse_neg_hessian(cur.hess);
    if (!inv) break;
    const Eigen::VectorXd step = *inv * cur.grad;
    if (grad_max(step) > kMaxStep) break;
    LikEval next = f(x + step, 2);
    ++rec.n_evals;
    if (!usable(next) || next.value < cur.value - 1e-12 * (1.0 + std::abs(cur.value))) break;
    if (grad_max(next.grad) >= grad_max(cur.grad) && next.value <= cur.value) break;
    x += step;
    cur = std::move(next);
  }

  rec.psi = x;
  rec.objective = cur.value;
  rec.grad_max = grad_max(cur.grad);
  rec.fisher = -cur.hess;
  const bool pd = Eigen::LLT<Eigen::MatrixXd>(rec.fisher).info() == Eigen::Success;
  if (std::abs(x[0]) > opt.nu_bound || cur.boundary || !std::isfinite(cur.value))
    rec.status = FitStatus::Boundary;
  else if (!pd)
    rec.status = FitStatus::SingularHessian;
  else if (converged(cur, opt.grad_tol))
    rec.status = FitStatus::Converged;
  else
    rec.status = FitStatus::MaxIter;
  return rec;
}

Eigen::VectorXd default_init(const Gamma& g, const Dataset& data) {
  const auto& lt = data.log_t();
  const auto& d = data.delta();
  const bool any = data.n_events() > 0;
  double sum = 0.0, sq = 0.0, cnt = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    if (any && d[i] == 0.0) continue;
    sum += lt[i];
    cnt += 1.0;
  }
  const double mean = sum / cnt;
  for (int i = 0; i < data.n(); ++i) {
    if (any && d[i] == 0.0) continue;
    sq += (lt[i] - mean) * (lt[i] - mean);
  }
  double sd = std::sqrt(sq / cnt);
  if (!(sd > 1e-8)) sd = 1.0;
  return common_init(g, -std::log(sd), mean / sd);
}

Eigen::VectorXd common_init(const Gamma& g, double nu, double theta0) {
  const bool aft = classify(g) == HazardClass::AFT;
  const auto q = time_columns(g).size();
  const auto p = aft ? 0 : hazard_columns(g).size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 + q + p));
  x[0] = nu;
  x[1] = theta0;
  return x;
}

Eigen::VectorXd project_psi(const Gamma& from, const Eigen::VectorXd& psi, const Gamma& to) {
  Eigen::VectorXd x = common_init(to, psi[0], psi[1]);
  const bool from_aft = classify(from) == HazardClass::AFT;
  const bool to_aft = classify(to) == HazardClass::AFT;
  const auto ft = time_columns(from);
  const auto fh = from_aft ? ft : hazard_columns(from);
  const auto tt = time_columns(to);
  const auto th = to_aft ? std::vector<int>{} : hazard_columns(to);
  const double emn = std::exp(-psi[0]);
  auto theta_of = [&](int col) -> double {
    for (std::size_t c = 0; c < ft.size(); ++c)
      if (ft[c] == col) return psi[static_cast<Eigen::Index>(2 + c)];
    return 0.0;
  };
  auto eta_of = [&](int col) -> double {
    for (std::size_t c = 0; c < fh.size(); ++c)
      if (fh[c] == col)
        return from_aft ? emn * psi[static_cast<Eigen::Index>(2 + c)]
                        : psi[static_cast<Eigen::Index>(2 + ft.size() + c)];
    return 0.0;
  };
  for (std::size_t c = 0; c < tt.size(); ++c) x[static_cast<Eigen::Index>(2 + c)] = theta_of(tt[c]);
  for (std::size_t c = 0; c < th.size(); ++c)
    x[static_cast<Eigen::Index>(2 + tt.size() + c)] = eta_of(th[c]);
  return x;
}

FitRecord fit_mle(const Gamma& g, const Dataset& data, Kernel k,
                  const std::optional<Eigen::VectorXd>& init, const OptimOptions& opt) {
  const GhLikelihood lik(g, data, k);
  const ObjectiveFn f = [&lik](const Eigen::VectorXd& x, int order) { return lik.evaluate(x, order); };
  FitRecord rec = maximize(f, init ? *init : default_init(g, data), opt);
  rec.loglik = rec.objective;
  return rec;
}

FitRecord fit_map(const Gamma& g, const Dataset& data, Kernel k, const CoefficientPrior& prior,
                  const CommonPrior& cp, const std::optional<Eigen::VectorXd>& init,
                  const OptimOptions& opt) {
  const GhLikelihood lik(g, data, k);
  const ProductPrior pp(g, data, prior.g_Ct, prior.g_Ch);
  const ObjectiveFn f = [&](const Eigen::VectorXd& x, int order) {
    LikEval e = lik.evaluate(x, order);
    Eigen::VectorXd gp;
    Eigen::MatrixXd hp;
    e.value += pp.log_joint(x, cp, order >= 1 ? &gp : nullptr, order >= 2 ? &hp : nullptr);
    if (order >= 1) e.grad += gp;
    if (order >= 2) e.hess += hp;
    return e;
  };
  FitRecord rec = maximize(f, init ? *init : default_init(g, data), opt);
  rec.loglik = lik.value(rec.psi);
  return rec;
}

}  // namespace ghsel
