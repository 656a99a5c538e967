#include "ghsel/marglik.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ghsel {

std::string_view to_string(MarglikMethod m) {
  switch (m) {
    case MarglikMethod::ILA: return "ila";
    case MarglikMethod::ILA_RobustG: return "ila_robust_g";
    case MarglikMethod::LA: return "la";
  }
  return "?";
}

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

MarglikRecord failed(const Gamma& g, MarglikMethod m, FitRecord fit, std::string why) {
  MarglikRecord r;
  r.gamma_key = g.key();
  r.method = m;
  r.fit = std::move(fit);
  r.log_ml = kNegInf;
  r.failure = std::move(why);
  return r;
}

// Normal prior on nu used by the ILA.
std::pair<double, double> ila_nu_prior(const CommonPrior& cp) {
  if (cp.default_gamma()) return {cp.nu_mean, cp.nu_sd};
  return nu_normal_moments(cp.alpha_nu, cp.beta_nu);
}

// Everything in the ILA that does not depend on g.
struct IlaPieces {
  double loglik = 0.0;
  int d = 0;
  Eigen::Matrix2d Jzz;
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();    // J_zk J_k^-1 J_kz
  Eigen::Vector2d v = Eigen::Vector2d::Zero();    // J_zk k_hat
  double kJk = 0.0;                               // k_hat' J_k k_hat
  Eigen::Vector2d z;
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  IlaOptions opt;
};

std::optional<IlaPieces> ila_pieces(const FitRecord& fit, const CommonPrior& cp,
                                    const IlaOptions& opt, std::string& why) {
  IlaPieces pc;
  pc.opt = opt;
  pc.loglik = fit.loglik;
  const Eigen::MatrixXd& J = fit.fisher;
  pc.d = static_cast<int>(J.rows()) - 2;
  pc.Jzz = J.topLeftCorner<2, 2>();
  pc.z = fit.psi.head<2>();
  const auto [mu, sd] = ila_nu_prior(cp);
  pc.D(0, 0) = 1.0 / (sd * sd);
  pc.D(1, 1) = 1.0 / cp.K;
  pc.m << mu, 0.0;
  if (pc.d > 0) {
    const Eigen::MatrixXd Jk = J.bottomRightCorner(pc.d, pc.d);
    const Eigen::MatrixXd Jkz = J.bottomLeftCorner(pc.d, 2);
    // One factorisation serves all three Schur-complement corrections.
    Eigen::LLT<Eigen::MatrixXd> llt(Jk);
    if (llt.info() != Eigen::Success) {
      why = "coefficient block of the observed information is not positive definite";
      return std::nullopt;
    }
    pc.S = Jkz.transpose() * llt.solve(Jkz);
    pc.S = 0.5 * (pc.S + pc.S.transpose()).eval();
    const Eigen::VectorXd k = fit.psi.tail(pc.d);
    pc.v = Jkz.transpose() * k;
    pc.kJk = k.dot(Jk * k);
  }
  return pc;
}

struct IlaValue {
  double log_ml = kNegInf;
  Eigen::Matrix2d P;
  Eigen::Vector2d h;
  double C = 0.0;
};

IlaValue ila_value(const IlaPieces& pc, int n, double g) {
  IlaValue out;
  const double ng = n * g;
  const double c = ng / (1.0 + ng);
  const Eigen::Matrix2d Jt = pc.Jzz - c * pc.S;
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  double kterm = 0.0;
  if (pc.opt.form == IlaForm::Corrected && pc.d > 0) {
    w = pc.v / (1.0 + ng);
    kterm = 0.5 * pc.kJk / (1.0 + ng);
  }
  out.P = Jt + pc.D;
  out.h = Jt * pc.z + pc.D * pc.m + w;
  out.C = -0.5 * pc.z.dot(Jt * pc.z) - 0.5 * pc.m.dot(pc.D * pc.m) - w.dot(pc.z) - kterm;
  Eigen::LLT<Eigen::Matrix2d> llt(out.P);
  if (llt.info() != Eigen::Success) return out;
  const double logdetP = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
  double lm = pc.loglik - 0.5 * pc.d * std::log1p(ng) - 0.5 * logdetP +
              0.5 * out.h.dot(llt.solve(out.h)) + out.C;
  if (pc.opt.normalise_common) lm += 0.5 * std::log(pc.D(0, 0) * pc.D(1, 1));
  out.log_ml = lm;
  return out;
}

}  // namespace

Eigen::VectorXd ila_posterior_mode(const FitRecord& fit, int n, double g_E, const CommonPrior& cp) {
  const Eigen::MatrixXd& J = fit.fisher;
  const auto dim = J.rows();
  const auto d = dim - 2;
  const auto [mu, sd] = ila_nu_prior(cp);
  Eigen::MatrixXd Pr = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
  Pr(0, 0) = 1.0 / (sd * sd);
  Pr(1, 1) = 1.0 / cp.K;
  m(0) = mu;
  if (d > 0) Pr.bottomRightCorner(d, d) = J.bottomRightCorner(d, d) / (n * g_E);
  const Eigen::MatrixXd A = J + Pr;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("ILA posterior precision is not positive definite");
  return llt.solve(J * fit.psi + Pr * m);
}

MarglikRecord ila_from_fit(const Gamma& g, const FitRecord& fit, int n, double g_E,
                           const CommonPrior& cp, const IlaOptions& opt) {
  if (!fit.ok()) return failed(g, MarglikMethod::ILA, fit, "fit " + std::string(to_string(fit.status)));
  std::string why;
  const auto pc = ila_pieces(fit, cp, opt, why);
  if (!pc) return failed(g, MarglikMethod::ILA, fit, why);
  const auto val = ila_value(*pc, n, g_E);
  MarglikRecord r;
  r.gamma_key = g.key();
  r.method = MarglikMethod::ILA;
  r.fit = fit;
  r.P = val.P;
  r.h = val.h;
  r.C = val.C;
  r.log_ml = val.log_ml;
  if (!std::isfinite(r.log_ml)) r.failure = "P is not positive definite";
  return r;
}

MarglikRecord ila_log_marglik(const Gamma& g, const Dataset& data, Kernel k, double g_E,
                              const CommonPrior& cp, const IlaOptions& opt,
                              const std::optional<Eigen::VectorXd>& init, const OptimOptions& oo) {
  return ila_from_fit(g, fit_mle(g, data, k, init, oo), data.n(), g_E, cp, opt);
}

MarglikRecord ila_robust_from_fit(const Gamma& g, const FitRecord& fit, int n,
                                  const CommonPrior& cp, const IlaOptions& opt,
                                  const RobustGOptions& ro) {
  MarglikRecord base = ila_from_fit(g, fit, n, 1.0, cp, opt);
  base.method = MarglikMethod::ILA_RobustG;
  if (!std::isfinite(base.log_ml)) return base;
  const int d = static_cast<int>(fit.fisher.rows()) - 2;
  if (d == 0) return base;  // no g-dependence

  std::string why;
  const auto pc = ila_pieces(fit, cp, opt, why);
  const double inv_n = 1.0 / n;
  const double a = 0.5 * std::sqrt((1.0 + n) / (static_cast<double>(n) * (d + 1.0)));
  // Integrate over t = log(g + 1/n): pi(g) dg = a exp(-t/2) dt.
  const double t_lo = std::log(robust_g_lower_bound(n, d) + inv_n);
  const double t_hi = std::log(ro.cutoff + inv_n);
  auto log_integrand = [&](double t) {
    const double gg = std::exp(t) - inv_n;
    return ila_value(*pc, n, gg).log_ml + std::log(a) - 0.5 * t;
  };
  // Shift by the largest log-integrand on a coarse grid.
  double shift = kNegInf;
  for (int i = 0; i <= 64; ++i) shift = std::max(shift, log_integrand(t_lo + (t_hi - t_lo) * i / 64.0));
  if (!std::isfinite(shift)) return failed(g, MarglikMethod::ILA_RobustG, fit, "robust-g integrand not finite");

  double err = 0.0;
  const double body = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::exp(log_integrand(t) - shift); }, t_lo, t_hi, 15, ro.tol, &err);
  // Beyond the cutoff m(g) decays like (g + 1/n)^{-d/2}.
  const double G = ro.cutoff + inv_n;
  const double log_mG = ila_value(*pc, n, ro.cutoff).log_ml;
  const double tail = std::exp(log_mG - shift) * a * std::pow(G, -0.5) * 2.0 / (1.0 + d);
  const double total = body + tail;
  if (!(total > 0.0) || !std::isfinite(total) || err > 1e-6 * total)
    return failed(g, MarglikMethod::ILA_RobustG, fit,
                  "robust-g quadrature did not converge (estimate " + std::to_string(total) +
                      ", error " + std::to_string(err) + ")");
  base.log_ml = shift + std::log(total);
  return base;
}

MarglikRecord ila_log_marglik_robust_g(const Gamma& g, const Dataset& data, Kernel k,
                                       const CommonPrior& cp, const IlaOptions& opt,
                                       const RobustGOptions& ro,
                                       const std::optional<Eigen::VectorXd>& init,
                                       const OptimOptions& oo) {
  return ila_robust_from_fit(g, fit_mle(g, data, k, init, oo), data.n(), cp, opt, ro);
}

MarglikRecord la_log_marglik(const Gamma& g, const Dataset& data, Kernel k,
                             const CoefficientPrior& prior, const CommonPrior& cp,
                             const LaOptions& opt, const std::optional<Eigen::VectorXd>& init,
                             const OptimOptions& oo) {
  FitRecord fit;
  try {
    fit = fit_map(g, data, k, prior, cp, init, oo);
  } catch (const RankDeficiencyError& e) {
    return failed(g, MarglikMethod::LA, fit, e.what());
  }
  if (!fit.ok()) return failed(g, MarglikMethod::LA, fit, "fit " + std::string(to_string(fit.status)));
  Eigen::LLT<Eigen::MatrixXd> llt(fit.fisher);
  if (llt.info() != Eigen::Success)
    return failed(g, MarglikMethod::LA, fit, "penalised curvature is not positive definite");
  const auto dim = static_cast<double>(fit.fisher.rows());
  const double d = dim - 2.0;
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  MarglikRecord r;
  r.gamma_key = g.key();
  r.method = MarglikMethod::LA;
  r.fit = std::move(fit);
  r.log_ml = r.fit.objective + 0.5 * (opt.full_dimension ? dim : d) * kLog2Pi - 0.5 * logdet;
  return r;
}

std::shared_ptr<const MarglikRecord> MarglikCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = map_.find(key);
  return it == map_.end() ? nullptr : it->second;
}

std::shared_ptr<const MarglikRecord> MarglikCache::insert(const std::string& key, MarglikRecord rec) {
  auto ptr = std::make_shared<const MarglikRecord>(std::move(rec));
  std::unique_lock lock(mu_);
  auto [it, inserted] = map_.try_emplace(key, ptr);
  if (!inserted) return it->second;
  if (capacity_ > 0) {
    order_.push_back(key);
    while (map_.size() > capacity_) {
      map_.erase(order_.front());
      order_.pop_front();
    }
  }
  return ptr;
}

std::size_t MarglikCache::size() const {
  std::shared_lock lock(mu_);
  return map_.size();
}

void MarglikCache::clear() {
  std::unique_lock lock(mu_);
  map_.clear();
  order_.clear();
}

std::string MarglikConfig::fingerprint() const {
  std::ostringstream os;
  os << std::setprecision(17) << to_string(method) << ';' << to_string(kernel) << ';'
     << to_string(coef.kind) << ";gE=" << coef.g_E << ";gCt=" << coef.g_Ct << ";gCh=" << coef.g_Ch
     << ";an=" << common.alpha_nu << ";bn=" << common.beta_nu << ";K=" << common.K
     << ";mn=" << common.nu_mean << ";sn=" << common.nu_sd
     << ";ila=" << static_cast<int>(ila.form) << static_cast<int>(ila.normalise_common)
     << ";la=" << la.full_dimension << ";cut=" << robust.cutoff << ";tol=" << optim.grad_tol
     << ";it=" << optim.max_iter;
  return os.str();
}

MarglikEngine::MarglikEngine(const Dataset& data, MarglikConfig cfg, std::shared_ptr<MarglikCache> cache)
    : data_(&data), cfg_(std::move(cfg)), cache_(std::move(cache)) {
  cfg_.coef.validate();
  cfg_.common.validate();
  std::ostringstream os;
  os << cfg_.fingerprint() << "|data=" << std::hex << data.fingerprint() << '|';
  prefix_ = os.str();
  const Gamma null = Gamma::null(data.p());
  const Eigen::VectorXd start = default_init(null, data);
  FitRecord fit = cfg_.method == MarglikMethod::LA
                      ? fit_map(null, data, cfg_.kernel, cfg_.coef, cfg_.common, start, cfg_.optim)
                      : fit_mle(null, data, cfg_.kernel, start, cfg_.optim);
  common_start_ = fit.ok() ? Eigen::Vector2d(fit.psi.head<2>()) : Eigen::Vector2d(start.head<2>());
}

std::string MarglikEngine::key(const Gamma& g) const { return prefix_ + g.key(); }

std::shared_ptr<const MarglikRecord> MarglikEngine::evaluate(const Gamma& g) {
  const std::string k = key(g);
  if (auto hit = cache_->get(k)) return hit;
  return cache_->insert(k, compute(g, common_init(g, common_start_[0], common_start_[1])));
}

std::shared_ptr<const MarglikRecord> MarglikEngine::evaluate(const Gamma& g, const Eigen::VectorXd& init) {
  return cache_->insert(key(g), compute(g, init));
}

MarglikRecord MarglikEngine::compute(const Gamma& g, const Eigen::VectorXd& init) const {
  if (g.size() != data_->p()) throw std::invalid_argument("gamma length does not match the dataset");
  switch (cfg_.method) {
    case MarglikMethod::ILA:
      return ila_log_marglik(g, *data_, cfg_.kernel, cfg_.coef.g_E, cfg_.common, cfg_.ila, init, cfg_.optim);
    case MarglikMethod::ILA_RobustG:
      return ila_log_marglik_robust_g(g, *data_, cfg_.kernel, cfg_.common, cfg_.ila, cfg_.robust, init,
                                      cfg_.optim);
    case MarglikMethod::LA:
      return la_log_marglik(g, *data_, cfg_.kernel, cfg_.coef, cfg_.common, cfg_.la, init, cfg_.optim);
  }
  return {};
}

}  // namespace ghsel
