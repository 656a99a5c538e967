#include "ghsel/marglik.hpp"
#include "ghsel/simulate.hpp"

#include "test_support.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>

using namespace ghsel;
using namespace ghsel::testing;

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

double log_normal_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& m, const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  const Eigen::VectorXd r = x - m;
  const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + logdet + r.dot(llt.solve(r)));
}

// Synthetic fit whose likelihood is exactly l_hat - 0.5 (psi - psi_hat)' J (psi - psi_hat).
FitRecord gaussian_fit(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const int dim = 2 + d;
  Eigen::MatrixXd A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = standard_normal(rng);
  FitRecord f;
  f.fisher = A * A.transpose() + dim * Eigen::MatrixXd::Identity(dim, dim);
  f.psi = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) f.psi(i) = standard_normal(rng);
  f.loglik = f.objective = -12.345;
  f.status = FitStatus::Converged;
  return f;
}

// Evidence of the Gaussian likelihood under the ILA prior, computed in full dimension.
double gaussian_evidence(const FitRecord& f, int n, double g, const CommonPrior& cp) {
  const auto dim = f.fisher.rows();
  const auto d = dim - 2;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
  S(0, 0) = cp.nu_sd * cp.nu_sd;
  S(1, 1) = cp.K;
  m(0) = cp.nu_mean;
  if (d > 0) S.bottomRightCorner(d, d) = n * g * Eigen::MatrixXd(f.fisher.bottomRightCorner(d, d)).inverse();
  const Eigen::MatrixXd Jinv = f.fisher.inverse();
  // integral of exp(-0.5 r'Jr) = (2 pi)^{dim/2} |J|^{-1/2}; the rest is a normal convolution.
  return f.loglik + 0.5 * dim * kLog2Pi - 0.5 * std::log(f.fisher.determinant()) +
         log_normal_pdf(f.psi, m, Jinv + S);
}

Dataset small_data(int n, int p, std::uint64_t seed, double censor = 0.3) {
  Rng rng = make_rng(seed);
  return random_dataset(n, p, rng, censor);
}

}  // namespace

TEST(Ila, ExactForGaussianLikelihood) {
  CommonPrior cp;
  for (int d : {0, 1, 3}) {
    for (double g : {0.5, 1.0, 40.0}) {
      const auto f = gaussian_fit(d, 100 + d);
      const auto rec = ila_from_fit(Gamma::null(1), f, 50, g, cp);
      EXPECT_NEAR(rec.log_ml, gaussian_evidence(f, 50, g, cp), 1e-10) << d << " " << g;
    }
  }
}

TEST(Ila, ExactForGaussianLikelihoodWithNarrowPriors) {
  CommonPrior cp;
  cp.nu_mean = 0.3;
  cp.nu_sd = 0.8;
  cp.K = 2.0;
  const auto f = gaussian_fit(2, 7);
  const auto rec = ila_from_fit(Gamma::null(1), f, 20, 1.0, cp);
  EXPECT_NEAR(rec.log_ml, gaussian_evidence(f, 20, 1.0, cp), 1e-10);
}

TEST(Ila, PrintedFormDropsCrossTerms) {
  CommonPrior cp;
  const auto f = gaussian_fit(2, 8);
  IlaOptions printed;
  printed.form = IlaForm::AsPrinted;
  const double a = ila_from_fit(Gamma::null(1), f, 30, 1.0, cp).log_ml;
  const double b = ila_from_fit(Gamma::null(1), f, 30, 1.0, cp, printed).log_ml;
  EXPECT_TRUE(std::isfinite(b));
  EXPECT_GT(std::abs(a - b), 1e-6);
  // With zero coefficients at the MLE the two forms coincide.
  auto f0 = f;
  f0.psi.tail(2).setZero();
  EXPECT_NEAR(ila_from_fit(Gamma::null(1), f0, 30, 1.0, cp).log_ml,
              ila_from_fit(Gamma::null(1), f0, 30, 1.0, cp, printed).log_ml, 1e-12);
}

TEST(Ila, NullModelMatchesTwoByTwoFormula) {
  const auto d = small_data(40, 2, 1);
  CommonPrior cp;
  const Gamma g = Gamma::null(2);
  const auto fit = fit_mle(g, d, Kernel::Normal);
  ASSERT_TRUE(fit.ok());
  const auto rec = ila_from_fit(g, fit, d.n(), 1.0, cp);
  const Eigen::Matrix2d J = fit.fisher;
  const Eigen::Vector2d z = fit.psi;
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
  D(0, 0) = 1.0 / (cp.nu_sd * cp.nu_sd);
  D(1, 1) = 1.0 / cp.K;
  const Eigen::Vector2d m(cp.nu_mean, 0.0);
  const Eigen::Matrix2d P0 = J + D;
  const Eigen::Vector2d h0 = J * z + D * m;
  const double C0 = -0.5 * z.dot(J * z) - 0.5 * m.dot(D * m);
  const double expect = fit.loglik - 0.5 * std::log(P0.determinant()) +
                        0.5 * h0.dot(P0.inverse() * h0) + C0 + 0.5 * std::log(D.determinant());
  EXPECT_NEAR(rec.log_ml, expect, 1e-9);
  EXPECT_NEAR((rec.P - P0).norm(), 0.0, 1e-12 * P0.norm());
  EXPECT_NEAR((rec.h - h0).norm(), 0.0, 1e-12 * h0.norm());
  EXPECT_EQ(rec.P(0, 1), rec.P(1, 0));
  // No g-dependence without coefficients.
  EXPECT_EQ(ila_from_fit(g, fit, d.n(), 7.0, cp).log_ml, rec.log_ml);
}

TEST(Ila, MatchesQuadratureForSmallPhModel) {
  const auto d = small_data(30, 1, 2);
  CommonPrior cp;
  const Gamma g = Gamma::parse("2");
  const auto fit = fit_mle(g, d, Kernel::Normal);
  ASSERT_TRUE(fit.ok());
  const double ila = ila_from_fit(g, fit, d.n(), 1.0, cp).log_ml;
  const Eigen::MatrixXd Sk = lcm_prior_cov(fit.fisher.bottomRightCorner(1, 1), d.n(), 1.0);
  const GhLikelihood lik(g, d, Kernel::Normal);
  auto logpost = [&](const Eigen::VectorXd& psi) {
    const double sk = Sk(0, 0);
    return lik.value(psi) - 0.5 * std::pow((psi(0) - cp.nu_mean) / cp.nu_sd, 2) -
           std::log(cp.nu_sd) - 0.5 * psi(1) * psi(1) / cp.K - 0.5 * std::log(cp.K) -
           0.5 * psi(2) * psi(2) / sk - 0.5 * std::log(sk) - 1.5 * kLog2Pi;
  };
  const Eigen::VectorXd mode = ila_posterior_mode(fit, d.n(), 1.0, cp);
  const Eigen::MatrixXd cov = fit.fisher.inverse();
  const double quad = log_integral_gh(logpost, mode, cov, 16);
  EXPECT_NEAR(ila, quad, 0.15);
  // The rule is converged: doubling the nodes barely moves it.
  EXPECT_NEAR(quad, log_integral_gh(logpost, mode, cov, 24), 1e-4);
}

TEST(Ila, DoublingGShiftsByDimensionFactor) {
  const auto d = small_data(400, 2, 3);
  CommonPrior cp;
  const Gamma g = Gamma::parse("22");
  const auto fit = fit_mle(g, d, Kernel::Normal);
  ASSERT_TRUE(fit.ok());
  const double g0 = 1.0;
  const double a = ila_from_fit(g, fit, d.n(), g0, cp).log_ml;
  const double b = ila_from_fit(g, fit, d.n(), 2.0 * g0, cp).log_ml;
  const double ng = d.n() * g0;
  const double factor = -std::log((1.0 + 2.0 * ng) / (1.0 + ng));
  EXPECT_LT(b, a + 0.1);
  EXPECT_NEAR(b - a, factor, 0.1);
}

TEST(Ila, NonPositiveDefiniteCoefficientBlockFails) {
  auto f = gaussian_fit(2, 9);
  f.fisher.bottomRightCorner(2, 2) = -Eigen::Matrix2d::Identity();
  const auto rec = ila_from_fit(Gamma::null(1), f, 30, 1.0, CommonPrior{});
  EXPECT_EQ(rec.log_ml, -std::numeric_limits<double>::infinity());
  EXPECT_FALSE(rec.failure.empty());
  auto bad = gaussian_fit(1, 10);
  bad.status = FitStatus::MaxIter;
  EXPECT_EQ(ila_from_fit(Gamma::null(1), bad, 30, 1.0, CommonPrior{}).log_ml,
            -std::numeric_limits<double>::infinity());
}

TEST(Ila, PosteriorModeIsGaussianPosteriorMean) {
  CommonPrior cp;
  const auto f = gaussian_fit(2, 11);
  const Eigen::VectorXd mode = ila_posterior_mode(f, 25, 1.0, cp);
  // Gradient of the Gaussian log posterior vanishes at the mode.
  Eigen::MatrixXd Pr = Eigen::MatrixXd::Zero(4, 4);
  Pr(0, 0) = 1.0 / (cp.nu_sd * cp.nu_sd);
  Pr(1, 1) = 1.0 / cp.K;
  Pr.bottomRightCorner(2, 2) = f.fisher.bottomRightCorner(2, 2) / 25.0;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(4);
  m(0) = cp.nu_mean;
  const Eigen::VectorXd grad = -f.fisher * (mode - f.psi) - Pr * (mode - m);
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RobustG, NullModelEqualsFixedG) {
  const auto d = small_data(50, 2, 4);
  const Gamma g = Gamma::null(2);
  CommonPrior cp;
  const auto fit = fit_mle(g, d, Kernel::Normal);
  EXPECT_EQ(ila_robust_from_fit(g, fit, d.n(), cp).log_ml, ila_from_fit(g, fit, d.n(), 1.0, cp).log_ml);
  EXPECT_EQ(ila_robust_from_fit(g, fit, d.n(), cp).method, MarglikMethod::ILA_RobustG);
}

TEST(RobustG, CutoffDoublingIsNegligible) {
  const auto d = small_data(100, 1, 5);
  const Gamma g = Gamma::parse("2");
  CommonPrior cp;
  const auto fit = fit_mle(g, d, Kernel::Normal);
  ASSERT_TRUE(fit.ok());
  RobustGOptions a, b;
  b.cutoff = 2.0 * a.cutoff;
  const double la = ila_robust_from_fit(g, fit, d.n(), cp, {}, a).log_ml;
  const double lb = ila_robust_from_fit(g, fit, d.n(), cp, {}, b).log_ml;
  ASSERT_TRUE(std::isfinite(la));
  EXPECT_LT(std::abs(la - lb), 1e-8);
}

TEST(RobustG, MatchesDirectIntegralOverG) {
  const auto d = small_data(60, 3, 6);
  CommonPrior cp;
  for (const char* key : {"200", "220", "103"}) {
    const Gamma g = Gamma::parse(key);
    const auto fit = fit_mle(g, d, Kernel::Normal);
    ASSERT_TRUE(fit.ok());
    const int dd = static_cast<int>(fit.fisher.rows()) - 2;
    const double robust = ila_robust_from_fit(g, fit, d.n(), cp).log_ml;
    const double shift = ila_from_fit(g, fit, d.n(), 1.0, cp).log_ml;
    const double lb = robust_g_lower_bound(d.n(), dd);
    boost::math::quadrature::exp_sinh<double> integrator;
    const double I = integrator.integrate([&](double s) {
      const double gg = lb + s;
      return std::exp(ila_from_fit(g, fit, d.n(), gg, cp).log_ml - shift + robust_g_logpdf(gg, d.n(), dd));
    });
    EXPECT_NEAR(robust, shift + std::log(I), 1e-6) << key;
  }
}

TEST(RobustG, SpikePriorRecoversFixedG) {
  // A narrow spike at g0 integrates to the fixed-g value.
  const auto d = small_data(80, 2, 12);
  CommonPrior cp;
  const Gamma g = Gamma::parse("22");
  const auto fit = fit_mle(g, d, Kernel::Normal);
  const double g0 = 3.0, w = 1e-4;
  const double fixed = ila_from_fit(g, fit, d.n(), g0, cp).log_ml;
  double s = 0.0;
  const int m = 200;
  for (int i = 0; i < m; ++i) {
    const double gg = g0 - w + 2.0 * w * (i + 0.5) / m;
    s += std::exp(ila_from_fit(g, fit, d.n(), gg, cp).log_ml - fixed) / m;
  }
  EXPECT_NEAR(fixed + std::log(s), fixed, 1e-3);
}

TEST(La, MatchesQuadratureForSmallAftModel) {
  const auto d = small_data(30, 1, 13);
  CommonPrior cp;
  CoefficientPrior prior;
  prior.kind = PriorKind::Product;
  const Gamma g = Gamma::parse("4");
  const auto rec = la_log_marglik(g, d, Kernel::Normal, prior, cp);
  ASSERT_TRUE(std::isfinite(rec.log_ml));
  const GhLikelihood lik(g, d, Kernel::Normal);
  const ProductPrior pp(g, d, prior.g_Ct, prior.g_Ch);
  auto logpost = [&](const Eigen::VectorXd& psi) { return lik.value(psi) + pp.log_joint(psi, cp); };
  const Eigen::MatrixXd cov = rec.fit.fisher.inverse();
  const double quad = log_integral_gh(logpost, rec.fit.psi, cov, 20);
  EXPECT_NEAR(rec.log_ml, quad, 0.15);
  EXPECT_NEAR(quad, log_integral_gh(logpost, rec.fit.psi, cov, 28), 1e-4);
}

TEST(La, PrintedDimensionDiffersByLog2Pi) {
  const auto d = small_data(40, 2, 14);
  CoefficientPrior prior;
  prior.kind = PriorKind::Product;
  LaOptions printed;
  printed.full_dimension = false;
  const Gamma g = Gamma::parse("21");
  const double a = la_log_marglik(g, d, Kernel::Logistic, prior, CommonPrior{}).log_ml;
  const double b = la_log_marglik(g, d, Kernel::Logistic, prior, CommonPrior{}, printed).log_ml;
  EXPECT_NEAR(a - b, kLog2Pi, 1e-10);
}

TEST(La, PriorOnlyNullModelIsTwoDimensionalLaplace) {
  const Dataset d(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
  CommonPrior cp;
  CoefficientPrior prior;
  prior.kind = PriorKind::Product;
  const Gamma g = Gamma::null(1);
  const auto rec = la_log_marglik(g, d, Kernel::Normal, prior, cp);
  ASSERT_TRUE(std::isfinite(rec.log_ml));
  auto logpost = [&](const Eigen::VectorXd& psi) {
    return loglik(psi, g, d, Kernel::Normal) + log_common_prior(psi(0), psi(1), cp);
  };
  const Eigen::Vector2d x = rec.fit.psi;
  EXPECT_LT(fd_gradient(logpost, x).cwiseAbs().maxCoeff(), 1e-5);
  Eigen::Matrix2d H;
  const double h = 1e-3;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d ei = Eigen::Vector2d::Zero(), ej = Eigen::Vector2d::Zero();
      ei(i) = h;
      ej(j) = h;
      H(i, j) = -(logpost(x + ei + ej) - logpost(x + ei - ej) - logpost(x - ei + ej) +
                  logpost(x - ei - ej)) / (4 * h * h);
    }
  const double laplace = logpost(x) + kLog2Pi - 0.5 * std::log(H.determinant());
  EXPECT_NEAR(rec.log_ml, laplace, 1e-4);
}

TEST(La, LargeGAgreesWithIlaBayesFactor) {
  // With nearly flat coefficient priors both methods reduce to the likelihood
  // Laplace evidence; the prior scale terms are model-specific constants and
  // are removed explicitly.
  const auto d = small_data(300, 2, 15, 0.2);
  const double big = 1e12;
  CommonPrior cp;
  CoefficientPrior prior;
  prior.kind = PriorKind::Product;
  prior.g_Ct = prior.g_Ch = big;
  const Gamma null = Gamma::null(2), g = Gamma::parse("22");
  const double la_bf = la_log_marglik(g, d, Kernel::Normal, prior, cp).log_ml -
                       la_log_marglik(null, d, Kernel::Normal, prior, cp).log_ml;
  const auto fit = fit_mle(g, d, Kernel::Normal);
  const double ila_bf = ila_log_marglik(g, d, Kernel::Normal, big, cp).log_ml -
                        ila_log_marglik(null, d, Kernel::Normal, big, cp).log_ml;
  // log N(0 | 0, n g A^-1) differs between A = X'X and A = J_coef.
  const Eigen::MatrixXd Xh = d.X();
  const double scale_diff = 0.5 * std::log((Xh.transpose() * Xh).determinant()) -
                            0.5 * std::log(Eigen::MatrixXd(fit.fisher.bottomRightCorner(2, 2)).determinant());
  EXPECT_NEAR(la_bf - scale_diff, ila_bf, 0.2);
}

TEST(Marglik, InvariantToRowOrderAndInactiveColumns) {
  const auto d = small_data(60, 3, 16);
  std::vector<int> rows(60);
  for (int i = 0; i < 60; ++i) rows[static_cast<std::size_t>(i)] = (i * 37) % 60;
  const auto dp = d.permuted(rows);
  // Swap the two inactive columns 1 and 2.
  Eigen::MatrixXd X = d.X();
  X.col(1).swap(X.col(2));
  const Dataset dc(d.t(), d.delta(), X);
  CoefficientPrior prior;
  prior.kind = PriorKind::Product;
  const Gamma g = Gamma::parse("300");
  for (const auto* data : {&dp, &dc}) {
    EXPECT_NEAR(ila_log_marglik(g, *data, Kernel::Logistic, 1.0, CommonPrior{}).log_ml,
                ila_log_marglik(g, d, Kernel::Logistic, 1.0, CommonPrior{}).log_ml, 1e-7);
    EXPECT_NEAR(la_log_marglik(g, *data, Kernel::Logistic, prior, CommonPrior{}).log_ml,
                la_log_marglik(g, d, Kernel::Logistic, prior, CommonPrior{}).log_ml, 1e-7);
  }
}

TEST(Marglik, SpuriousVariableCostsHalfLogOnePlusNg) {
  const int reps = 20;
  const int n = 400;
  double sum = 0.0;
  int positive = 0;
  for (int r = 0; r < reps; ++r) {
    SimConfig sc;
    sc.n = n;
    sc.p = 5;
    sc.truth = standard_truth(HazardClass::PH, 5);
    sc.seed = 1000 + static_cast<std::uint64_t>(r);
    const auto sim = simulate_dataset(sc);
    const Gamma truth = sc.truth.gamma;
    int spare = 0;
    while (truth[spare] != 0) ++spare;
    const double a = ila_log_marglik(truth, sim.data, Kernel::Normal, 1.0, CommonPrior{}).log_ml;
    const double b =
        ila_log_marglik(truth.with(spare, 2), sim.data, Kernel::Normal, 1.0, CommonPrior{}).log_ml;
    sum += a - b;
    positive += a > b;
  }
  const double expect = 0.5 * std::log1p(n * 1.0);
  EXPECT_NEAR(sum / reps, expect, 1.0);
  EXPECT_GE(positive, 18);
}

TEST(MarglikCacheTest, InsertThenGet) {
  MarglikCache cache;
  MarglikRecord r;
  r.log_ml = -3.5;
  const auto p = cache.insert("k", r);
  EXPECT_EQ(cache.get("k"), p);
  EXPECT_EQ(cache.get("k")->log_ml, -3.5);
  EXPECT_EQ(cache.get("missing"), nullptr);
  // A second insert on the same key keeps the first record.
  r.log_ml = -9.0;
  EXPECT_EQ(cache.insert("k", r)->log_ml, -3.5);
  EXPECT_EQ(cache.size(), 1u);
  cache.clear();
  EXPECT_EQ(cache.size(), 0u);
}

TEST(MarglikCacheTest, CapacityEvictsOldest) {
  MarglikCache cache(2);
  cache.insert("a", {});
  cache.insert("b", {});
  cache.insert("c", {});
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_EQ(cache.get("a"), nullptr);
  EXPECT_NE(cache.get("c"), nullptr);
}

TEST(MarglikEngineTest, CachesAndKeysOnHyperparameters) {
  const auto d = small_data(50, 3, 17);
  auto cache = std::make_shared<MarglikCache>();
  MarglikConfig c1;
  MarglikConfig c2;
  c2.coef.g_E = 2.0;
  MarglikEngine e1(d, c1, cache), e2(d, c2, cache);
  const Gamma g = Gamma::parse("120");
  const auto r1 = e1.evaluate(g);
  EXPECT_EQ(e1.evaluate(g), r1);
  EXPECT_NE(e1.key(g), e2.key(g));
  const auto r2 = e2.evaluate(g);
  EXPECT_NE(r1->log_ml, r2->log_ml);
  EXPECT_EQ(cache->size(), 2u);
  EXPECT_EQ(r1->gamma_key, "120");
  EXPECT_THROW(e1.evaluate(Gamma::parse("12")), std::invalid_argument);
}

TEST(MarglikEngineTest, ConcurrentEvaluationIsDeterministic) {
  const auto d = small_data(80, 4, 18);
  MarglikConfig cfg;
  const auto models = enumerate_models(4);
  std::vector<double> serial;
  {
    MarglikEngine e(d, cfg);
    for (std::size_t i = 0; i < 40; ++i) serial.push_back(e.log_ml(models[i]));
  }
  MarglikEngine e(d, cfg);
  std::vector<double> par(40);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 4; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < 40; i += 4) par[i] = e.log_ml(models[i]);
      });
  }
  EXPECT_EQ(serial, par);
}
