#include "ghsel/baseline.hpp"
#include "ghsel/rng.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ghsel;
using namespace ghsel::baseline;

namespace {

constexpr double kPi = std::numbers::pi;

class EveryKernel : public ::testing::TestWithParam<Kernel> {};

}  // namespace

TEST(BaselineLogF, ValuesAtZero) {
  EXPECT_NEAR(log_f(0, Kernel::Normal), -0.5 * std::log(2 * kPi), 1e-15);
  EXPECT_NEAR(log_f(0, Kernel::Logistic), std::log(0.25), 1e-15);
  EXPECT_NEAR(log_f(0, Kernel::StudentT2), 1.5 * std::log(0.5), 1e-15);
  EXPECT_NEAR(log_f(0, Kernel::HyperbolicSecant), std::log(0.5), 1e-15);
}

TEST(BaselineLogF, NanPropagates) {
  for (auto k : kAllKernels) EXPECT_TRUE(std::isnan(log_f(std::nan(""), k)));
}

TEST(BaselineLogFNeg, ZeroIsLogHalf) {
  for (auto k : kAllKernels) EXPECT_NEAR(log_F_neg(0, k), std::log(0.5), 1e-15) << to_string(k);
}

TEST(BaselineLogFNeg, NormalUpperTail) {
  // log Phi(-10), log Phi(-38) and log Phi(-1) from 30-digit erfc.
  EXPECT_NEAR(log_F_neg(10, Kernel::Normal), -53.231285150512470578, 1e-12);
  EXPECT_NEAR(log_F_neg(38, Kernel::Normal), -726.55721601882013010, 1e-10);
  EXPECT_NEAR(log_F_neg(1, Kernel::Normal), -1.8410216450092635058, 1e-14);
  EXPECT_TRUE(std::isfinite(log_F_neg(400, Kernel::Normal)));
}

TEST(BaselineLogFNeg, LogisticLowerTail) {
  EXPECT_NEAR(log_F_neg(-30, Kernel::Logistic), -9.357622968839736779e-14, 1e-26);
}

TEST(BaselineRatio, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(ratio_f_over_Fneg(0, Kernel::Logistic), 0.5);
  EXPECT_NEAR(ratio_f_over_Fneg(0, Kernel::Normal), std::sqrt(2 / kPi), 1e-15);
  // Mills ratio phi(u)/Phi(-u) at 8 and 30, 30-digit reference.
  EXPECT_NEAR(ratio_f_over_Fneg(8, Kernel::Normal), 8.1213681122361126807, 1e-13);
  EXPECT_NEAR(ratio_f_over_Fneg(30, Kernel::Normal), 30.033259667433677037, 1e-12);
}

TEST(BaselineRatio, FprimeOverF) {
  EXPECT_DOUBLE_EQ(ratio_fprime_over_f(2.5, Kernel::Normal), -2.5);
  EXPECT_DOUBLE_EQ(ratio_fprime_over_f(0, Kernel::Logistic), 0.0);
  EXPECT_DOUBLE_EQ(ratio_fprime_over_f(1, Kernel::StudentT2), -1.0);
}

TEST(BaselineRatio, FsecondOverF) {
  EXPECT_NEAR(ratio_fsecond_over_f(0, Kernel::Normal), -1.0, 1e-15);
  EXPECT_NEAR(ratio_fsecond_over_f(0, Kernel::Logistic), -0.5, 1e-15);
  EXPECT_NEAR(ratio_fsecond_over_f(0, Kernel::HyperbolicSecant), -kPi * kPi / 4, 1e-14);
}

TEST(BaselineRatio, FprimeOverFneg) {
  for (auto k : kAllKernels) EXPECT_DOUBLE_EQ(ratio_fprime_over_Fneg(0, k), 0.0);
  // -f(1)(e - 1) for the logistic.
  EXPECT_NEAR(ratio_fprime_over_Fneg(1, Kernel::Logistic), -0.33783471214704117418, 1e-14);
  const double e = std::numbers::e;
  EXPECT_NEAR(ratio_fprime_over_Fneg(1, Kernel::Logistic), -std::exp(log_f(1, Kernel::Logistic)) * (e - 1), 1e-14);
  EXPECT_NEAR(ratio_fprime_over_Fneg(3, Kernel::Normal), -9.8492959647913095208, 1e-12);
}

TEST(BaselineQuantile, Values) {
  for (auto k : kAllKernels) EXPECT_NEAR(quantile(0.5, k), 0.0, 1e-14) << to_string(k);
  EXPECT_NEAR(quantile(0.75, Kernel::StudentT2), 0.81649658092772603273, 1e-13);
  EXPECT_NEAR(quantile(0.9, Kernel::HyperbolicSecant), 1.1731183752263278465, 1e-13);
  EXPECT_NEAR(quantile(0.9, Kernel::HyperbolicSecant), (2 / kPi) * std::log(std::tan(0.45 * kPi)), 1e-14);
}

TEST(BaselineQuantile, DomainErrors) {
  for (auto k : kAllKernels) {
    EXPECT_THROW(quantile(0.0, k), std::domain_error);
    EXPECT_THROW(quantile(1.0, k), std::domain_error);
    EXPECT_THROW(quantile(-0.2, k), std::domain_error);
  }
}

TEST(BaselineKernelNames, RoundTrip) {
  for (auto k : kAllKernels) EXPECT_EQ(parse_kernel(to_string(k)), k);
  EXPECT_THROW(parse_kernel("weibull"), std::invalid_argument);
}

TEST_P(EveryKernel, DensityIntegratesToOne) {
  const Kernel k = GetParam();
  boost::math::quadrature::tanh_sinh<double> ts;
  const double inf = std::numeric_limits<double>::infinity();
  const double total = ts.integrate([k](double u) { return std::exp(log_f(u, k)); }, -inf, inf);
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST_P(EveryKernel, SymmetryAndComplement) {
  const Kernel k = GetParam();
  Rng rng = make_rng(11, static_cast<int>(k));
  for (int i = 0; i < 500; ++i) {
    const double u = 16.0 * uniform01(rng) - 8.0;
    EXPECT_NEAR(log_f(u, k), log_f(-u, k), 1e-13);
    EXPECT_NEAR(cdf(u, k) + cdf(-u, k), 1.0, 1e-14);
    EXPECT_NEAR(std::exp(log_F_neg(u, k)) + std::exp(log_F_neg(-u, k)), 1.0, 1e-12);
  }
}

TEST_P(EveryKernel, QuantileInvertsCdf) {
  const Kernel k = GetParam();
  Rng rng = make_rng(12, static_cast<int>(k));
  for (int i = 0; i < 500; ++i) {
    const double u = 12.0 * uniform01(rng) - 6.0;
    // Rounding F(u) to a double moves the exact inverse by up to ulp(F)/f(u).
    const double F = cdf(u, k);
    const double cond = std::nextafter(F, 2.0) - F;
    const double tol = 1e-10 * std::max(1.0, std::abs(u)) + cond / std::exp(log_f(u, k));
    EXPECT_NEAR(quantile(F, k), u, tol);
    const double p = uniform01(rng) * 0.998 + 0.001;
    EXPECT_NEAR(cdf(quantile(p, k), k), p, 1e-10);
  }
}

TEST_P(EveryKernel, UpperQuantileLogInvertsLogFNeg) {
  const Kernel k = GetParam();
  for (double ls : {-1e-12, -1e-3, -0.7, -5.0, -50.0, -400.0, -800.0}) {
    const double u = upper_quantile_log(ls, k);
    EXPECT_NEAR(log_F_neg(u, k), ls, 1e-9 * std::max(1.0, std::abs(ls))) << ls;
  }
}

TEST_P(EveryKernel, DerivativeRatiosMatchFiniteDifferences) {
  const Kernel k = GetParam();
  Rng rng = make_rng(13, static_cast<int>(k));
  const double h = 1e-4;
  for (int i = 0; i < 1000; ++i) {
    const double u = 12.0 * uniform01(rng) - 6.0;
    const double l0 = log_f(u, k), lp = log_f(u + h, k), lm = log_f(u - h, k);
    const double d1 = (lp - lm) / (2 * h);
    const double d2_log = (lp - 2 * l0 + lm) / (h * h);
    const double r1 = ratio_fprime_over_f(u, k);
    const double r2 = ratio_fsecond_over_f(u, k);
    EXPECT_NEAR(d1, r1, 1e-6 * std::max(1.0, std::abs(r1))) << u;
    // f''/f = (log f)'' + ((log f)')^2
    EXPECT_NEAR(d2_log + d1 * d1, r2, 1e-5 * std::max(1.0, std::abs(r2))) << u;
  }
}

TEST_P(EveryKernel, RatioIdentityInSafeRegion) {
  const Kernel k = GetParam();
  for (double u = -30.0; u <= 30.0; u += 0.37) {
    const double direct = std::exp(log_f(u, k) - log_F_neg(u, k));
    EXPECT_NEAR(ratio_f_over_Fneg(u, k), direct, 1e-10 * direct) << u;
    EXPECT_NEAR(ratio_fprime_over_Fneg(u, k), ratio_fprime_over_f(u, k) * ratio_f_over_Fneg(u, k),
                1e-10 * std::max(1.0, std::abs(ratio_fprime_over_Fneg(u, k))));
  }
}

TEST_P(EveryKernel, LogFNegDerivativeIsMinusRatio) {
  const Kernel k = GetParam();
  const double h = 1e-5;
  for (double u = -20.0; u <= 60.0; u += 0.91) {
    const double fd = (log_F_neg(u + h, k) - log_F_neg(u - h, k)) / (2 * h);
    const double r = ratio_f_over_Fneg(u, k);
    EXPECT_NEAR(-fd, r, 1e-6 * std::max(1.0, r)) << u;
  }
}

TEST_P(EveryKernel, TermsKappaMatchesSecondDerivative) {
  const Kernel k = GetParam();
  const double h = 1e-4;
  for (double u = -10.0; u <= 40.0; u += 0.77) {
    const auto t = terms(u, k);
    // kappa = d r / du, since d log F(-u) / du = -r.
    const double dr = (ratio_f_over_Fneg(u + h, k) - ratio_f_over_Fneg(u - h, k)) / (2 * h);
    EXPECT_NEAR(t.kappa, dr, 2e-6 * std::max(1.0, std::abs(dr))) << u;
    EXPECT_DOUBLE_EQ(t.log_f, log_f(u, k));
    EXPECT_NEAR(t.r, ratio_f_over_Fneg(u, k), 1e-14 * std::max(1.0, t.r));
  }
}

TEST_P(EveryKernel, ExtremeArgumentsStayFinite) {
  const Kernel k = GetParam();
  for (double u : {-500.0, -40.0, 40.0, 500.0}) {
    const auto t = terms(u, k);
    EXPECT_TRUE(std::isfinite(t.log_f));
    EXPECT_TRUE(std::isfinite(t.log_F_neg));
    EXPECT_TRUE(std::isfinite(t.r));
    EXPECT_TRUE(std::isfinite(t.kappa));
    EXPECT_GE(t.r, 0.0);
    if (u > -30.0) EXPECT_GT(t.r, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Kernels, EveryKernel, ::testing::ValuesIn(kAllKernels),
                         [](const auto& info) { return std::string(to_string(info.param)); });
