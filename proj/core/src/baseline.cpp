#include "ghsel/baseline.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ghsel {

std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::Normal: return "normal";
    case Kernel::Logistic: return "logistic";
    case Kernel::HyperbolicSecant: return "sech";
    case Kernel::StudentT2: return "t2";
  }
  return "unknown";
}

Kernel parse_kernel(std::string_view name) {
  if (name == "normal" || name == "lognormal") return Kernel::Normal;
  if (name == "logistic" || name == "loglogistic") return Kernel::Logistic;
  if (name == "sech" || name == "hypsec") return Kernel::HyperbolicSecant;
  if (name == "t2" || name == "student-t2") return Kernel::StudentT2;
  throw std::invalid_argument("unknown baseline kernel '" + std::string(name) + "'");
}

namespace baseline {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

// Beyond this point the normal upper tail is evaluated through the Mills ratio
// continued fraction rather than erfc.
constexpr double kNormalTailSwitch = 8.0;

// Continued fraction Phi(-u)/phi(u) = 1/(u + 1/(u + 2/(u + 3/(u + ...)))),
// evaluated backwards. Returns {r, r - u} with r = phi(u)/Phi(-u); the second
// component is formed from the tail of the fraction to avoid cancellation.
struct MillsTail {
  double r;
  double r_minus_u;
};

MillsTail normal_mills_tail(double u) {
  // u >= 8: 60 levels are far beyond what double precision needs.
  double t = u;
  for (int k = 60; k >= 2; --k) t = u + k / t;
  // t now holds u + 2/(u + 3/(...)); r = u + 1/t.
  const double tail = 1.0 / t;
  return {u + tail, tail};
}

double normal_log_F_neg(double u) {
  if (u < 0.0) return std::log1p(-0.5 * std::erfc(-u / kSqrt2));
  if (u <= kNormalTailSwitch) return std::log(0.5 * std::erfc(u / kSqrt2));
  const auto m = normal_mills_tail(u);
  return -0.5 * u * u - kLogSqrt2Pi - std::log(m.r);
}

MillsTail normal_ratio(double u) {
  if (u > kNormalTailSwitch) return normal_mills_tail(u);
  const double pdf = std::exp(-0.5 * u * u - kLogSqrt2Pi);
  const double r = pdf / (0.5 * std::erfc(u / kSqrt2));
  return {r, r - u};
}

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic_cdf(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// Hyperbolic secant in terms of x = pi*u/2.
double sech_log_F_neg(double u) {
  const double x = 0.5 * kPi * u;
  if (x >= 0.0) {
    const double y = std::exp(-x);
    const double log_atan = (y < 1e-8) ? -x + std::log1p(-y * y / 3.0) : std::log(std::atan(y));
    return std::log(2.0 / kPi) + log_atan;
  }
  return std::log1p(-(2.0 / kPi) * std::atan(std::exp(x)));
}

double sech_ratio(double u) {
  const double x = 0.5 * kPi * u;
  if (x >= 0.0) {
    const double y = std::exp(-x);
    const double y_over_atan = (y < 1e-8) ? 1.0 / (1.0 - y * y / 3.0) : y / std::atan(y);
    return 0.5 * kPi * y_over_atan / (1.0 + y * y);
  }
  // sech(x) = 2 e^{x} / (1 + e^{2x}) for x < 0.
  const double y = std::exp(x);
  const double sech = 2.0 * y / (1.0 + y * y);
  return 0.25 * kPi * sech / std::atan(1.0 / y);
}

double sech_squared(double x) {
  const double y = std::exp(-2.0 * std::abs(x));
  const double s = 2.0 * std::sqrt(y) / (1.0 + y);
  return s * s;
}

double t2_F_neg(double u) {
  const double s = std::sqrt(u * u + 2.0);
  return u <= 0.0 ? (s - u) / (2.0 * s) : 1.0 / (s * (s + u));
}

double t2_ratio(double u) {
  if (u > 1e100) return 2.0 / u;
  if (u < -1e100) return 0.0;
  const double s2 = u * u + 2.0;
  const double s = std::sqrt(s2);
  return u >= 0.0 ? (s + u) / s2 : 2.0 / (s2 * (s - u));
}

double normal_upper_quantile_log(double log_s) {
  if (std::isinf(log_s)) return std::numeric_limits<double>::infinity();
  // Solve log Phi(-u) = log_s; the function is strictly decreasing with slope -r(u).
  double guess;
  if (log_s > -700.0) {
    const double s = std::exp(log_s);
    guess = s < 1.0 ? kSqrt2 * boost::math::erfc_inv(2.0 * s) : 0.0;
  } else {
    guess = std::sqrt(-2.0 * log_s);
  }
  double lo = guess - 1.0;
  double hi = guess + 1.0;
  while (normal_log_F_neg(lo) < log_s) lo -= 2.0 * (1.0 + std::abs(lo));
  while (normal_log_F_neg(hi) > log_s) hi += 2.0 * (1.0 + std::abs(hi));
  const auto f = [log_s](double u) {
    return std::make_pair(normal_log_F_neg(u) - log_s, -normal_ratio(u).r);
  };
  return boost::math::tools::newton_raphson_iterate(f, std::clamp(guess, lo, hi), lo, hi, 50);
}

// F(-u) = (2/pi) atan(e^{-pi u/2}) = s  =>  u = -(2/pi) log tan(pi s/2).
double sech_upper_quantile_log(double log_s) {
  const double half_pi = 0.5 * kPi;
  if (log_s < -30.0) return -(std::log(half_pi) + log_s) / half_pi;
  return -std::log(std::tan(half_pi * std::exp(log_s))) / half_pi;
}

// F(-u) = s  =>  u = (1 - 2s) / sqrt(2 s (1 - s)).
double t2_upper_quantile_log(double log_s) {
  const double s = std::exp(log_s);
  return (1.0 - 2.0 * s) * std::exp(-0.5 * (std::log(2.0) + log_s + std::log1p(-s)));
}

}  // namespace

double log_f(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal:
      return -0.5 * u * u - kLogSqrt2Pi;
    case Kernel::Logistic: {
      const double a = std::abs(u);
      return -a - 2.0 * std::log1p(std::exp(-a));
    }
    case Kernel::HyperbolicSecant: {
      // log(1/2) - log cosh(x), log cosh(x) = |x| + log1p(e^{-2|x|}) - log 2.
      const double x = std::abs(0.5 * kPi * u);
      return -x - std::log1p(std::exp(-2.0 * x));
    }
    case Kernel::StudentT2:
      return -1.5 * std::log(u * u + 2.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double cdf(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal:
      return 0.5 * std::erfc(-u / kSqrt2);
    case Kernel::Logistic:
      return logistic_cdf(u);
    case Kernel::HyperbolicSecant:
      return (2.0 / kPi) * std::atan(std::exp(0.5 * kPi * u));
    case Kernel::StudentT2:
      return t2_F_neg(-u);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double log_F_neg(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal: return normal_log_F_neg(u);
    case Kernel::Logistic: return -softplus(u);
    case Kernel::HyperbolicSecant: return sech_log_F_neg(u);
    case Kernel::StudentT2: {
      if (u <= 0.0) return std::log(t2_F_neg(u));
      if (u > 1e100) {
        // s = u sqrt(1 + 2/u^2) without forming u^2.
        const double e = 2.0 / u / u;
        return -2.0 * std::log(u) - 0.5 * std::log1p(e) - std::log1p(std::sqrt(1.0 + e));
      }
      const double s = std::sqrt(u * u + 2.0);
      return -std::log(s) - std::log(s + u);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ratio_f_over_Fneg(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal: return normal_ratio(u).r;
    case Kernel::Logistic: return logistic_cdf(u);
    case Kernel::HyperbolicSecant: return sech_ratio(u);
    case Kernel::StudentT2: return t2_ratio(u);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ratio_fprime_over_f(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal: return -u;
    case Kernel::Logistic: return -std::tanh(0.5 * u);
    case Kernel::HyperbolicSecant: return -0.5 * kPi * std::tanh(0.5 * kPi * u);
    case Kernel::StudentT2: return -3.0 * u / (u * u + 2.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ratio_fsecond_over_f(double u, Kernel k) {
  switch (k) {
    case Kernel::Normal:
      return u * u - 1.0;
    case Kernel::Logistic:
      // 1 - 3/(cosh u + 1) = 1 - 1.5 sech^2(u/2)
      return 1.0 - 1.5 * sech_squared(0.5 * u);
    case Kernel::HyperbolicSecant:
      // (pi^2/8)(cosh(pi u) - 3) sech^2(pi u/2) = (pi^2/4)(1 - 2 sech^2(pi u/2))
      return 0.25 * kPi * kPi * (1.0 - 2.0 * sech_squared(0.5 * kPi * u));
    case Kernel::StudentT2: {
      const double s2 = u * u + 2.0;
      return 6.0 * (2.0 * u * u - 1.0) / (s2 * s2);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ratio_fprime_over_Fneg(double u, Kernel k) {
  return ratio_fprime_over_f(u, k) * ratio_f_over_Fneg(u, k);
}

double quantile(double p, Kernel k) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p must lie in (0, 1)");
  switch (k) {
    case Kernel::Normal:
      // F(u) = p  <=>  log F(-(-u)) = log p.
      return p < 0.5 ? -normal_upper_quantile_log(std::log(p))
                     : normal_upper_quantile_log(std::log1p(-p));
    case Kernel::Logistic:
      return std::log(p) - std::log1p(-p);
    case Kernel::HyperbolicSecant:
      return (2.0 / kPi) * std::log(std::tan(0.5 * kPi * p));
    case Kernel::StudentT2:
      return (2.0 * p - 1.0) * kSqrt2 / (2.0 * std::sqrt(p * (1.0 - p)));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double upper_quantile_log(double log_s, Kernel k) {
  if (!(log_s < 0.0)) throw std::domain_error("upper_quantile_log: log_s must be negative");
  switch (k) {
    case Kernel::Normal:
      return normal_upper_quantile_log(log_s);
    case Kernel::Logistic:
      // -softplus(u) = log_s  =>  u = log(e^{-log_s} - 1)
      return -log_s > 30.0 ? -log_s + std::log(-std::expm1(log_s)) : std::log(std::expm1(-log_s));
    case Kernel::HyperbolicSecant:
      return sech_upper_quantile_log(log_s);
    case Kernel::StudentT2:
      return t2_upper_quantile_log(log_s);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Terms terms(double u, Kernel k) {
  Terms t{};
  t.log_f = log_f(u, k);
  t.d1 = ratio_fprime_over_f(u, k);
  t.d2 = ratio_fsecond_over_f(u, k);
  if (k == Kernel::Normal) {
    const auto m = normal_ratio(u);
    t.r = m.r;
    t.log_F_neg = normal_log_F_neg(u);
    t.kappa = m.r * m.r_minus_u;
  } else {
    t.r = ratio_f_over_Fneg(u, k);
    t.log_F_neg = log_F_neg(u, k);
    t.kappa = t.d1 * t.r + t.r * t.r;
  }
  return t;
}

}  // namespace baseline
}  // namespace ghsel
