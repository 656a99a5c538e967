#pragma once

#include <string>
#include <string_view>

namespace ghsel {

/// Symmetric standardised density f of the log-location-scale baseline.
enum class Kernel { Normal, Logistic, HyperbolicSecant, StudentT2 };

inline constexpr Kernel kAllKernels[] = {Kernel::Normal, Kernel::Logistic,
                                         Kernel::HyperbolicSecant, Kernel::StudentT2};

/// Short name used on the command line and in reports: normal, logistic, sech, t2.
std::string_view to_string(Kernel k);

/// Inverse of to_string. Throws std::invalid_argument on unknown names.
Kernel parse_kernel(std::string_view name);

namespace baseline {

// All evaluators are pure. NaN input propagates to NaN output.

double log_f(double u, Kernel k);
double cdf(double u, Kernel k);

/// log F(-u), accurate in both tails (|u| up to several hundred).
double log_F_neg(double u, Kernel k);

/// f(u) / F(-u). For the normal kernel this is the complementary inverse Mills ratio.
double ratio_f_over_Fneg(double u, Kernel k);

double ratio_fprime_over_f(double u, Kernel k);
double ratio_fsecond_over_f(double u, Kernel k);
double ratio_fprime_over_Fneg(double u, Kernel k);

/// F^{-1}(p). Throws std::domain_error unless 0 < p < 1.
double quantile(double p, Kernel k);

/// The u solving log F(-u) = log_s, for log_s < 0. Used when the survival
/// probability is too small to be represented directly.
double upper_quantile_log(double log_s, Kernel k);

/// Everything the likelihood needs at one point, evaluated together.
struct Terms {
  double log_f;
  double log_F_neg;
  double r;         // f / F(-u)
  double d1;        // f' / f
  double d2;        // f'' / f
  double kappa;     // f'/F(-u) + r^2  (minus the second derivative of log F(-u))
};

Terms terms(double u, Kernel k);

}  // namespace baseline
}  // namespace ghsel
