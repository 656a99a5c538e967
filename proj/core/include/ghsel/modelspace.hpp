#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace ghsel {

enum class HazardClass { Null, AH, PH, AFT, GH };

inline constexpr HazardClass kAllClasses[] = {HazardClass::Null, HazardClass::AH, HazardClass::PH,
                                              HazardClass::AFT, HazardClass::GH};

std::string_view to_string(HazardClass c);

/// Model indicator. Each variable carries a role code:
///   0 excluded, 1 time level, 2 hazard level, 3 both (different scales),
///   4 both tied (AFT). Code 4 never coexists with 1, 2 or 3.
class Gamma {
 public:
  Gamma() = default;

  /// Throws std::invalid_argument on a code outside 0..4 or a mixed {4, other} vector.
  explicit Gamma(std::vector<int> codes);

  static Gamma null(int p) { return Gamma(std::vector<int>(static_cast<std::size_t>(p), 0)); }

  /// Digit-string form, e.g. "01203".
  static Gamma parse(std::string_view key);
  std::string key() const;

  int size() const { return static_cast<int>(codes_.size()); }
  int operator[](int j) const { return codes_[static_cast<std::size_t>(j)]; }
  const std::vector<int>& codes() const { return codes_; }

  /// Copy with code j replaced; the result is validated.
  Gamma with(int j, int v) const;

  bool is_null() const;

  auto operator<=>(const Gamma&) const = default;

 private:
  std::vector<int> codes_;
};

bool is_valid_codes(const std::vector<int>& codes);

/// p_k = #{j : gamma_j = k}, k = 0..4.
std::array<int, 5> code_counts(const Gamma& g);

HazardClass classify(const Gamma& g);

/// |Lambda|: number of included variables.
int n_active(const Gamma& g);

/// omega = |Lambda| + p_3.
int effect_count(const Gamma& g);

/// Columns entering the time-level design (codes 1 and 3, or 4 for AFT).
std::vector<int> time_columns(const Gamma& g);

/// Columns entering the hazard-level design (codes 2 and 3; empty for AFT).
std::vector<int> hazard_columns(const Gamma& g);

/// Number of regression coefficients d = q + p (|Lambda| for AFT).
int n_coefficients(const Gamma& g);

struct ModelPriorConfig {
  double a_lambda = 1.0;
  double b_lambda = 1.0;
  double h_ah = 1.0;
  double h_ph = 1.0;
  double h_aft = 1.0;
  double h_gh = 1.0;
  double q = 1.0 / 3.0;

  void validate() const;
};

/// Unnormalised log prior over the model space. Variable inclusion follows a
/// Beta-Binomial prior, the hazard class given the included set is weighted by
/// h_class (GH models sharing the GH mass), and within GH the number of effects
/// omega is given equal mass.
double log_model_prior(const Gamma& g, const ModelPriorConfig& cfg = {});

/// Largest p accepted by enumerate_models unless the caller raises the cap.
inline constexpr int kEnumerateCap = 8;

/// Every valid model for p variables (4^p + 2^p - 1 of them), Null first.
std::vector<Gamma> enumerate_models(int p, int cap = kEnumerateCap);

inline long long model_space_size(int p) {
  long long a = 1, b = 1;
  for (int i = 0; i < p; ++i) {
    a *= 4;
    b *= 2;
  }
  return a + b - 1;
}

/// Indices eligible for the GH add/delete move (0-based). Deleting any of them
/// keeps the model GH or reaches the Null model. Throws std::logic_error if g is not GH.
std::vector<int> get_valid_idx(const Gamma& g);

}  // namespace ghsel
