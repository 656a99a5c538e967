#include "ghsel/modelspace.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <stdexcept>

namespace ghsel {

std::string_view to_string(HazardClass c) {
  switch (c) {
    case HazardClass::Null: return "Null";
    case HazardClass::AH: return "AH";
    case HazardClass::PH: return "PH";
    case HazardClass::AFT: return "AFT";
    case HazardClass::GH: return "GH";
  }
  return "?";
}

bool is_valid_codes(const std::vector<int>& codes) {
  bool has4 = false;
  bool has123 = false;
  for (int c : codes) {
    if (c < 0 || c > 4) return false;
    if (c == 4) has4 = true;
    if (c >= 1 && c <= 3) has123 = true;
  }
  return !(has4 && has123);
}

Gamma::Gamma(std::vector<int> codes) : codes_(std::move(codes)) {
  for (int c : codes_)
    if (c < 0 || c > 4) throw std::invalid_argument("gamma code out of range: " + std::to_string(c));
  if (!is_valid_codes(codes_))
    throw std::invalid_argument("gamma mixes AFT code 4 with codes 1-3");
}

Gamma Gamma::parse(std::string_view key) {
  std::vector<int> codes;
  codes.reserve(key.size());
  for (char ch : key) {
    if (ch < '0' || ch > '9') throw std::invalid_argument("gamma key must be a digit string");
    codes.push_back(ch - '0');
  }
  return Gamma(std::move(codes));
}

std::string Gamma::key() const {
  std::string s;
  s.reserve(codes_.size());
  for (int c : codes_) s.push_back(static_cast<char>('0' + c));
  return s;
}

Gamma Gamma::with(int j, int v) const {
  auto c = codes_;
  c.at(static_cast<std::size_t>(j)) = v;
  return Gamma(std::move(c));
}

bool Gamma::is_null() const {
  for (int c : codes_)
    if (c != 0) return false;
  return true;
}

std::array<int, 5> code_counts(const Gamma& g) {
  std::array<int, 5> n{};
  for (int c : g.codes()) ++n[static_cast<std::size_t>(c)];
  return n;
}

HazardClass classify(const Gamma& g) {
  const auto n = code_counts(g);
  if (n[1] + n[2] + n[3] + n[4] == 0) return HazardClass::Null;
  if (n[4] > 0) return HazardClass::AFT;
  if (n[3] == 0 && n[2] == 0) return HazardClass::AH;
  if (n[3] == 0 && n[1] == 0) return HazardClass::PH;
  return HazardClass::GH;
}

int n_active(const Gamma& g) { return g.size() - code_counts(g)[0]; }

int effect_count(const Gamma& g) { return n_active(g) + code_counts(g)[3]; }

std::vector<int> time_columns(const Gamma& g) {
  std::vector<int> cols;
  for (int j = 0; j < g.size(); ++j)
    if (g[j] == 1 || g[j] == 3 || g[j] == 4) cols.push_back(j);
  return cols;
}

std::vector<int> hazard_columns(const Gamma& g) {
  std::vector<int> cols;
  for (int j = 0; j < g.size(); ++j)
    if (g[j] == 2 || g[j] == 3) cols.push_back(j);
  return cols;
}

int n_coefficients(const Gamma& g) {
  return static_cast<int>(time_columns(g).size() + hazard_columns(g).size());
}

void ModelPriorConfig::validate() const {
  if (!(a_lambda > 0 && b_lambda > 0 && h_ah > 0 && h_ph > 0 && h_aft > 0 && h_gh > 0))
    throw std::invalid_argument("model prior hyperparameters must be positive");
  // The endpoints make some omega weights infinite.
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("model prior q must lie in (0,1)");
}

namespace {

// Number of GH models on a fixed included set of size L with k variables coded 3.
double gh_count(int L, int k) {
  const double c = boost::math::binomial_coefficient<double>(static_cast<unsigned>(L),
                                                             static_cast<unsigned>(k)) *
                   std::ldexp(1.0, L - k);
  return k == 0 ? c - 2.0 : c;
}

// Binomial(k | L, q) pmf with the k = 0 correction for the two excluded pure assignments.
double weighted_pmf(int L, int k, double q) {
  const double pmf = boost::math::binomial_coefficient<double>(static_cast<unsigned>(L),
                                                               static_cast<unsigned>(k)) *
                     std::pow(q, k) * std::pow(1.0 - q, L - k);
  return k == 0 ? pmf * (1.0 - std::ldexp(1.0, 1 - L)) : pmf;
}

}  // namespace

double log_model_prior(const Gamma& g, const ModelPriorConfig& cfg) {
  const int p = g.size();
  const int L = n_active(g);
  const int p0 = p - L;
  const double log_beta = std::log(boost::math::beta(cfg.a_lambda + L, cfg.b_lambda + p0));
  const auto cls = classify(g);
  if (cls == HazardClass::Null) return log_beta;

  const double h_sum = cfg.h_ah + cfg.h_ph + cfg.h_aft + cfg.h_gh;
  double h = 0.0;
  switch (cls) {
    case HazardClass::AH: h = cfg.h_ah; break;
    case HazardClass::PH: h = cfg.h_ph; break;
    case HazardClass::AFT: h = cfg.h_aft; break;
    default: h = cfg.h_gh; break;
  }
  double lp = log_beta + std::log(h / h_sum);
  if (cls != HazardClass::GH) return lp;

  lp -= std::log(std::pow(3.0, L) - 2.0);
  if (L > 1) {
    // Inverse-probability weight on omega = L + k, normalised over k = 0..L and
    // scaled so the GH models on this included set keep total mass h_gh / h_sum.
    const int k = code_counts(g)[3];
    double norm = 0.0;
    double total = 0.0;
    for (int i = 0; i <= L; ++i) {
      const double w = 1.0 / weighted_pmf(L, i, cfg.q);
      norm += w;
      total += gh_count(L, i) * w;
    }
    const double w = 1.0 / weighted_pmf(L, k, cfg.q) / norm;
    const double mass = total / norm;  // total GH weight before rescaling
    lp += std::log(w) + std::log((std::pow(3.0, L) - 2.0) / mass);
  }
  return lp;
}

std::vector<Gamma> enumerate_models(int p, int cap) {
  if (p < 1) throw std::invalid_argument("enumerate_models: p must be at least 1");
  if (p > cap)
    throw std::invalid_argument("enumerate_models: p = " + std::to_string(p) +
                                " exceeds the enumeration cap " + std::to_string(cap));
  std::vector<Gamma> out;
  out.reserve(static_cast<std::size_t>(model_space_size(p)));
  out.push_back(Gamma::null(p));
  // All codes in {0,1,2,3} except the null vector, in base-4 order.
  std::vector<int> c(static_cast<std::size_t>(p), 0);
  long long total = 1;
  for (int i = 0; i < p; ++i) total *= 4;
  for (long long m = 1; m < total; ++m) {
    long long r = m;
    for (int j = p - 1; j >= 0; --j) {
      c[static_cast<std::size_t>(j)] = static_cast<int>(r % 4);
      r /= 4;
    }
    out.emplace_back(c);
  }
  // AFT models: non-null subsets coded 4.
  for (long long m = 1; m < (1LL << p); ++m) {
    for (int j = 0; j < p; ++j) c[static_cast<std::size_t>(j)] = (m >> (p - 1 - j)) & 1 ? 4 : 0;
    out.emplace_back(c);
  }
  return out;
}

std::vector<int> get_valid_idx(const Gamma& g) {
  if (classify(g) != HazardClass::GH) throw std::logic_error("get_valid_idx requires a GH model");
  const auto n = code_counts(g);
  const int p = g.size();
  auto where = [&](auto pred) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (pred(g[j])) idx.push_back(j);
    return idx;
  };
  // A lone 3 with nothing else included is not "AH/PH remaining": deleting it
  // reaches the Null model, which the sampler handles.
  const bool rest_pure = (n[1] > 0) != (n[2] > 0);
  if (n[3] == 1 && rest_pure) return where([](int c) { return c != 3; });
  if (n[3] == 0 && n[1] > 1 && n[2] == 1) return where([](int c) { return c != 2; });
  if (n[3] == 0 && n[2] > 1 && n[1] == 1) return where([](int c) { return c != 1; });
  if (n[3] == 0 && n[1] == 1 && n[2] == 1) return where([](int c) { return c == 0; });
  return where([](int) { return true; });
}

}  // namespace ghsel
