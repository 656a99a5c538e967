#include "ghsel_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ghsel::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
  throw std::invalid_argument("setting '" + key + "': invalid value '" + value + "' (" + what + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) bad(key, v, "expected a number");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) bad(key, v, "expected an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "expected true or false");
}

HazardClass to_class(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto c : kAllClasses)
    if (to_string(c) == v) return c;
  bad(key, v, "expected null, ah, ph, aft or gh");
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"out", "output directory (select, enumerate, replicate) or CSV path (simulate)"},
      {"no-standardize", "do not centre and scale covariates", true},
      {"method", "marginal likelihood: auto, ila, ila-robust-g, la"},
      {"prior", "coefficient prior: lcm or product"},
      {"g", "g_E of the LCM prior"},
      {"gct", "g of the Product prior, time level"},
      {"gch", "g of the Product prior, hazard level"},
      {"robust-g", "integrate g_E over the robust hyper-g prior", true},
      {"robust-cutoff", "upper truncation of the robust-g integral"},
      {"baseline", "fitted baseline kernel: normal, logistic, sech, t2"},
      {"ila-form", "corrected or as-printed"},
      {"la-dim", "2 pi exponent of the LA: full or coef"},
      {"alpha-nu", "shape of the Gamma prior on exp(nu)"},
      {"beta-nu", "rate of the Gamma prior on exp(nu)"},
      {"theta0-var", "variance K of the theta0 prior"},
      {"nu-mean", "mean of the normal nu prior used by the ILA"},
      {"nu-sd", "sd of the normal nu prior used by the ILA"},
      {"a-lambda", "Beta-Binomial a"},
      {"b-lambda", "Beta-Binomial b"},
      {"h-ah", "hazard-class weight AH"},
      {"h-ph", "hazard-class weight PH"},
      {"h-aft", "hazard-class weight AFT"},
      {"h-gh", "hazard-class weight GH"},
      {"iters", "MCMC iterations per chain"},
      {"burnin", "burn-in iterations"},
      {"thin", "keep every thin-th post-burn-in state"},
      {"chains", "number of chains"},
      {"seed", "master seed"},
      {"init", "chain start: null, screening or a gamma digit string"},
      {"screening-k", "variables kept by screening initialisation"},
      {"level", "HPM credible-set level"},
      {"workers", "worker threads (0 = automatic)"},
      {"override-cap", "allow enumerate beyond p = 8", true},
      {"n", "simulated sample size"},
      {"p", "simulated number of covariates"},
      {"rho", "AR(1) covariate correlation"},
      {"truth", "true hazard class: null, ah, ph, aft, gh"},
      {"censoring", "target administrative censoring rate"},
      {"sim-baseline", "generating baseline: lognormal or pgw"},
      {"mu", "log-normal baseline location"},
      {"sigma", "log-normal baseline scale"},
      {"pgw-kappa", "PGW scale"},
      {"pgw-theta", "PGW first shape"},
      {"pgw-delta", "PGW second shape"},
      {"reps", "replicates (replicate)"},
  };
  return keys;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string& v = value;
  auto& ml = c.marglik;
  if (key == "out") {
    c.out_dir = v;
    c.sim_out = v;
  } else if (key == "no-standardize") {
    c.standardize = !to_bool(key, v);
  } else if (key == "method") {
    if (v != "auto" && v != "ila" && v != "ila-robust-g" && v != "la") bad(key, v, "expected auto, ila, ila-robust-g or la");
    c.method = v;
  } else if (key == "prior") {
    if (v == "lcm") ml.coef.kind = PriorKind::LCM;
    else if (v == "product") ml.coef.kind = PriorKind::Product;
    else bad(key, v, "expected lcm or product");
  } else if (key == "g") {
    ml.coef.g_E = to_double(key, v);
  } else if (key == "gct") {
    ml.coef.g_Ct = to_double(key, v);
  } else if (key == "gch") {
    ml.coef.g_Ch = to_double(key, v);
  } else if (key == "robust-g") {
    ml.coef.g_mode = to_bool(key, v) ? GMode::RobustHyper : GMode::Fixed;
  } else if (key == "robust-cutoff") {
    ml.robust.cutoff = to_double(key, v);
  } else if (key == "baseline") {
    try {
      ml.kernel = parse_kernel(v);
    } catch (const std::invalid_argument&) {
      bad(key, v, "expected normal, logistic, sech or t2");
    }
  } else if (key == "ila-form") {
    if (v == "corrected") ml.ila.form = IlaForm::Corrected;
    else if (v == "as-printed") ml.ila.form = IlaForm::AsPrinted;
    else bad(key, v, "expected corrected or as-printed");
  } else if (key == "la-dim") {
    if (v == "full") ml.la.full_dimension = true;
    else if (v == "coef") ml.la.full_dimension = false;
    else bad(key, v, "expected full or coef");
  } else if (key == "alpha-nu") {
    ml.common.alpha_nu = to_double(key, v);
  } else if (key == "beta-nu") {
    ml.common.beta_nu = to_double(key, v);
  } else if (key == "theta0-var") {
    ml.common.K = to_double(key, v);
  } else if (key == "nu-mean") {
    ml.common.nu_mean = to_double(key, v);
  } else if (key == "nu-sd") {
    ml.common.nu_sd = to_double(key, v);
  } else if (key == "a-lambda") {
    c.chain.prior.a_lambda = to_double(key, v);
  } else if (key == "b-lambda") {
    c.chain.prior.b_lambda = to_double(key, v);
  } else if (key == "h-ah") {
    c.chain.prior.h_ah = to_double(key, v);
  } else if (key == "h-ph") {
    c.chain.prior.h_ph = to_double(key, v);
  } else if (key == "h-aft") {
    c.chain.prior.h_aft = to_double(key, v);
  } else if (key == "h-gh") {
    c.chain.prior.h_gh = to_double(key, v);
  } else if (key == "iters") {
    c.chain.iterations = to_long(key, v);
  } else if (key == "burnin") {
    c.chain.burn_in = to_long(key, v);
  } else if (key == "thin") {
    c.chain.thin = to_long(key, v);
  } else if (key == "chains") {
    c.chain.n_chains = static_cast<int>(to_long(key, v));
  } else if (key == "seed") {
    const long s = to_long(key, v);
    if (s < 0) bad(key, v, "seed must be non-negative");
    c.chain.seed = static_cast<std::uint64_t>(s);
    c.sim.seed = c.chain.seed;
  } else if (key == "init") {
    if (v == "null") {
      c.chain.init_mode = InitMode::Null;
    } else if (v == "screening") {
      c.chain.init_mode = InitMode::Screening;
    } else {
      try {
        c.chain.init_gamma = Gamma::parse(v);
      } catch (const std::invalid_argument& e) {
        bad(key, v, e.what());
      }
      c.chain.init_mode = InitMode::Given;
    }
  } else if (key == "screening-k") {
    c.chain.screening_k = static_cast<int>(to_long(key, v));
  } else if (key == "level") {
    c.level = to_double(key, v);
  } else if (key == "workers") {
    c.workers = static_cast<int>(to_long(key, v));
  } else if (key == "override-cap") {
    c.override_cap = to_bool(key, v);
  } else if (key == "n") {
    c.sim.n = static_cast<int>(to_long(key, v));
  } else if (key == "p") {
    c.sim.p = static_cast<int>(to_long(key, v));
  } else if (key == "rho") {
    c.sim.rho = to_double(key, v);
  } else if (key == "truth") {
    c.truth_class = to_class(key, v);
  } else if (key == "censoring") {
    c.sim.target_censoring = to_double(key, v);
  } else if (key == "sim-baseline") {
    try {
      c.sim.baseline.family = parse_baseline_family(v);
    } catch (const std::invalid_argument&) {
      bad(key, v, "expected lognormal or pgw");
    }
  } else if (key == "mu") {
    c.sim.baseline.mu = to_double(key, v);
  } else if (key == "sigma") {
    c.sim.baseline.sigma = to_double(key, v);
  } else if (key == "pgw-kappa") {
    c.sim.baseline.pgw.kappa = to_double(key, v);
  } else if (key == "pgw-theta") {
    c.sim.baseline.pgw.theta = to_double(key, v);
  } else if (key == "pgw-delta") {
    c.sim.baseline.pgw.delta = to_double(key, v);
  } else if (key == "reps") {
    c.replicates = static_cast<int>(to_long(key, v));
  } else {
    throw std::invalid_argument("unknown setting '" + key + "'");
  }
}

void RunConfig::finalize(bool simulation) {
  auto& ml = marglik;
  if (method == "auto") {
    if (ml.coef.kind == PriorKind::Product) ml.method = MarglikMethod::LA;
    else ml.method = ml.coef.g_mode == GMode::RobustHyper ? MarglikMethod::ILA_RobustG : MarglikMethod::ILA;
  } else if (method == "ila") {
    ml.method = MarglikMethod::ILA;
  } else if (method == "ila-robust-g") {
    ml.method = MarglikMethod::ILA_RobustG;
    ml.coef.g_mode = GMode::RobustHyper;
  } else {
    ml.method = MarglikMethod::LA;
  }
  if (ml.method == MarglikMethod::LA && ml.coef.kind != PriorKind::Product)
    throw std::invalid_argument("method la requires --prior product");
  if (ml.method != MarglikMethod::LA && ml.coef.kind != PriorKind::LCM)
    throw std::invalid_argument("the ILA methods require --prior lcm");
  if (ml.method == MarglikMethod::ILA && ml.coef.g_mode == GMode::RobustHyper)
    throw std::invalid_argument("--robust-g conflicts with --method ila");
  ml.coef.validate();
  ml.common.validate();
  chain.prior.validate();
  chain.validate();
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("setting 'level': must lie in (0, 1)");
  if (workers < 0) throw std::invalid_argument("setting 'workers': must be non-negative");
  if (replicates < 1) throw std::invalid_argument("setting 'reps': must be at least 1");
  if (!simulation) return;
  sim.truth = standard_truth(truth_class, sim.p);
  sim.validate();
}

std::map<std::string, std::string> parse_config_text(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                   [&](const KeyInfo& k) { return k.key == key; });
    if (!known)
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config_text(in, path);
}

}  // namespace ghsel::cli
