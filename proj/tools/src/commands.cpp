#include "ghsel_cli/cli.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace ghsel::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << std::setprecision(17);
  return out;
}

std::string class_of(const std::string& key) { return std::string(to_string(classify(Gamma::parse(key)))); }

std::vector<std::pair<std::string, double>> sorted_probs(const ModelProbs& probs) {
  std::vector<std::pair<std::string, double>> v(probs.begin(), probs.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return v;
}

json estimator_json(const PosteriorSummary& s, const std::vector<std::string>& names, double level) {
  json models = json::array();
  for (const auto& [k, v] : sorted_probs(s.model_probs))
    models.push_back({{"gamma", k}, {"class", class_of(k)}, {"prob", v}});
  json hazard = json::object();
  for (const auto& [c, v] : s.hazard_probs) hazard[std::string(to_string(c))] = v;
  json pip = json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    pip.push_back({{"variable", names[j]},
                   {"any", s.pip.any(jj)},
                   {"code1", s.pip.by_role(jj, 0)},
                   {"code2", s.pip.by_role(jj, 1)},
                   {"code3", s.pip.by_role(jj, 2)},
                   {"code4", s.pip.by_role(jj, 3)}});
  }
  json hpm = json::array();
  for (const auto& [k, v] : s.hpm_set) hpm.push_back({{"gamma", k}, {"class", class_of(k)}, {"prob", v}});
  return {{"model_probs", models},
          {"hazard_probs", hazard},
          {"pip", pip},
          {"hpm_set", {{"level", level}, {"models", hpm}}}};
}

std::string g_mode_name(GMode m) { return m == GMode::Fixed ? "fixed" : "robust"; }

json settings_json(const RunConfig& c) {
  const auto& ml = c.marglik;
  return {{"method", std::string(to_string(ml.method))},
          {"prior", std::string(to_string(ml.coef.kind))},
          {"baseline", std::string(to_string(ml.kernel))},
          {"g", ml.coef.g_E},
          {"gct", ml.coef.g_Ct},
          {"gch", ml.coef.g_Ch},
          {"g_mode", g_mode_name(ml.coef.g_mode)},
          {"ila_form", ml.ila.form == IlaForm::Corrected ? "corrected" : "as-printed"},
          {"iters", c.chain.iterations},
          {"burnin", c.chain.burn_in},
          {"thin", c.chain.thin},
          {"chains", c.chain.n_chains},
          {"seed", c.chain.seed},
          {"level", c.level},
          {"standardize", c.standardize}};
}

struct Named {
  std::string parameter;
  std::string variable;
  double value;
};

std::vector<Named> psi_rows(const ParameterEstimate& e, const Gamma& g, const std::vector<std::string>& names) {
  std::vector<Named> out{{"nu", "", e.psi(0)}, {"theta0", "", e.psi(1)}};
  const auto tc = time_columns(g);
  Eigen::Index k = 2;
  for (int j : tc) out.push_back({"theta", names[static_cast<std::size_t>(j)], e.psi(k++)});
  if (classify(g) != HazardClass::AFT)
    for (int j : hazard_columns(g)) out.push_back({"eta", names[static_cast<std::size_t>(j)], e.psi(k++)});
  return out;
}

std::vector<Named> natural_rows(const ParameterEstimate& e, const Gamma& g, const std::vector<std::string>& names) {
  std::vector<Named> out{{"mu", "", e.natural.mu}, {"sigma", "", e.natural.sigma}};
  const auto tc = time_columns(g);
  const auto hc = classify(g) == HazardClass::AFT ? tc : hazard_columns(g);
  for (std::size_t i = 0; i < tc.size(); ++i)
    out.push_back({"alpha", names[static_cast<std::size_t>(tc[i])], e.natural.alpha(static_cast<Eigen::Index>(i))});
  for (std::size_t i = 0; i < hc.size(); ++i)
    out.push_back({"beta", names[static_cast<std::size_t>(hc[i])], e.natural.beta(static_cast<Eigen::Index>(i))});
  return out;
}

json rows_json(const std::vector<Named>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json e = {{"parameter", r.parameter}};
    if (!r.variable.empty()) e["variable"] = r.variable;
    e["value"] = r.value;
    out.push_back(e);
  }
  return out;
}

int resolve_threads(int requested, int fallback) {
  if (requested > 0) return requested;
  return std::max(1, fallback);
}

}  // namespace

SelectResult run_select(const Dataset& data_in, const RunConfig& cfg) {
  Dataset data = data_in;
  if (cfg.standardize) data.standardize();
  MarglikEngine engine(data, cfg.marglik);
  const ScoreFn score = [&engine](const Gamma& g) { return engine.log_ml(g); };

  SelectResult r;
  r.n = data.n();
  r.p = data.p();
  r.names = data.names();
  r.chains = run_chains(r.p, score, cfg.chain, resolve_threads(cfg.workers, cfg.chain.n_chains));
  r.probs_frequency = probs_frequency(r.chains);
  r.probs_renormalized = probs_renormalized(r.chains);
  r.summary_frequency = summarize(r.probs_frequency, r.p, cfg.level);
  r.summary_renormalized = summarize(r.probs_renormalized, r.p, cfg.level);
  for (const auto& c : r.chains) r.scores.insert(c.visited.begin(), c.visited.end());
  r.top_model = top_model(r.probs_renormalized);

  const Gamma top = Gamma::parse(r.top_model);
  const auto rec = engine.evaluate(top);
  auto& e = r.estimate;
  e.status = rec->fit.status;
  if (cfg.marglik.method == MarglikMethod::LA) {
    e.estimate_type = "map";
    e.psi = rec->fit.psi;
  } else {
    e.estimate_type = "ila_posterior_mode";
    e.psi = ila_posterior_mode(rec->fit, r.n, cfg.marglik.coef.g_E, cfg.marglik.common);
  }
  e.natural = to_natural(e.psi, top);
  return r;
}

std::string summary_json(const SelectResult& r, const RunConfig& cfg) {
  json chains = json::array();
  for (const auto& c : r.chains) {
    chains.push_back({{"chain", c.chain},
                      {"acceptance_rate", c.acceptance_rate()},
                      {"models_visited", c.visited.size()},
                      {"failed_fits", c.stats.failed_fits},
                      {"retained", c.samples.size()}});
  }
  const Gamma top = Gamma::parse(r.top_model);
  const auto& sc = r.scores.at(r.top_model);
  json top_json = {{"gamma", r.top_model},
                   {"class", class_of(r.top_model)},
                   {"log_ml", sc.log_ml},
                   {"log_prior", sc.log_prior},
                   {"estimate_type", r.estimate.estimate_type},
                   {"fit_status", std::string(to_string(r.estimate.status))},
                   {"psi", rows_json(psi_rows(r.estimate, top, r.names))},
                   {"natural", rows_json(natural_rows(r.estimate, top, r.names))}};
  json out = {{"n", r.n},
              {"p", r.p},
              {"covariates", r.names},
              {"settings", settings_json(cfg)},
              {"chains", chains},
              {"estimators",
               {{"frequency", estimator_json(r.summary_frequency, r.names, cfg.level)},
                {"renormalized", estimator_json(r.summary_renormalized, r.names, cfg.level)}}},
              {"top_model", top_json}};
  return out.dump(2) + "\n";
}

void write_select_outputs(const SelectResult& r, const RunConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "trace.jsonl");
    for (const auto& c : r.chains)
      for (const auto& s : c.samples) {
        json j = {{"iter", s.iteration},
                  {"gamma", s.gamma.key()},
                  {"class", std::string(to_string(classify(s.gamma)))},
                  {"log_ml", s.log_ml},
                  {"log_prior", s.log_prior},
                  {"chain", c.chain}};
        out << j.dump() << '\n';
      }
  }
  open_out(dir / "summary.json") << summary_json(r, cfg);
  {
    auto out = open_out(dir / "model_probs.csv");
    out << "gamma,class,log_ml,log_prior,prob_frequency,prob_renormalized\n";
    for (const auto& [k, v] : sorted_probs(r.probs_renormalized)) {
      const auto f = r.probs_frequency.find(k);
      const auto& sc = r.scores.at(k);
      out << k << ',' << class_of(k) << ',' << sc.log_ml << ',' << sc.log_prior << ','
          << (f == r.probs_frequency.end() ? 0.0 : f->second) << ',' << v << '\n';
    }
  }
  {
    auto out = open_out(dir / "hazard_probs.csv");
    out << "class,prob_frequency,prob_renormalized\n";
    for (auto c : kAllClasses)
      out << to_string(c) << ',' << r.summary_frequency.hazard_probs.at(c) << ','
          << r.summary_renormalized.hazard_probs.at(c) << '\n';
  }
  {
    auto out = open_out(dir / "pip.csv");
    out << "variable,estimator,pip_any,pip_code1,pip_code2,pip_code3,pip_code4\n";
    for (const auto* s : {&r.summary_frequency, &r.summary_renormalized}) {
      const char* est = s == &r.summary_frequency ? "frequency" : "renormalized";
      for (int j = 0; j < r.p; ++j) {
        out << r.names[static_cast<std::size_t>(j)] << ',' << est << ',' << s->pip.any(j);
        for (int c = 0; c < 4; ++c) out << ',' << s->pip.by_role(j, c);
        out << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "hpm.csv");
    out << "rank,gamma,class,prob,cumulative\n";
    double cum = 0.0;
    int rank = 1;
    for (const auto& [k, v] : r.summary_renormalized.hpm_set) {
      cum += v;
      out << rank++ << ',' << k << ',' << class_of(k) << ',' << v << ',' << cum << '\n';
    }
  }
  {
    auto out = open_out(dir / "coefficients.csv");
    out << "parametrisation,parameter,variable,value\n";
    const Gamma top = Gamma::parse(r.top_model);
    for (const auto& row : psi_rows(r.estimate, top, r.names))
      out << "psi," << row.parameter << ',' << row.variable << ',' << row.value << '\n';
    for (const auto& row : natural_rows(r.estimate, top, r.names))
      out << "natural," << row.parameter << ',' << row.variable << ',' << row.value << '\n';
  }
}

std::vector<EnumeratedModel> run_enumerate(const Dataset& data_in, const RunConfig& cfg) {
  Dataset data = data_in;
  if (cfg.standardize) data.standardize();
  const auto models = enumerate_models(data.p(), cfg.override_cap ? std::max(data.p(), kEnumerateCap) : kEnumerateCap);
  MarglikEngine engine(data, cfg.marglik);
  std::vector<double> lml(models.size());
  std::atomic<std::size_t> next{0};
  {
    const int threads = resolve_threads(cfg.workers, static_cast<int>(std::thread::hardware_concurrency()));
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < models.size(); i = next++) lml[i] = engine.log_ml(models[i]);
      });
  }
  std::map<std::string, double> scores;
  std::vector<EnumeratedModel> rows;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double lp = log_model_prior(models[i], cfg.chain.prior);
    rows.push_back({models[i].key(), classify(models[i]), lml[i], lp, 0.0});
    if (std::isfinite(lml[i])) scores[models[i].key()] = lml[i] + lp;
  }
  const auto post = normalize_log_scores(scores);
  for (auto& r : rows) {
    const auto it = post.find(r.gamma);
    r.posterior = it == post.end() ? 0.0 : it->second;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.posterior != b.posterior ? a.posterior > b.posterior : a.gamma < b.gamma;
  });
  return rows;
}

void write_enumerate_csv(std::ostream& out, const std::vector<EnumeratedModel>& rows) {
  out << std::setprecision(17) << "gamma,class,log_ml,log_prior,posterior\n";
  for (const auto& r : rows)
    out << r.gamma << ',' << to_string(r.hazard) << ',' << r.log_ml << ',' << r.log_prior << ','
        << r.posterior << '\n';
}

std::string truth_json(const SimConfig& sim, double c_admin) {
  json baseline = {{"family", std::string(to_string(sim.baseline.family))}};
  if (sim.baseline.family == BaselineFamily::LogNormal) {
    baseline["mu"] = sim.baseline.mu;
    baseline["sigma"] = sim.baseline.sigma;
  } else {
    baseline["kappa"] = sim.baseline.pgw.kappa;
    baseline["theta"] = sim.baseline.pgw.theta;
    baseline["delta"] = sim.baseline.pgw.delta;
  }
  const auto& a = sim.truth.alpha;
  const auto& b = sim.truth.beta;
  json out = {{"gamma", sim.truth.gamma.key()},
              {"class", std::string(to_string(classify(sim.truth.gamma)))},
              {"alpha", std::vector<double>(a.data(), a.data() + a.size())},
              {"beta", std::vector<double>(b.data(), b.data() + b.size())},
              {"baseline", baseline},
              {"n", sim.n},
              {"p", sim.p},
              {"rho", sim.rho},
              {"target_censoring", sim.target_censoring},
              {"c_admin", std::isfinite(c_admin) ? json(c_admin) : json(nullptr)},
              {"seed", sim.seed}};
  return out.dump(2) + "\n";
}

std::string run_simulate(const RunConfig& cfg) {
  const auto res = simulate_dataset(cfg.sim);
  fs::path path(cfg.sim_out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    auto out = open_out(path);
    write_dataset_csv(out, res.data);
  }
  fs::path side = path;
  side.replace_extension(".truth.json");
  open_out(side) << truth_json(cfg.sim, res.c_admin);
  return side.string();
}

std::vector<ReplicateRow> run_replicate(const RunConfig& cfg, std::ostream* log) {
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(cfg.replicates));
  std::mutex log_mu;
  const HazardClass truth_class = classify(cfg.sim.truth.gamma);

  const auto one = [&](int rep) {
    ReplicateRow& row = rows[static_cast<std::size_t>(rep)];
    row.replicate = rep;
    row.seed = splitmix64(cfg.chain.seed ^ splitmix64(static_cast<std::uint64_t>(rep) + 1));
    try {
      SimConfig sc = cfg.sim;
      sc.seed = row.seed;
      auto sim = simulate_dataset(sc);
      Dataset data = std::move(sim.data);
      row.censoring = 1.0 - static_cast<double>(data.n_events()) / data.n();
      if (cfg.standardize) data.standardize();
      MarglikEngine engine(data, cfg.marglik);
      const ScoreFn score = [&engine](const Gamma& g) { return engine.log_ml(g); };
      ChainConfig cc = cfg.chain;
      cc.seed = row.seed;
      std::vector<ChainTrace> chains;
      for (int c = 0; c < cc.n_chains; ++c) chains.push_back(run_chain(data.p(), score, cc, c));
      const auto probs = probs_renormalized(chains);
      const auto hz = hazard_posterior(probs);
      row.hpm = top_model(probs);
      row.modal_class = std::max_element(hz.begin(), hz.end(), [](const auto& a, const auto& b) {
                          return a.second < b.second;
                        })->first;
      const auto [sens, spec] = score_selection(Gamma::parse(row.hpm), sc.truth.gamma);
      row.sensitivity = sens;
      row.specificity = spec;
      row.hazard_correct = row.modal_class == truth_class;
      row.true_class_prob = hz.at(truth_class);
      row.pip = pip(probs, data.p()).any;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    if (log) {
      std::lock_guard lock(log_mu);
      if (row.ok)
        *log << "replicate " << rep << ": hpm " << row.hpm << " modal " << to_string(row.modal_class) << '\n';
      else
        *log << "replicate " << rep << " failed: " << row.error << '\n';
    }
  };

  std::atomic<int> next{0};
  const int threads = resolve_threads(cfg.workers, static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::min(threads, cfg.replicates); ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < cfg.replicates; i = next++) one(i);
    });
  pool.clear();
  return rows;
}

ReplicateAggregate aggregate(const std::vector<ReplicateRow>& rows) {
  ReplicateAggregate a;
  for (const auto& r : rows) {
    if (!r.ok) {
      ++a.failed;
      continue;
    }
    ++a.ok;
    a.sensitivity += r.sensitivity;
    a.specificity += r.specificity;
    a.hazard_accuracy += r.hazard_correct ? 1.0 : 0.0;
    a.true_class_prob += r.true_class_prob;
  }
  if (a.ok > 0) {
    a.sensitivity /= a.ok;
    a.specificity /= a.ok;
    a.hazard_accuracy /= a.ok;
    a.true_class_prob /= a.ok;
  }
  return a;
}

void write_replicate_csv(std::ostream& out, const std::vector<ReplicateRow>& rows, const RunConfig& cfg) {
  out << std::setprecision(17) << "replicate,seed,status,realised_censoring,hpm,hpm_class,modal_class,"
      << "sensitivity,specificity,hazard_correct,true_class_prob";
  for (int j = 0; j < cfg.sim.p; ++j) out << ",pip_x" << j + 1;
  out << ",error\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << r.censoring << ',' << r.hpm << ',' << class_of(r.hpm) << ',' << to_string(r.modal_class) << ','
          << r.sensitivity << ',' << r.specificity << ',' << (r.hazard_correct ? 1 : 0) << ','
          << r.true_class_prob;
      for (int j = 0; j < cfg.sim.p; ++j) out << ',' << r.pip(j);
      out << ",\n";
    } else {
      out << ",,,,,,,";
      for (int j = 0; j < cfg.sim.p; ++j) out << ',';
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      out << ',' << msg << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out, const ReplicateAggregate& a, const RunConfig& cfg) {
  out << std::setprecision(17)
      << "truth,n,p,censoring,baseline,reps_ok,reps_failed,sensitivity,specificity,hazard_accuracy,"
         "mean_true_class_prob\n"
      << to_string(cfg.truth_class) << ',' << cfg.sim.n << ',' << cfg.sim.p << ','
      << cfg.sim.target_censoring << ',' << to_string(cfg.sim.baseline.family) << ',' << a.ok << ','
      << a.failed << ',' << a.sensitivity << ',' << a.specificity << ',' << a.hazard_accuracy << ','
      << a.true_class_prob << '\n';
}

}  // namespace ghsel::cli
