#include "ghsel/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace ghsel {

std::string_view to_string(MoveKind m) {
  switch (m) {
    case MoveKind::A_null: return "A_null";
    case MoveKind::AD: return "AD";
    case MoveKind::AD_GH: return "AD_GH";
    case MoveKind::Swap: return "S";
    case MoveKind::Change: return "C";
    case MoveKind::ChangeAll: return "CA";
  }
  return "?";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t idx(MoveKind m) { return static_cast<std::size_t>(m); }

bool all_equal(const Gamma& g) {
  return std::all_of(g.codes().begin(), g.codes().end(), [&](int c) { return c == g[0]; });
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

std::array<double, kNumMoves> move_probabilities(const Gamma& g) {
  std::array<double, kNumMoves> pr{};
  auto set = [&](MoveKind m, double v) { pr[idx(m)] = v; };
  const auto n = code_counts(g);
  switch (classify(g)) {
    case HazardClass::Null:
      set(MoveKind::A_null, 1.0);
      break;
    case HazardClass::AH:
    case HazardClass::PH:
      set(MoveKind::AD, 0.5);
      if (all_equal(g)) {
        set(MoveKind::Change, 0.25);
        set(MoveKind::ChangeAll, 0.25);
      } else {
        set(MoveKind::Swap, 0.1);
        set(MoveKind::Change, 0.2);
        set(MoveKind::ChangeAll, 0.2);
      }
      break;
    case HazardClass::AFT:
      set(MoveKind::AD, 0.6);
      if (all_equal(g)) {
        set(MoveKind::ChangeAll, 0.4);
      } else {
        set(MoveKind::Swap, 0.2);
        set(MoveKind::ChangeAll, 0.2);
      }
      break;
    case HazardClass::GH:
      set(MoveKind::AD_GH, 0.5);
      if (n[1] + n[2] == 0 && n[0] == 0) {
        set(MoveKind::Change, 0.25);
        set(MoveKind::ChangeAll, 0.25);
      } else if (n[1] + n[2] == 0) {
        // Codes in {0,3} with at least one 0.
        set(MoveKind::Swap, 0.15);
        set(MoveKind::Change, 0.15);
        set(MoveKind::ChangeAll, 0.2);
      } else {
        set(MoveKind::Swap, 0.25);
        set(MoveKind::Change, 0.25);
      }
      // With no valid index (one 1, one 2, nothing else) A/D_GH cannot move;
      // its mass is spread over the remaining moves of the row.
      if (get_valid_idx(g).empty()) {
        const double keep = 1.0 - pr[idx(MoveKind::AD_GH)];
        pr[idx(MoveKind::AD_GH)] = 0.0;
        for (auto& v : pr) v /= keep;
      }
      break;
  }
  return pr;
}

int RngChooser::pick_weighted(std::span<const double> probs) {
  const double u = uniform01(*rng_);
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return last;
  }
  return last;
}

MoveKind select_move(const Gamma& g, Chooser& ch) {
  const auto pr = move_probabilities(g);
  return static_cast<MoveKind>(ch.pick_weighted(pr));
}

Proposal propose(const Gamma& g, Chooser& ch) {
  const int p = g.size();
  const auto cls = classify(g);
  Proposal out;
  out.move = select_move(g, ch);
  const double pm = move_probability(g, out.move);
  double q_fwd = 0.0;
  double q_rev = 0.0;

  switch (out.move) {
    case MoveKind::A_null: {
      const int j = ch.pick(p);
      const int v = 1 + ch.pick(4);
      out.indices = {j};
      out.gamma = g.with(j, v);
      q_fwd = 1.0 / (4.0 * p);
      if (classify(out.gamma) == HazardClass::GH)
        q_rev = move_probability(out.gamma, MoveKind::AD_GH) /
                static_cast<double>(get_valid_idx(out.gamma).size());
      else
        q_rev = move_probability(out.gamma, MoveKind::AD) / p;
      break;
    }
    case MoveKind::AD: {
      const int j = ch.pick(p);
      out.indices = {j};
      int v = 0;
      if (g[j] == 0) v = cls == HazardClass::AH ? 1 : cls == HazardClass::PH ? 2 : 4;
      out.gamma = g.with(j, v);
      q_fwd = pm / p;
      q_rev = out.gamma.is_null() ? 1.0 / (4.0 * p) : move_probability(out.gamma, MoveKind::AD) / p;
      break;
    }
    case MoveKind::AD_GH: {
      const auto V = get_valid_idx(g);
      const int j = V[static_cast<std::size_t>(ch.pick(static_cast<int>(V.size())))];
      out.indices = {j};
      const double nv = static_cast<double>(V.size());
      if (g[j] > 0) {
        out.gamma = g.with(j, 0);
        q_fwd = pm / nv;
        if (out.gamma.is_null()) {
          q_rev = 1.0 / (4.0 * p);
        } else if (classify(out.gamma) == HazardClass::GH) {
          q_rev = move_probability(out.gamma, MoveKind::AD_GH) /
                  static_cast<double>(get_valid_idx(out.gamma).size()) / 3.0;
        }
      } else {
        out.gamma = g.with(j, 1 + ch.pick(3));
        q_fwd = pm / nv / 3.0;
        q_rev = move_probability(out.gamma, MoveKind::AD_GH) /
                static_cast<double>(get_valid_idx(out.gamma).size());
      }
      break;
    }
    case MoveKind::Change: {
      std::vector<int> N;
      for (int j = 0; j < p; ++j)
        if (g[j] != 0) N.push_back(j);
      const int j = N[static_cast<std::size_t>(ch.pick(static_cast<int>(N.size())))];
      std::vector<int> opts;
      for (int v : {1, 2, 3})
        if (v != g[j]) opts.push_back(v);
      out.indices = {j};
      out.gamma = g.with(j, opts[static_cast<std::size_t>(ch.pick(2))]);
      const double nn = static_cast<double>(N.size());
      q_fwd = pm / nn / 2.0;
      q_rev = move_probability(out.gamma, MoveKind::Change) / nn / 2.0;
      break;
    }
    case MoveKind::Swap: {
      const int j1 = ch.pick(p);
      const int v1 = g[j1];
      std::vector<int> O;
      for (int j = 0; j < p; ++j)
        if (g[j] != v1) O.push_back(j);
      // Swap has probability zero in all-equal states, so O is never empty here.
      if (O.empty()) throw std::logic_error("swap proposed from an all-equal state");
      const int j2 = O[static_cast<std::size_t>(ch.pick(static_cast<int>(O.size())))];
      const int v2 = g[j2];
      out.indices = {j1, j2};
      auto c = g.codes();
      const bool special = v1 + v2 == 3;
      if (!special) {
        std::swap(c[static_cast<std::size_t>(j1)], c[static_cast<std::size_t>(j2)]);
      } else {
        const bool first = ch.pick(2) == 0;
        const bool split = v1 == 1 || v1 == 2;  // (1,2) -> (0,3)/(3,0), else (0,3) -> (1,2)/(2,1)
        const int a = split ? 0 : 1;
        const int b = split ? 3 : 2;
        c[static_cast<std::size_t>(j1)] = first ? a : b;
        c[static_cast<std::size_t>(j2)] = first ? b : a;
      }
      out.gamma = Gamma(std::move(c));
      const int w1 = out.gamma[j1];
      int p_o = 0;
      for (int j = 0; j < p; ++j)
        if (out.gamma[j] != w1) ++p_o;
      q_fwd = pm / p / static_cast<double>(O.size());
      if (special) q_fwd /= 2.0;
      q_rev = p_o > 0 ? move_probability(out.gamma, MoveKind::Swap) / p / p_o : 0.0;
      if (w1 + out.gamma[j2] == 3) q_rev /= 2.0;
      break;
    }
    case MoveKind::ChangeAll: {
      auto c = g.codes();
      if (cls == HazardClass::AFT) {
        const int v = 1 + ch.pick(3);
        for (auto& x : c)
          if (x == 4) x = v;
        out.gamma = Gamma(std::move(c));
        q_fwd = pm / 3.0;
        q_rev = move_probability(out.gamma, MoveKind::ChangeAll) /
                (classify(out.gamma) == HazardClass::GH ? 1.0 : 2.0);
      } else if (cls == HazardClass::GH) {
        for (auto& x : c)
          if (x == 3) x = 4;
        out.gamma = Gamma(std::move(c));
        q_fwd = pm;
        q_rev = move_probability(out.gamma, MoveKind::ChangeAll) / 3.0;
      } else {
        const int old = cls == HazardClass::AH ? 1 : 2;
        std::vector<int> opts;
        for (int v : {1, 2, 4})
          if (v != old) opts.push_back(v);
        const int v = opts[static_cast<std::size_t>(ch.pick(2))];
        for (auto& x : c)
          if (x != 0) x = v;
        out.gamma = Gamma(std::move(c));
        q_fwd = pm / 2.0;
        q_rev = move_probability(out.gamma, MoveKind::ChangeAll) /
                (classify(out.gamma) == HazardClass::AFT ? 3.0 : 2.0);
      }
      break;
    }
  }
  out.log_q_fwd = safe_log(q_fwd);
  out.log_q_rev = safe_log(q_rev);
  return out;
}

Proposal propose(const Gamma& g, Rng& rng) {
  RngChooser ch(rng);
  return propose(g, ch);
}

ChainState mh_step(const ChainState& s, const ScoreFn& score, const ModelPriorConfig& prior, Rng& rng,
                   MoveStats* stats) {
  const Proposal prop = propose(s.gamma, rng);
  ChainState next = s;
  next.iteration = s.iteration + 1;
  const auto m = idx(prop.move);
  if (stats) ++stats->proposed[m];
  const double lm = score(prop.gamma);
  if (!std::isfinite(lm)) {
    if (stats) ++stats->failed_fits;
    return next;
  }
  const double lp = log_model_prior(prop.gamma, prior);
  const double log_acc = lm + lp - s.log_ml - s.log_prior + prop.log_hastings();
  if (std::log(uniform01(rng)) < log_acc) {
    next.gamma = prop.gamma;
    next.log_ml = lm;
    next.log_prior = lp;
    if (stats) ++stats->accepted[m];
  }
  return next;
}

void ChainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("burn-in must be in [0, iterations)");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (n_chains < 1) throw std::invalid_argument("at least one chain is required");
  prior.validate();
}

double ChainTrace::acceptance_rate() const {
  long prop = 0, acc = 0;
  for (int m = 0; m < kNumMoves; ++m) {
    prop += stats.proposed[static_cast<std::size_t>(m)];
    acc += stats.accepted[static_cast<std::size_t>(m)];
  }
  return prop ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
}

Gamma initial_gamma(int p, const ScoreFn& score, const ChainConfig& cfg) {
  switch (cfg.init_mode) {
    case InitMode::Null:
      return Gamma::null(p);
    case InitMode::Given:
      if (!cfg.init_gamma) throw std::invalid_argument("init mode 'given' needs an initial model");
      if (cfg.init_gamma->size() != p) throw std::invalid_argument("initial model has the wrong length");
      return *cfg.init_gamma;
    case InitMode::Screening: {
      const Gamma null = Gamma::null(p);
      const double base = score(null);
      std::vector<std::pair<double, int>> gains;
      for (int j = 0; j < p; ++j) {
        const double s = score(null.with(j, 2));
        if (std::isfinite(s) && s > base) gains.emplace_back(s - base, j);
      }
      std::stable_sort(gains.begin(), gains.end(), [](auto& a, auto& b) { return a.first > b.first; });
      auto c = null.codes();
      const int k = std::min<int>(cfg.screening_k, static_cast<int>(gains.size()));
      for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(gains[static_cast<std::size_t>(i)].second)] = 2;
      return Gamma(std::move(c));
    }
  }
  return Gamma::null(p);
}

ChainTrace run_chain(int p, const ScoreFn& score, const ChainConfig& cfg, int chain) {
  cfg.validate();
  ChainTrace tr;
  tr.chain = chain;
  tr.iterations = cfg.iterations;
  const ScoreFn recorded = [&](const Gamma& g) {
    const double s = score(g);
    if (std::isfinite(s)) {
      auto [it, inserted] = tr.visited.try_emplace(g.key());
      if (inserted) it->second = VisitedModel{g, s, log_model_prior(g, cfg.prior)};
    }
    return s;
  };

  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain));
  ChainState st;
  st.gamma = initial_gamma(p, recorded, cfg);
  st.log_ml = recorded(st.gamma);
  if (!std::isfinite(st.log_ml)) {
    st.gamma = Gamma::null(p);
    st.log_ml = recorded(st.gamma);
    if (!std::isfinite(st.log_ml)) throw std::runtime_error("the Null model could not be scored");
  }
  st.log_prior = log_model_prior(st.gamma, cfg.prior);

  tr.samples.reserve(static_cast<std::size_t>(std::max(0L, cfg.retained())));
  for (long it = 1; it <= cfg.iterations; ++it) {
    st = mh_step(st, recorded, cfg.prior, rng, &tr.stats);
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0)
      tr.samples.push_back({it, st.gamma, st.log_ml, st.log_prior});
  }
  return tr;
}

std::vector<ChainTrace> run_chains(int p, const ScoreFn& score, const ChainConfig& cfg, int max_threads) {
  cfg.validate();
  std::vector<ChainTrace> out(static_cast<std::size_t>(cfg.n_chains));
  int workers = max_threads > 0 ? max_threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, cfg.n_chains);
  std::vector<std::exception_ptr> errors(out.size());
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int c = w; c < cfg.n_chains; c += workers) {
          try {
            out[static_cast<std::size_t>(c)] = run_chain(p, score, cfg, c);
          } catch (...) {
            errors[static_cast<std::size_t>(c)] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ghsel
