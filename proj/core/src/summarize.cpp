#include "ghsel/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ghsel {

ModelProbs probs_frequency(const std::vector<TraceRecord>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty trace");
  ModelProbs out;
  for (const auto& s : samples) out[s.gamma.key()] += 1.0;
  for (auto& [k, v] : out) v /= static_cast<double>(samples.size());
  return out;
}

ModelProbs probs_frequency(const std::vector<ChainTrace>& chains) {
  std::vector<TraceRecord> all;
  for (const auto& c : chains) all.insert(all.end(), c.samples.begin(), c.samples.end());
  return probs_frequency(all);
}

ModelProbs normalize_log_scores(const std::map<std::string, double>& log_scores) {
  if (log_scores.empty()) throw std::invalid_argument("no models to normalise");
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [k, v] : log_scores) mx = std::max(mx, v);
  double total = 0.0;
  for (const auto& [k, v] : log_scores) total += std::exp(v - mx);
  ModelProbs out;
  for (const auto& [k, v] : log_scores) out[k] = std::exp(v - mx) / total;
  return out;
}

ModelProbs probs_renormalized(const std::vector<TraceRecord>& samples,
                              const std::map<std::string, VisitedModel>& scores) {
  if (samples.empty()) throw std::invalid_argument("empty trace");
  std::map<std::string, double> ls;
  for (const auto& s : samples) {
    const auto key = s.gamma.key();
    if (ls.count(key)) continue;
    const auto it = scores.find(key);
    if (it == scores.end()) throw std::out_of_range("no cached score for model " + key);
    ls[key] = it->second.log_ml + it->second.log_prior;
  }
  return normalize_log_scores(ls);
}

ModelProbs probs_renormalized(const std::vector<ChainTrace>& chains) {
  std::map<std::string, VisitedModel> scores;
  std::vector<TraceRecord> all;
  for (const auto& c : chains) {
    scores.insert(c.visited.begin(), c.visited.end());
    all.insert(all.end(), c.samples.begin(), c.samples.end());
  }
  return probs_renormalized(all, scores);
}

HazardProbs hazard_posterior(const ModelProbs& probs) {
  HazardProbs out;
  for (auto c : kAllClasses) out[c] = 0.0;
  for (const auto& [k, v] : probs) out[classify(Gamma::parse(k))] += v;
  return out;
}

Pip pip(const ModelProbs& probs, int p) {
  Pip out{Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, 4)};
  for (const auto& [k, v] : probs) {
    const Gamma g = Gamma::parse(k);
    if (g.size() != p) throw std::invalid_argument("model key length does not match p");
    for (int j = 0; j < p; ++j) {
      if (g[j] == 0) continue;
      out.by_role(j, g[j] - 1) += v;
    }
  }
  out.any = out.by_role.rowwise().sum();
  return out;
}

HpmSet hpm_credible_set(const ModelProbs& probs, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  HpmSet sorted(probs.begin(), probs.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  HpmSet out;
  double cum = 0.0;
  for (const auto& e : sorted) {
    out.push_back(e);
    cum += e.second;
    if (cum >= level - 1e-12) break;
  }
  return out;
}

std::pair<double, double> score_selection(const Gamma& selected, const Gamma& truth) {
  if (selected.size() != truth.size()) throw std::invalid_argument("score_selection: length mismatch");
  int tp = 0, fn = 0, tn = 0, fp = 0;
  for (int j = 0; j < truth.size(); ++j) {
    const bool s = selected[j] != 0;
    const bool t = truth[j] != 0;
    if (t && s) ++tp;
    if (t && !s) ++fn;
    if (!t && !s) ++tn;
    if (!t && s) ++fp;
  }
  const double sens = tp + fn ? static_cast<double>(tp) / (tp + fn) : 1.0;
  const double spec = tn + fp ? static_cast<double>(tn) / (tn + fp) : 1.0;
  return {sens, spec};
}

std::string top_model(const ModelProbs& probs) {
  if (probs.empty()) throw std::invalid_argument("no models");
  auto best = probs.begin();
  for (auto it = probs.begin(); it != probs.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

double total_variation(const ModelProbs& a, const ModelProbs& b) {
  double tv = 0.0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    tv += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) tv += std::abs(v);
  return 0.5 * tv;
}

PosteriorSummary summarize(const ModelProbs& probs, int p, double level) {
  return {probs, hazard_posterior(probs), pip(probs, p), hpm_credible_set(probs, level)};
}

}  // namespace ghsel
