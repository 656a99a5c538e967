#pragma once

#include "ghsel/modelspace.hpp"
#include "ghsel/sampler.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ghsel {

/// Posterior probability per model, keyed by gamma key.
using ModelProbs = std::map<std::string, double>;
using HazardProbs = std::map<HazardClass, double>;
using HpmSet = std::vector<std::pair<std::string, double>>;

/// Visit frequencies of the retained samples. Throws std::invalid_argument if empty.
ModelProbs probs_frequency(const std::vector<TraceRecord>& samples);
/// Pools the samples of several chains.
ModelProbs probs_frequency(const std::vector<ChainTrace>& chains);

/// exp(log_ml + log_prior) renormalised over the set of sampled models. Scores
/// are looked up in `scores`; a missing entry throws std::out_of_range.
ModelProbs probs_renormalized(const std::vector<TraceRecord>& samples,
                              const std::map<std::string, VisitedModel>& scores);
/// Union of the sampled sets of several chains.
ModelProbs probs_renormalized(const std::vector<ChainTrace>& chains);

/// Normalised posterior from log scores (log_ml + log_prior) per key.
ModelProbs normalize_log_scores(const std::map<std::string, double>& log_scores);

HazardProbs hazard_posterior(const ModelProbs& probs);

struct Pip {
  Eigen::VectorXd any;      // P(gamma_j != 0)
  Eigen::MatrixXd by_role;  // p x 4, column r-1 holds P(gamma_j = r)
};

Pip pip(const ModelProbs& probs, int p);

/// Smallest probability-sorted prefix reaching `level`; ties broken by key.
HpmSet hpm_credible_set(const ModelProbs& probs, double level);

/// Inclusion-level sensitivity and specificity. A vacuous ratio (no positives
/// or no negatives in the truth) is reported as 1.
std::pair<double, double> score_selection(const Gamma& selected, const Gamma& truth);

/// Highest-probability model (ties by key).
std::string top_model(const ModelProbs& probs);

/// 0.5 * sum |a - b| over the union of keys.
double total_variation(const ModelProbs& a, const ModelProbs& b);

struct PosteriorSummary {
  ModelProbs model_probs;
  HazardProbs hazard_probs;
  Pip pip;
  HpmSet hpm_set;
};

PosteriorSummary summarize(const ModelProbs& probs, int p, double level);

}  // namespace ghsel
