#pragma once

#include "ghsel/dataset.hpp"
#include "ghsel/marglik.hpp"
#include "ghsel/sampler.hpp"
#include "ghsel/simulate.hpp"
#include "ghsel/summarize.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ghsel::cli {

/// Every setting of every subcommand. Defaults are the library defaults.
struct RunConfig {
  std::string data_path;
  std::string out_dir = "ghsel_out";
  bool standardize = true;

  /// "auto" picks ILA for the LCM prior (robust-g ILA with --robust-g) and LA
  /// for the Product prior.
  std::string method = "auto";
  MarglikConfig marglik;
  ChainConfig chain;
  double level = 0.95;
  int workers = 0;  // 0: one per chain (select) or hardware concurrency (replicate)

  bool override_cap = false;

  SimConfig sim;
  HazardClass truth_class = HazardClass::PH;
  std::string sim_out = "sim.csv";

  int replicates = 3;

  /// Resolves the method and validates the settings. With `simulation` the
  /// truth is rebuilt from truth_class and sim.p and the simulation settings
  /// are validated too. Throws std::invalid_argument.
  void finalize(bool simulation = false);
};

/// Keys accepted by config files and, prefixed with "--", on the command line.
struct KeyInfo {
  std::string key;
  std::string help;
  bool is_flag = false;
};
const std::vector<KeyInfo>& config_keys();

/// Applies one setting. Throws std::invalid_argument naming the key on a bad
/// key or value.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value lines; '#' starts a comment. Errors name the line.
std::map<std::string, std::string> parse_config_text(std::istream& in, const std::string& source);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Dataset CSV: header "time,status,<covariates...>". Errors name the line.
Dataset read_dataset_csv(std::istream& in, const std::string& source);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& d);

// ---- select ---------------------------------------------------------------

struct ParameterEstimate {
  std::string estimate_type;  // "ila_posterior_mode" or "map"
  Eigen::VectorXd psi;
  NaturalParams natural;
  FitStatus status = FitStatus::MaxIter;
};

struct SelectResult {
  int n = 0;
  int p = 0;
  std::vector<std::string> names;
  std::vector<ChainTrace> chains;
  ModelProbs probs_frequency;
  ModelProbs probs_renormalized;
  PosteriorSummary summary_frequency;
  PosteriorSummary summary_renormalized;
  std::map<std::string, VisitedModel> scores;  // union over chains
  std::string top_model;                       // by the renormalised estimator
  ParameterEstimate estimate;
};

SelectResult run_select(const Dataset& data, const RunConfig& cfg);

/// Writes trace.jsonl, summary.json and the CSV tables into cfg.out_dir.
void write_select_outputs(const SelectResult& r, const RunConfig& cfg);
std::string summary_json(const SelectResult& r, const RunConfig& cfg);

// ---- enumerate ------------------------------------------------------------

struct EnumeratedModel {
  std::string gamma;
  HazardClass hazard;
  double log_ml;
  double log_prior;
  double posterior;
};

/// All models, sorted by posterior descending (ties by key). Models whose fit
/// fails get posterior 0.
std::vector<EnumeratedModel> run_enumerate(const Dataset& data, const RunConfig& cfg);
void write_enumerate_csv(std::ostream& out, const std::vector<EnumeratedModel>& rows);

// ---- simulate -------------------------------------------------------------

std::string truth_json(const SimConfig& sim, double c_admin);
/// Writes the dataset to cfg.sim_out and the truth sidecar next to it
/// (<stem>.truth.json). Returns the sidecar path.
std::string run_simulate(const RunConfig& cfg);

// ---- replicate ------------------------------------------------------------

struct ReplicateRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double censoring = 0.0;  // realised
  std::string hpm;
  HazardClass modal_class = HazardClass::Null;
  double sensitivity = 0.0;
  double specificity = 0.0;
  bool hazard_correct = false;
  double true_class_prob = 0.0;
  Eigen::VectorXd pip;  // any-role inclusion, renormalised estimator
};

struct ReplicateAggregate {
  int ok = 0;
  int failed = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double hazard_accuracy = 0.0;
  double true_class_prob = 0.0;
};

/// Simulate, select and score cfg.replicates datasets. Replicate r uses seed
/// derived from (cfg.chain.seed, r); failures are recorded, not thrown.
std::vector<ReplicateRow> run_replicate(const RunConfig& cfg, std::ostream* log = nullptr);
ReplicateAggregate aggregate(const std::vector<ReplicateRow>& rows);
void write_replicate_csv(std::ostream& out, const std::vector<ReplicateRow>& rows,
                         const RunConfig& cfg);
void write_aggregate_csv(std::ostream& out, const ReplicateAggregate& a, const RunConfig& cfg);

/// Entry point of the ghsel executable.
int run(int argc, char** argv);

}  // namespace ghsel::cli
