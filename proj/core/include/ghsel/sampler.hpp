#pragma once

#include "ghsel/modelspace.hpp"
#include "ghsel/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ghsel {

enum class MoveKind { A_null, AD, AD_GH, Swap, Change, ChangeAll };

inline constexpr int kNumMoves = 6;
std::string_view to_string(MoveKind m);

/// Selection probabilities of every move in state g, indexed by MoveKind.
/// "All equal" states are those in which every variable carries the same code.
std::array<double, kNumMoves> move_probabilities(const Gamma& g);

inline double move_probability(const Gamma& g, MoveKind m) {
  return move_probabilities(g)[static_cast<std::size_t>(m)];
}

/// Source of the discrete choices a proposal makes. The sampler draws from an
/// RNG; the proposal audit enumerates every choice path instead.
class Chooser {
 public:
  virtual ~Chooser() = default;
  /// Uniform index in [0, n).
  virtual int pick(int n) = 0;
  /// Index drawn with the given probabilities (zeros allowed).
  virtual int pick_weighted(std::span<const double> probs) = 0;
};

class RngChooser final : public Chooser {
 public:
  explicit RngChooser(Rng& rng) : rng_(&rng) {}
  int pick(int n) override { return uniform_index(*rng_, n); }
  int pick_weighted(std::span<const double> probs) override;

 private:
  Rng* rng_;
};

struct Proposal {
  Gamma gamma;
  MoveKind move = MoveKind::A_null;
  /// Variables touched, in draw order (j, or j1 and j2 for swaps; empty for change-all).
  std::vector<int> indices;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;

  double log_hastings() const { return log_q_rev - log_q_fwd; }
};

/// Draw order: move, then indices, then new codes.
MoveKind select_move(const Gamma& g, Chooser& ch);
Proposal propose(const Gamma& g, Chooser& ch);
Proposal propose(const Gamma& g, Rng& rng);

/// Log marginal likelihood of a model; -inf marks a failed fit.
using ScoreFn = std::function<double(const Gamma&)>;

struct ChainState {
  Gamma gamma;
  double log_ml = 0.0;
  double log_prior = 0.0;
  long iteration = 0;
};

struct MoveStats {
  std::array<long, kNumMoves> proposed{};
  std::array<long, kNumMoves> accepted{};
  long failed_fits = 0;
};

/// One Metropolis-Hastings update. Proposals whose score is -inf are rejected.
ChainState mh_step(const ChainState& s, const ScoreFn& score, const ModelPriorConfig& prior, Rng& rng,
                   MoveStats* stats = nullptr);

enum class InitMode { Null, Screening, Given };

struct ChainConfig {
  long iterations = 20000;
  long burn_in = 10000;
  long thin = 2;
  int n_chains = 1;
  std::uint64_t seed = 1;
  InitMode init_mode = InitMode::Null;
  std::optional<Gamma> init_gamma;
  int screening_k = 5;
  ModelPriorConfig prior;

  void validate() const;
  long retained() const { return (iterations - burn_in) / thin; }
};

struct TraceRecord {
  long iteration = 0;
  Gamma gamma;
  double log_ml = 0.0;
  double log_prior = 0.0;
};

struct VisitedModel {
  Gamma gamma;
  double log_ml = 0.0;
  double log_prior = 0.0;
};

struct ChainTrace {
  int chain = 0;
  std::vector<TraceRecord> samples;
  /// Every model whose score was requested, keyed by gamma key.
  std::map<std::string, VisitedModel> visited;
  MoveStats stats;
  long iterations = 0;

  double acceptance_rate() const;
};

/// Starting model per the configured init mode. Screening ranks single-variable
/// PH models by their score gain over the Null model and starts from the top k.
Gamma initial_gamma(int p, const ScoreFn& score, const ChainConfig& cfg);

/// Runs one chain; deterministic for (cfg.seed, chain).
ChainTrace run_chain(int p, const ScoreFn& score, const ChainConfig& cfg, int chain = 0);

/// Runs cfg.n_chains chains on separate threads. Results are ordered by chain
/// index. The score function must be thread-safe.
std::vector<ChainTrace> run_chains(int p, const ScoreFn& score, const ChainConfig& cfg,
                                   int max_threads = 0);

}  // namespace ghsel
