#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "wxv/forecaster.hpp"
#include "wxv/metrics.hpp"
#include "wxv/score_table.hpp"
#include "wxv/stations.hpp"

namespace wxv {

struct PerturbationConfig {
  /// Noise standard deviation per variable in canonical units; variables
  /// without an entry use `default_amplitude`.
  std::map<Variable, double> amplitude;
  double default_amplitude = 1.0;
  /// Box-filter width in grid cells; 0 or 1 gives white noise.
  int correlation_length = 4;
  std::uint64_t seed = 0;
  int n_members = 10;

  double amplitude_for(Variable v) const;
  /// Throws InvalidConfig on negative amplitudes or correlation length, or
  /// n_members < 1.
  void validate() const;
};

/// Member 0 is the unperturbed control. Member k > 0 adds zero-mean Gaussian
/// noise with the configured per-cell standard deviation: white noise is
/// summed over a box window and divided by the square root of the window
/// size, so every cell keeps the configured variance. The noise stream is a
/// hash of (seed, member, variable) and does not depend on other members.
FieldStack perturb_ic(const FieldStack& ic, const PerturbationConfig& cfg, int member);

/// Member stacks at one lead time, index = member id.
struct StackEnsemble {
  std::vector<FieldStack> members;
  std::uint64_t perturbation_seed = 0;

  /// Single-variable view for the metrics.
  Ensemble select(Variable v) const;
};

using EnsembleRun = std::map<int, StackEnsemble>;

/// Perturbs the request's history (the same noise is added to every history
/// entry of a member) and propagates each member independently with a
/// direct forecast to every lead. Lead 0 yields the perturbed state itself.
/// Model errors are rethrown with the member id in the message.
EnsembleRun run_ensemble(const ForecastModel& model, const ForecastRequest& ic,
                         const PerturbationConfig& cfg, std::span<const int> leads,
                         unsigned threads = 1);

/// Gridded truth keyed by lead hours (valid at init + lead).
struct GridTruth {
  std::map<int, FieldStack> by_lead;
};

struct StationTruth {
  std::span<const StationRecord> records;
  PointOptions extraction;
};

using TruthSource = std::variant<GridTruth, StationTruth>;

struct EnsembleEvaluation {
  ScoreTable table;
  std::size_t missing_truth = 0;
};

/// Adds `rmse_ensmean` (mean squares) and `crps` (means) partials to `acc`.
/// Returns how many (lead, variable) combinations had no truth.
std::size_t accumulate_ensemble_scores(const EnsembleRun& run, const TruthSource& truth,
                                       CrpsVariant variant, ScoreAccumulator& acc);

/// Per-lead `rmse_ensmean` and `crps` entries. Grid truth uses SumOne
/// latitude weights (reference "grid"); station truth extracts each member
/// at the station points and averages uniformly (reference "stations").
EnsembleEvaluation evaluate_ensemble(const EnsembleRun& run, const TruthSource& truth,
                                     CrpsVariant variant);

}  // namespace wxv
