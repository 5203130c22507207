#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "wxv/grid.hpp"

namespace wxv {

/// N single-variable member fields sharing grid, variable and times.
struct Ensemble {
  std::vector<GridField> members;
  std::uint64_t perturbation_seed = 0;
};

/// Throws EmptyEnsemble for N = 0 and SpecMismatch when members disagree.
void check_ensemble(const Ensemble& ens);

enum class CrpsVariant {
  /// (1/N) sum |x_i - y| - (1/2N^2) sum_ij |x_i - x_j|
  StandardAbsolute,
  /// Same two-term form with squared differences.
  Squared,
};

std::string_view to_string(CrpsVariant v);
/// Accepts "standard" and "squared".
CrpsVariant crps_variant_from_string(std::string_view name);

struct CrpsTerms {
  double skill = 0.0;
  double spread = 0.0;
  double value() const noexcept { return skill - spread; }
};

/// Skill and spread terms of the ensemble CRPS at a single location.
/// Throws EmptyEnsemble for no members and InvalidData for non-finite input.
CrpsTerms crps_terms(std::span<const double> members, double obs, CrpsVariant variant);
double crps_pointwise(std::span<const double> members, double obs, CrpsVariant variant);

/// Latitude-weighted mean squared error, sum_cells w (pred - truth)^2, with
/// SumOne weights. Fields must share grid, variable and valid time.
double weighted_mse(const GridField& pred, const GridField& truth, const LatWeights& weights);
double weighted_rmse(const GridField& pred, const GridField& truth, const LatWeights& weights);
double weighted_mae(const GridField& pred, const GridField& truth, const LatWeights& weights);

using PredObs = std::pair<double, double>;

/// Unweighted (w_i = 1) scores over (prediction, observation) pairs.
/// Throw EmptyInput for an empty list.
double point_mse(std::span<const PredObs> pairs);
double point_rmse(std::span<const PredObs> pairs);
double point_mae(std::span<const PredObs> pairs);

/// Per-cell CRPS over members, then the SumOne-weighted spatial mean.
double crps_field(const Ensemble& ens, const GridField& truth, const LatWeights& weights,
                  CrpsVariant variant);

/// (1/(C*H*W)) sum_c sum_i sum_j w_i |pred - truth| with MeanOne weights.
/// Fields are paired by variable; throws SpecMismatch on any shape or
/// variable-set difference.
double training_loss(const FieldStack& pred, const FieldStack& truth, const LatWeights& weights);

/// Element-wise member average, flagged as a derived field.
GridField ensemble_mean(const Ensemble& ens);

}  // namespace wxv
