#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wxv/grid.hpp"

namespace wxv {

/// Past states, newest first (X_t, X_{t-1}, ...), and the lead to predict.
struct ForecastRequest {
  std::vector<FieldStack> history;
  int target_lead = 1;
};

/// Throws InsufficientHistory for an empty history, SpecMismatch when the
/// stacks disagree in grid or variable set, InvalidData when the entries are
/// not newest-first at a uniform spacing, and InvalidStep for target_lead < 1.
void check_request(const ForecastRequest& req);

/// Spacing between consecutive history entries in hours (0 for a single
/// entry).
int history_spacing(const ForecastRequest& req);

/// Maps past states plus a lead time to a predicted stack. Outputs carry the
/// newest state's init time and its lead plus the requested lead.
class ForecastModel {
 public:
  virtual ~ForecastModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t history_length() const = 0;
  virtual bool supports(Variable v) const = 0;

  /// Throws UnsupportedVariable or InsufficientHistory on top of the request
  /// checks.
  FieldStack predict(const ForecastRequest& req) const;

 protected:
  /// Values for variable index `k` of the newest stack at `req.target_lead`.
  virtual std::vector<double> forecast_values(const ForecastRequest& req, std::size_t k) const = 0;
};

class PersistenceModel final : public ForecastModel {
 public:
  std::string name() const override { return "persistence"; }
  std::size_t history_length() const override { return 1; }
  bool supports(Variable) const override { return true; }

 protected:
  std::vector<double> forecast_values(const ForecastRequest& req, std::size_t k) const override;
};

/// Per-cell climatological mean, one entry per variable.
using Climatology = std::map<Variable, std::vector<double>>;

class ClimatologyModel final : public ForecastModel {
 public:
  explicit ClimatologyModel(Climatology clim) : clim_(std::move(clim)) {}

  std::string name() const override { return "climatology"; }
  std::size_t history_length() const override { return 1; }
  bool supports(Variable v) const override { return clim_.contains(v); }

 protected:
  std::vector<double> forecast_values(const ForecastRequest& req, std::size_t k) const override;

 private:
  Climatology clim_;
};

struct ToyCoefficients {
  double a = 1.0;       ///< persistence weight
  double b = 0.0;       ///< tendency weight on X_t - X_{t-1}
  double lambda = 0.0;  ///< lead-time decay rate per hour, >= 0
  double c = 0.0;       ///< bias

  bool operator==(const ToyCoefficients&) const = default;
};

using ToyParams = std::map<Variable, ToyCoefficients>;

/// X = c + e^{-lambda dt} (a X_t + b (X_t - X_{t-1})) + (1 - e^{-lambda dt}) clim
///
/// Relaxes the extrapolated state towards climatology as the lead grows and
/// is continuous in the lead time.
class ToyModel final : public ForecastModel {
 public:
  /// Throws InvalidConfig for non-finite coefficients or negative lambda.
  ToyModel(ToyParams params, Climatology clim);

  std::string name() const override { return "toy"; }
  std::size_t history_length() const override { return 2; }
  bool supports(Variable v) const override { return params_.contains(v) && clim_.contains(v); }

  const ToyParams& params() const noexcept { return params_; }
  const Climatology& climatology() const noexcept { return clim_; }

  /// Continuous-lead evaluation for a single cell; used by training and by
  /// continuity checks with fractional leads.
  static double evaluate(const ToyCoefficients& p, double x_t, double x_prev, double clim,
                         double lead_hours);

 protected:
  std::vector<double> forecast_values(const ForecastRequest& req, std::size_t k) const override;

 private:
  ToyParams params_;
  Climatology clim_;
};

/// Iterates predict(step) and feeds each output back as the newest history
/// entry. Throws InvalidStep unless step >= 1 divides target_lead and, for
/// multi-entry histories, equals the history spacing.
FieldStack rollout(const ForecastModel& model, const ForecastRequest& req, int step);

struct TrainingSample {
  ForecastRequest request;
  FieldStack truth;
};

/// Per-cell mean of the truth fields of every sample, per variable.
Climatology compute_climatology(std::span<const TrainingSample> samples);

enum class LossKind { L1, Squared };

/// Mean over samples of the latitude-weighted loss (MeanOne weights). The L1
/// kind is the training objective; Squared exists for gradient sanity checks.
double dataset_loss(const ToyModel& model, std::span<const TrainingSample> samples,
                    const LatWeights& weights, LossKind kind = LossKind::L1);

/// Analytic (sub)gradient of dataset_loss with respect to every coefficient.
/// The L1 subgradient at a zero residual is 0.
ToyParams loss_gradient(const ToyModel& model, std::span<const TrainingSample> samples,
                        const LatWeights& weights, LossKind kind = LossKind::L1);

struct TrainOptions {
  double learning_rate = 0.1;
  int epochs = 200;
  int max_halvings = 40;
};

struct TrainResult {
  ToyModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int accepted_steps = 0;
  std::vector<double> loss_history;  ///< loss after each accepted step
};

/// Subgradient descent on the latitude-weighted L1 objective. Steps are
/// taken in coordinates rescaled by the RMS sensitivity of the prediction
/// to each coefficient; a step is accepted only if the loss strictly
/// decreases, otherwise the step is halved. Training stops early once no
/// halving yields an improvement. Climatology is computed from the samples'
/// truth fields. Throws TrainingDiverged if the loss is non-finite.
TrainResult train_toy(const ToyParams& init, std::span<const TrainingSample> samples,
                      const LatWeights& weights, const TrainOptions& opts = {});

struct GradientEntry {
  Variable variable;
  std::string parameter;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradientReport {
  std::vector<GradientEntry> entries;
  double max_rel_error = 0.0;
};

/// Compares loss_gradient with central differences of step `h`. Throws
/// NonSmoothPoint when a residual is exactly zero or changes sign inside
/// the difference stencil, since the L1 loss has a kink there.
GradientReport check_gradient(const ToyModel& model, std::span<const TrainingSample> samples,
                              const LatWeights& weights, LossKind kind = LossKind::L1,
                              double h = 1e-5);

/// JSON object keyed by variable id: {"t2m": {"a":..,"b":..,"lambda":..,"c":..}}.
/// When `climatology_files` is given, each entry also names a GFD file.
std::string toy_params_to_json(const ToyParams& params,
                               const std::map<Variable, std::string>& climatology_files = {});
ToyParams toy_params_from_json(const std::string& text,
                               std::map<Variable, std::string>* climatology_files = nullptr);

/// Writes the params JSON plus one `clim_{variable}.gfd` per variable next to it.
void save_toy_model(const std::filesystem::path& params_path, const ToyModel& model,
                    const GridField& template_field);
ToyModel load_toy_model(const std::filesystem::path& params_path);

}  // namespace wxv
