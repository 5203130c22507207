#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wxv/ensemble.hpp"
#include "wxv/metrics.hpp"
#include "wxv/score_table.hpp"

namespace wxv {

enum class ReferenceKind { Grid, Stations };

/// Settings shared by the command-line subcommands. Loaded from a JSON
/// object whose keys are the field names below; command-line flags override
/// individual keys.
struct RunConfig {
  std::vector<std::string> init_times{"00:00", "12:00"};  ///< UTC times of day
  std::string start_date;                                  ///< YYYY-MM-DD, inclusive
  std::string end_date;                                    ///< YYYY-MM-DD, inclusive
  int lead_min = 0;
  int lead_max = 240;
  int lead_stride = 6;
  std::vector<Variable> variables;

  std::filesystem::path forecast_dir;
  ReferenceKind reference = ReferenceKind::Grid;
  std::filesystem::path reference_path;  ///< analysis dir or station CSV
  std::filesystem::path ic_dir;          ///< analyses used as initial conditions
  std::vector<std::string> metrics{"rmse"};
  CrpsVariant crps_variant = CrpsVariant::StandardAbsolute;
  PointOptions interp;
  std::filesystem::path out = "out";
  unsigned threads = 1;
  std::uint64_t seed = 0;

  std::string model = "persistence";  ///< persistence | climatology | toy
  std::filesystem::path model_params;  ///< toy params JSON
  int history_spacing = 6;             ///< hours between X_t and X_{t-1}

  PerturbationConfig perturbation;
  bool write_members = false;

  double learning_rate = 0.05;
  int epochs = 300;

  /// Throws InvalidConfig when a field is out of range.
  void validate() const;
};

/// Reads a JSON config object. Unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
/// Applies one `key=value` override using the JSON key names (dashes are
/// accepted in place of underscores). List values are comma separated.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Init times from the date range and times-of-day, ascending.
std::vector<TimePoint> init_schedule(const RunConfig& cfg);
std::vector<int> lead_grid(const RunConfig& cfg);

/// `{variable}_{YYYYMMDDHH init}_L{lead:03}.gfd`
std::string forecast_file_name(Variable v, TimePoint init, int lead);
/// `{variable}_{YYYYMMDDHH valid}.gfd`
std::string analysis_file_name(Variable v, TimePoint valid);
/// `{variable}_m{member:02}_L{lead:03}.gfd`
std::string member_file_name(Variable v, int member, int lead);

struct CommandOutcome {
  int exit_code = 0;
  std::string diagnostic;
  ScoreTable table;
  std::size_t scored_chunks = 0;
  std::size_t missing = 0;
  std::vector<std::filesystem::path> written;
};

/// Scores forecasts in `forecast_dir` against gridded analyses or station
/// observations. Errors are pooled over init times before the square root.
/// `ssrd6h` forecasts are accumulated from six hourly `ssrd` files.
/// Writes scores.csv, scores.json and metadata.json into `out`.
CommandOutcome cmd_score(const RunConfig& cfg);

/// Writes model forecasts for the schedule into `out` using forecast file
/// names, so that `score` can consume them.
CommandOutcome cmd_forecast(const RunConfig& cfg);

/// Runs the perturbed ensemble for every init time and pools
/// `rmse_ensmean` and `crps` over inits. Writes scores, metadata and
/// (with write_members) member GFD files plus manifest.json.
CommandOutcome cmd_ensemble(const RunConfig& cfg);

/// Fits the toy model on analyses in `ic_dir` and writes params.json with
/// climatology files into `out`.
CommandOutcome cmd_train(const RunConfig& cfg);

struct NamedScores {
  std::string name;
  std::filesystem::path path;
};

/// Per (variable, metric, reference, region) plot series: one CSV with a
/// score column per model and `<candidate>-<baseline>` difference columns,
/// plus an SVG line chart. Throws LeadGridMismatch when models disagree on
/// the lead grid of a series.
CommandOutcome cmd_report(const std::vector<NamedScores>& candidates,
                          const std::vector<NamedScores>& baselines,
                          const std::filesystem::path& out);

/// Loads a station file and reports counts; optionally writes the accepted
/// records back out.
CommandOutcome cmd_stations_validate(const std::filesystem::path& input,
                                     const std::optional<std::filesystem::path>& cleaned,
                                     std::ostream& log);

}  // namespace wxv
