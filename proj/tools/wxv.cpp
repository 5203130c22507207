// wxv: forecast verification and desk-scale forecasting command line.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wxv/error.hpp"
#include "wxv/pipeline.hpp"

namespace {

// Config keys that can be given as `--key value` on any run subcommand.
const std::vector<std::string> kConfigKeys = {
    "init-times",     "start-date",   "end-date",        "lead-min",      "lead-max",
    "lead-stride",    "variables",    "forecast-dir",    "reference",     "reference-path",
    "ic-dir",         "metrics",      "crps-variant",    "interp",        "out",
    "threads",        "seed",         "model",           "model-params",  "history-spacing",
    "members",        "amplitude",    "correlation-length", "learning-rate", "epochs",
};

struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool periodic_lon = false;
  bool write_members = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  for (const auto& key : kConfigKeys) {
    cmd->add_option("--" + key, flags.values[key]);
  }
  cmd->add_flag("--periodic-lon", flags.periodic_lon, "wrap interpolation across the seam");
  cmd->add_flag("--write-members", flags.write_members, "write ensemble member GFD files");
}

wxv::RunConfig build_config(CLI::App* cmd, const RunFlags& flags) {
  wxv::RunConfig cfg;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) wxv::fail(wxv::ErrorCode::IoError, "cannot open config '" + flags.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = wxv::config_from_json(ss.str());
  }
  for (const auto& key : kConfigKeys) {
    if (cmd->count("--" + key) > 0) wxv::apply_override(cfg, key, flags.values.at(key));
  }
  if (flags.periodic_lon) cfg.interp.periodic_lon = true;
  if (flags.write_members) cfg.write_members = true;
  return cfg;
}

std::vector<wxv::NamedScores> parse_named(const std::vector<std::string>& items) {
  std::vector<wxv::NamedScores> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      wxv::fail(wxv::ErrorCode::InvalidConfig, "expected NAME=PATH, got '" + item + "'");
    }
    out.push_back({item.substr(0, eq), item.substr(eq + 1)});
  }
  return out;
}

int finish(const wxv::CommandOutcome& outcome) {
  if (!outcome.diagnostic.empty()) std::cerr << outcome.diagnostic << '\n';
  if (outcome.missing > 0) std::cerr << outcome.missing << " inputs missing or skipped\n";
  for (const auto& p : outcome.written) std::cout << p.string() << '\n';
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast verification toolkit: scoring, reports, ensembles and toy training"};
  app.require_subcommand(1);

  RunFlags score_flags, forecast_flags, ensemble_flags, train_flags;
  auto* score = app.add_subcommand("score", "score forecasts against analyses or stations");
  add_run_flags(score, score_flags);
  auto* forecast = app.add_subcommand("forecast", "write model forecasts for the schedule");
  add_run_flags(forecast, forecast_flags);
  auto* ensemble = app.add_subcommand("ensemble", "run and score a perturbed-IC ensemble");
  add_run_flags(ensemble, ensemble_flags);
  auto* train = app.add_subcommand("train", "fit the toy forecaster on analyses");
  add_run_flags(train, train_flags);

  std::vector<std::string> report_models, report_baselines;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "plot series and charts from score files");
  report->add_option("--model", report_models, "NAME=scores.csv (repeatable)")->required();
  report->add_option("--baseline", report_baselines, "NAME=scores.csv (repeatable)");
  report->add_option("--out", report_out, "output directory");

  std::string stations_in, stations_clean;
  auto* validate = app.add_subcommand("stations-validate", "check a station observation file");
  validate->add_option("file", stations_in, "station CSV")->required();
  validate->add_option("--cleaned", stations_clean, "write accepted rows here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return finish(wxv::cmd_score(build_config(score, score_flags)));
    if (forecast->parsed()) return finish(wxv::cmd_forecast(build_config(forecast, forecast_flags)));
    if (ensemble->parsed()) return finish(wxv::cmd_ensemble(build_config(ensemble, ensemble_flags)));
    if (train->parsed()) return finish(wxv::cmd_train(build_config(train, train_flags)));
    if (report->parsed()) {
      return finish(wxv::cmd_report(parse_named(report_models), parse_named(report_baselines),
                                    report_out));
    }
    if (validate->parsed()) {
      std::optional<std::filesystem::path> cleaned;
      if (!stations_clean.empty()) cleaned = stations_clean;
      return finish(wxv::cmd_stations_validate(stations_in, cleaned, std::cerr));
    }
  } catch (const wxv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
