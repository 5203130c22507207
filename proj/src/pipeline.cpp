#include "wxv/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wxv/error.hpp"
#include "wxv/gfd.hpp"
#include "wxv/parallel.hpp"
#include "wxv/stations.hpp"

namespace wxv {
namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, sep)) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::InvalidConfig, "bad value for '" + key + "': '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text.empty()) return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorCode::InvalidConfig, "bad boolean for '" + key + "': '" + text + "'");
}

std::string json_to_override(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ',';
      out += json_to_override(key, e);
    }
    return out;
  }
  if (v.is_object()) {
    std::string out;
    for (const auto& [k, e] : v.items()) {
      if (!out.empty()) out += ',';
      out += k + ":" + json_to_override(key, e);
    }
    return out;
  }
  fail(ErrorCode::InvalidConfig, "unsupported JSON value for '" + key + "'");
}

int minutes_of_day(const std::string& hhmm) {
  if (hhmm.size() != 5 || hhmm[2] != ':') {
    fail(ErrorCode::InvalidConfig, "init time '" + hhmm + "' is not HH:MM");
  }
  const int h = parse_number<int>("init_times", hhmm.substr(0, 2));
  const int m = parse_number<int>("init_times", hhmm.substr(3, 2));
  if (h < 0 || h > 23 || m < 0 || m > 59) {
    fail(ErrorCode::InvalidConfig, "init time '" + hhmm + "' out of range");
  }
  return h * 60 + m;
}

std::string pad(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, value);
  return buf;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Perturbation seed for one init time, so different inits get
/// independent noise under one run seed.
std::uint64_t init_seed(std::uint64_t seed, TimePoint init) {
  return mix(mix(seed) ^ static_cast<std::uint64_t>(init.time_since_epoch().count()));
}

std::optional<GridField> try_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_gfd(path);
}

void write_text(const std::filesystem::path& path, const std::string& text,
                std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  written.push_back(path);
}

void write_tables(const std::filesystem::path& dir, const ScoreTable& table,
                  const ordered_json& meta, std::vector<std::filesystem::path>& written) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv, json;
  table.write_csv(csv);
  table.write_json(json);
  write_text(dir / "scores.csv", csv.str(), written);
  write_text(dir / "scores.json", json.str(), written);
  write_text(dir / "metadata.json", meta.dump(2) + "\n", written);
}

ordered_json base_metadata(const RunConfig& cfg, const char* command,
                           const std::vector<TimePoint>& inits) {
  ordered_json meta;
  meta["command"] = command;
  meta["crps_variant"] = std::string(to_string(cfg.crps_variant));
  meta["interpolation"] = std::string(to_string(cfg.interp.method));
  meta["periodic_lon"] = cfg.interp.periodic_lon;
  meta["reference"] = cfg.reference == ReferenceKind::Grid ? "grid" : "stations";
  meta["grid_weights"] = "cos(lat) normalized to sum 1 over all cells";
  meta["station_weights"] = "uniform";
  meta["pooling"] = "errors pooled over init times before the square root";
  meta["region"] = "global";
  std::vector<std::string> vars;
  for (Variable v : cfg.variables) vars.emplace_back(to_string(v));
  meta["variables"] = vars;
  meta["n_init_times"] = inits.size();
  if (!inits.empty()) {
    meta["first_init"] = format_utc(inits.front());
    meta["last_init"] = format_utc(inits.back());
  }
  meta["leads"] = lead_grid(cfg);
  return meta;
}

std::unique_ptr<ForecastModel> make_model(const RunConfig& cfg) {
  if (cfg.model == "persistence") return std::make_unique<PersistenceModel>();
  if (cfg.model == "toy" || cfg.model == "climatology") {
    if (cfg.model_params.empty()) fail(ErrorCode::InvalidConfig, "model_params is required");
    ToyModel toy = load_toy_model(cfg.model_params);
    if (cfg.model == "toy") return std::make_unique<ToyModel>(std::move(toy));
    return std::make_unique<ClimatologyModel>(toy.climatology());
  }
  fail(ErrorCode::InvalidConfig, "unknown model '" + cfg.model + "'");
}

/// History [X_t, X_{t-s}, ...] from analyses, or nullopt if a file is missing.
std::optional<ForecastRequest> load_history(const RunConfig& cfg, TimePoint init,
                                            std::size_t length) {
  ForecastRequest req;
  for (std::size_t k = 0; k < length; ++k) {
    const TimePoint t = add_hours(init, -static_cast<long long>(k) * cfg.history_spacing);
    FieldStack stack;
    for (Variable v : cfg.variables) {
      auto f = try_read(cfg.ic_dir / analysis_file_name(v, t));
      if (!f) return std::nullopt;
      // Analyses are stored as lead-0 fields at their valid time.
      stack.push_back(std::move(*f));
    }
    req.history.push_back(std::move(stack));
  }
  return req;
}

struct Partial {
  ScoreKey key;
  bool root;
  double value;
  std::size_t n;
};

struct TaskResult {
  std::vector<Partial> partials;
  std::size_t missing = 0;
  std::size_t station_skips = 0;
};

std::optional<GridField> load_forecast(const RunConfig& cfg, Variable v, TimePoint init, int lead) {
  if (v != Variable::ssrd6h) return try_read(cfg.forecast_dir / forecast_file_name(v, init, lead));
  if (lead < 6) return std::nullopt;
  std::vector<GridField> hourly;
  for (int l = lead - 5; l <= lead; ++l) {
    auto f = try_read(cfg.forecast_dir / forecast_file_name(Variable::ssrd, init, l));
    if (!f) return std::nullopt;
    hourly.push_back(std::move(*f));
  }
  return accumulate(hourly, 6);
}

}  // namespace

void RunConfig::validate() const {
  if (lead_min < 0 || lead_max > 480 || lead_min > lead_max) {
    fail(ErrorCode::InvalidConfig, "lead range must satisfy 0 <= lead_min <= lead_max <= 480");
  }
  if (lead_stride < 1) fail(ErrorCode::InvalidConfig, "lead_stride must be >= 1");
  if (variables.empty()) fail(ErrorCode::InvalidConfig, "no variables configured");
  if (init_times.empty()) fail(ErrorCode::InvalidConfig, "no init times of day configured");
  for (const auto& t : init_times) minutes_of_day(t);
  if (threads < 1) fail(ErrorCode::InvalidConfig, "threads must be >= 1");
  if (history_spacing < 1) fail(ErrorCode::InvalidConfig, "history_spacing must be >= 1");
  for (const auto& m : metrics) {
    if (m != "rmse" && m != "mae") fail(ErrorCode::InvalidConfig, "unknown metric '" + m + "'");
  }
  perturbation.validate();
}

void apply_override(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "init_times") {
    cfg.init_times = split(value, ',');
  } else if (key == "start_date") {
    cfg.start_date = value;
  } else if (key == "end_date") {
    cfg.end_date = value;
  } else if (key == "lead_min") {
    cfg.lead_min = parse_number<int>(key, value);
  } else if (key == "lead_max") {
    cfg.lead_max = parse_number<int>(key, value);
  } else if (key == "lead_stride") {
    cfg.lead_stride = parse_number<int>(key, value);
  } else if (key == "variables") {
    cfg.variables.clear();
    for (const auto& name : split(value, ',')) cfg.variables.push_back(variable_from_string(name));
  } else if (key == "forecast_dir") {
    cfg.forecast_dir = value;
  } else if (key == "reference") {
    if (value == "grid") {
      cfg.reference = ReferenceKind::Grid;
    } else if (value == "stations") {
      cfg.reference = ReferenceKind::Stations;
    } else {
      fail(ErrorCode::InvalidConfig, "reference must be 'grid' or 'stations'");
    }
  } else if (key == "reference_path") {
    cfg.reference_path = value;
  } else if (key == "ic_dir") {
    cfg.ic_dir = value;
  } else if (key == "metrics") {
    cfg.metrics = split(value, ',');
  } else if (key == "crps_variant") {
    cfg.crps_variant = crps_variant_from_string(value);
  } else if (key == "interp") {
    cfg.interp.method = interp_from_string(value);
  } else if (key == "periodic_lon") {
    cfg.interp.periodic_lon = parse_bool(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "threads") {
    cfg.threads = parse_number<unsigned>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "model") {
    cfg.model = value;
  } else if (key == "model_params") {
    cfg.model_params = value;
  } else if (key == "history_spacing") {
    cfg.history_spacing = parse_number<int>(key, value);
  } else if (key == "members") {
    cfg.perturbation.n_members = parse_number<int>(key, value);
  } else if (key == "amplitude") {
    // Either one number for every variable or "var:amp,var:amp".
    if (value.find(':') == std::string::npos) {
      cfg.perturbation.default_amplitude = parse_number<double>(key, value);
    } else {
      for (const auto& item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(ErrorCode::InvalidConfig, "bad amplitude '" + item + "'");
        const std::string name = item.substr(0, colon);
        const double amp = parse_number<double>(key, item.substr(colon + 1));
        if (name == "default") {
          cfg.perturbation.default_amplitude = amp;
        } else {
          cfg.perturbation.amplitude[variable_from_string(name)] = amp;
        }
      }
    }
  } else if (key == "correlation_length") {
    cfg.perturbation.correlation_length = parse_number<int>(key, value);
  } else if (key == "write_members") {
    cfg.write_members = parse_bool(key, value);
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_number<double>(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_number<int>(key, value);
  } else {
    fail(ErrorCode::InvalidConfig, "unknown config key '" + raw_key + "'");
  }
}

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) apply_override(cfg, key, json_to_override(key, value));
  return cfg;
}

std::vector<TimePoint> init_schedule(const RunConfig& cfg) {
  if (cfg.start_date.empty() || cfg.end_date.empty()) {
    fail(ErrorCode::InvalidConfig, "start_date and end_date are required");
  }
  const auto start = std::chrono::floor<std::chrono::days>(parse_utc(cfg.start_date));
  const auto end = std::chrono::floor<std::chrono::days>(parse_utc(cfg.end_date));
  std::vector<int> minutes;
  for (const auto& t : cfg.init_times) minutes.push_back(minutes_of_day(t));
  std::sort(minutes.begin(), minutes.end());
  minutes.erase(std::unique(minutes.begin(), minutes.end()), minutes.end());
  std::vector<TimePoint> out;
  for (auto day = start; day <= end; day += std::chrono::days(1)) {
    for (int m : minutes) out.push_back(TimePoint(day) + std::chrono::minutes(m));
  }
  return out;
}

std::vector<int> lead_grid(const RunConfig& cfg) {
  std::vector<int> out;
  for (int l = cfg.lead_min; l <= cfg.lead_max; l += cfg.lead_stride) out.push_back(l);
  return out;
}

std::string forecast_file_name(Variable v, TimePoint init, int lead) {
  return std::string(to_string(v)) + "_" + format_compact(init) + "_L" + pad(lead, 3) + ".gfd";
}

std::string analysis_file_name(Variable v, TimePoint valid) {
  return std::string(to_string(v)) + "_" + format_compact(valid) + ".gfd";
}

std::string member_file_name(Variable v, int member, int lead) {
  return std::string(to_string(v)) + "_m" + pad(member, 2) + "_L" + pad(lead, 3) + ".gfd";
}

CommandOutcome cmd_score(const RunConfig& cfg) {
  cfg.validate();
  CommandOutcome outcome;
  const auto inits = init_schedule(cfg);
  if (inits.empty()) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no init times in range";
    return outcome;
  }
  const auto leads = lead_grid(cfg);

  StationLoad stations;
  if (cfg.reference == ReferenceKind::Stations) stations = load_stations(cfg.reference_path);

  const std::size_t n_tasks = inits.size() * leads.size();
  std::vector<TaskResult> results(n_tasks);
  parallel_for(n_tasks, cfg.threads, [&](std::size_t task) {
    const TimePoint init = inits[task / leads.size()];
    const int lead = leads[task % leads.size()];
    TaskResult& r = results[task];
    for (Variable v : cfg.variables) {
      const auto forecast = load_forecast(cfg, v, init, lead);
      if (!forecast) {
        ++r.missing;
        continue;
      }
      const std::string var(to_string(v));
      if (cfg.reference == ReferenceKind::Grid) {
        const auto truth = try_read(cfg.reference_path / analysis_file_name(v, forecast->valid_time()));
        if (!truth) {
          ++r.missing;
          continue;
        }
        const LatWeights w = lat_weights(forecast->spec(), WeightMode::SumOne);
        const std::size_t n = forecast->spec().size();
        for (const auto& m : cfg.metrics) {
          if (m == "rmse") {
            r.partials.push_back({{var, lead, "rmse", "grid"}, true, weighted_mse(*forecast, *truth, w), n});
          } else {
            r.partials.push_back({{var, lead, "mae", "grid"}, false, weighted_mae(*forecast, *truth, w), n});
          }
        }
      } else {
        const MatchResult match = match_forecast(stations.records, *forecast, cfg.interp);
        r.station_skips += match.skipped_out_of_domain;
        if (match.pairs.empty()) {
          ++r.missing;
          continue;
        }
        std::vector<PredObs> pairs;
        for (const auto& p : match.pairs) pairs.emplace_back(p.predicted, p.record.value);
        for (const auto& m : cfg.metrics) {
          if (m == "rmse") {
            r.partials.push_back({{var, lead, "rmse", "stations"}, true, point_mse(pairs), pairs.size()});
          } else {
            r.partials.push_back({{var, lead, "mae", "stations"}, false, point_mae(pairs), pairs.size()});
          }
        }
      }
    }
  });

  ScoreAccumulator acc;
  std::size_t station_skips = 0;
  for (const auto& r : results) {
    outcome.missing += r.missing;
    station_skips += r.station_skips;
    if (!r.partials.empty()) ++outcome.scored_chunks;
    for (const auto& p : r.partials) {
      if (p.root) {
        acc.add_mean_square(p.key, p.value, p.n);
      } else {
        acc.add_mean(p.key, p.value, p.n);
      }
    }
  }
  if (acc.empty()) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no scoreable forecast/reference pairs (" +
                         std::to_string(outcome.missing) + " missing)";
    return outcome;
  }
  outcome.table = acc.finish();

  ordered_json meta = base_metadata(cfg, "score", inits);
  meta["missing"] = outcome.missing;
  if (cfg.reference == ReferenceKind::Stations) {
    meta["station_rows"] = stations.total_rows;
    meta["station_rejects"] = stations.rejected();
    meta["station_out_of_domain_skips"] = station_skips;
  }
  write_tables(cfg.out, outcome.table, meta, outcome.written);
  return outcome;
}

CommandOutcome cmd_forecast(const RunConfig& cfg) {
  cfg.validate();
  CommandOutcome outcome;
  const auto inits = init_schedule(cfg);
  const auto model = make_model(cfg);
  std::filesystem::create_directories(cfg.out);
  for (TimePoint init : inits) {
    const auto req = load_history(cfg, init, model->history_length());
    if (!req) {
      ++outcome.missing;
      continue;
    }
    for (int lead : lead_grid(cfg)) {
      FieldStack stack;
      if (lead == 0) {
        stack = req->history.front();
      } else {
        ForecastRequest r = *req;
        r.target_lead = lead;
        stack = model->predict(r);
      }
      for (const auto& f : stack) {
        const auto path = cfg.out / forecast_file_name(f.variable(), init, lead);
        write_gfd(path, f.with_times(init, lead));
        outcome.written.push_back(path);
      }
    }
    ++outcome.scored_chunks;
  }
  if (outcome.scored_chunks == 0) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no init time had the required analyses";
  }
  return outcome;
}

CommandOutcome cmd_ensemble(const RunConfig& cfg) {
  cfg.validate();
  CommandOutcome outcome;
  const auto inits = init_schedule(cfg);
  if (inits.empty()) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no init times in range";
    return outcome;
  }
  const auto leads = lead_grid(cfg);
  const auto model = make_model(cfg);

  StationLoad stations;
  if (cfg.reference == ReferenceKind::Stations) stations = load_stations(cfg.reference_path);

  ScoreAccumulator acc;
  ordered_json manifest;
  manifest["seed"] = cfg.seed;
  manifest["n_members"] = cfg.perturbation.n_members;
  manifest["correlation_length"] = cfg.perturbation.correlation_length;
  manifest["default_amplitude"] = cfg.perturbation.default_amplitude;
  ordered_json amps = ordered_json::object();
  for (const auto& [v, a] : cfg.perturbation.amplitude) amps[std::string(to_string(v))] = a;
  manifest["amplitude"] = amps;
  manifest["model"] = cfg.model;
  manifest["control_member"] = 0;
  manifest["inits"] = ordered_json::array();

  for (TimePoint init : inits) {
    const auto req = load_history(cfg, init, model->history_length());
    if (!req) {
      ++outcome.missing;
      continue;
    }
    PerturbationConfig pcfg = cfg.perturbation;
    pcfg.seed = init_seed(cfg.seed, init);
    const EnsembleRun run = run_ensemble(*model, *req, pcfg, leads, cfg.threads);

    if (cfg.reference == ReferenceKind::Grid) {
      GridTruth truth;
      for (int lead : leads) {
        FieldStack stack;
        for (Variable v : cfg.variables) {
          auto f = try_read(cfg.reference_path / analysis_file_name(v, add_hours(init, lead)));
          if (f) stack.push_back(f->with_times(init, lead));
        }
        if (!stack.empty()) truth.by_lead.emplace(lead, std::move(stack));
      }
      outcome.missing += accumulate_ensemble_scores(run, truth, cfg.crps_variant, acc);
    } else {
      outcome.missing += accumulate_ensemble_scores(
          run, StationTruth{stations.records, cfg.interp}, cfg.crps_variant, acc);
    }
    ++outcome.scored_chunks;

    ordered_json entry;
    entry["init_time"] = format_utc(init);
    entry["perturbation_seed"] = pcfg.seed;
    if (cfg.write_members) {
      const auto dir = cfg.out / "members" / format_compact(init);
      std::filesystem::create_directories(dir);
      ordered_json files = ordered_json::array();
      for (const auto& [lead, ens] : run) {
        for (std::size_t m = 0; m < ens.members.size(); ++m) {
          for (const auto& f : ens.members[m]) {
            const std::string name = member_file_name(f.variable(), static_cast<int>(m), lead);
            write_gfd(dir / name, f.with_times(init, lead));
            outcome.written.push_back(dir / name);
            files.push_back(format_compact(init) + "/" + name);
          }
        }
      }
      entry["members"] = files;
    }
    manifest["inits"].push_back(entry);
  }

  if (acc.empty()) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no scoreable ensemble/reference pairs (" +
                         std::to_string(outcome.missing) + " missing)";
    return outcome;
  }
  outcome.table = acc.finish();
  ordered_json meta = base_metadata(cfg, "ensemble", inits);
  meta["missing"] = outcome.missing;
  meta["n_members"] = cfg.perturbation.n_members;
  meta["seed"] = cfg.seed;
  meta["model"] = cfg.model;
  write_tables(cfg.out, outcome.table, meta, outcome.written);
  write_text(cfg.out / "manifest.json", manifest.dump(2) + "\n", outcome.written);
  return outcome;
}

CommandOutcome cmd_train(const RunConfig& cfg) {
  cfg.validate();
  CommandOutcome outcome;
  const auto inits = init_schedule(cfg);
  std::vector<TrainingSample> samples;
  for (TimePoint init : inits) {
    const auto req = load_history(cfg, init, 2);
    if (!req) {
      ++outcome.missing;
      continue;
    }
    for (int lead : lead_grid(cfg)) {
      if (lead < 1) continue;
      FieldStack truth;
      for (Variable v : cfg.variables) {
        auto f = try_read(cfg.ic_dir / analysis_file_name(v, add_hours(init, lead)));
        if (!f) break;
        truth.push_back(f->with_times(init, lead));
      }
      if (truth.size() != cfg.variables.size()) {
        ++outcome.missing;
        continue;
      }
      ForecastRequest r = *req;
      r.target_lead = lead;
      samples.push_back({std::move(r), std::move(truth)});
    }
  }
  if (samples.empty()) {
    outcome.exit_code = 1;
    outcome.diagnostic = "no training samples could be assembled";
    return outcome;
  }
  ToyParams init_params;
  if (!cfg.model_params.empty() && std::filesystem::exists(cfg.model_params)) {
    init_params = load_toy_model(cfg.model_params).params();
  }
  for (Variable v : cfg.variables) init_params.try_emplace(v);

  const GridField& ref = samples.front().truth.front();
  const LatWeights w = lat_weights(ref.spec(), WeightMode::MeanOne);
  TrainOptions opts;
  opts.learning_rate = cfg.learning_rate;
  opts.epochs = cfg.epochs;
  const TrainResult result = train_toy(init_params, samples, w, opts);

  std::filesystem::create_directories(cfg.out);
  const auto params_path = cfg.out / "params.json";
  save_toy_model(params_path, result.model, ref);
  outcome.written.push_back(params_path);
  ordered_json report;
  report["samples"] = samples.size();
  report["initial_loss"] = result.initial_loss;
  report["final_loss"] = result.final_loss;
  report["accepted_steps"] = result.accepted_steps;
  write_text(cfg.out / "train_report.json", report.dump(2) + "\n", outcome.written);
  outcome.scored_chunks = samples.size();
  outcome.diagnostic = "loss " + format_number(result.initial_loss) + " -> " +
                       format_number(result.final_loss);
  return outcome;
}

CommandOutcome cmd_stations_validate(const std::filesystem::path& input,
                                     const std::optional<std::filesystem::path>& cleaned,
                                     std::ostream& log) {
  CommandOutcome outcome;
  const StationLoad load = load_stations(input);
  for (const auto& d : load.diagnostics) log << d << '\n';
  log << "rows=" << load.total_rows << " accepted=" << load.records.size()
      << " unparsable=" << load.unparsable << " implausible=" << load.implausible
      << " duplicates=" << load.duplicates << '\n';
  if (cleaned) {
    std::ostringstream ss;
    write_stations(ss, load.records);
    write_text(*cleaned, ss.str(), outcome.written);
  }
  outcome.scored_chunks = load.records.size();
  outcome.missing = load.rejected();
  return outcome;
}

}  // namespace wxv
