#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "support/synthetic.hpp"
#include "wxv/error.hpp"
#include "wxv/gfd.hpp"
#include "wxv/pipeline.hpp"

using namespace wxv;
using wxv::testing::constant_field;
using wxv::testing::make_field;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected wxv::Error");
  return ErrorCode::InvalidData;
}

/// Fresh scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("wxv_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const GridSpec kSpec = GridSpec::regular(-45.0, 15.0, 7, 0.0, 30.0, 12);

void write_forecast(const fs::path& dir, const GridField& f) {
  fs::create_directories(dir);
  write_gfd(dir / forecast_file_name(f.variable(), f.init_time(), f.lead_hours()), f);
}

void write_analysis(const fs::path& dir, const GridField& f) {
  fs::create_directories(dir);
  write_gfd(dir / analysis_file_name(f.variable(), f.valid_time()), f.with_times(f.valid_time(), 0));
}

RunConfig base_config(const fs::path& root, const std::string& start, const std::string& end) {
  RunConfig cfg;
  cfg.start_date = start;
  cfg.end_date = end;
  cfg.variables = {Variable::t2m};
  cfg.forecast_dir = root / "fc";
  cfg.reference_path = root / "an";
  cfg.ic_dir = root / "an";
  cfg.out = root / "out";
  cfg.lead_min = 0;
  cfg.lead_max = 12;
  cfg.lead_stride = 6;
  return cfg;
}

void write_scores(const fs::path& path, const std::string& metric, const std::vector<int>& leads,
                  double base) {
  ScoreTable t;
  for (int lead : leads) t.set({"t2m", lead, metric, "grid"}, {base + lead * 0.01, 10});
  std::ofstream out(path);
  t.write_csv(out);
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("utc timestamps") {
  const TimePoint t = parse_utc("2023-10-01T06:30Z");
  CHECK(format_utc(t) == "2023-10-01T06:30:00Z");
  CHECK(parse_utc("2023-10-01T06:30:00+00:00") == t);
  CHECK(parse_utc("2023-10-01") == parse_utc("2023-10-01T00:00Z"));
  CHECK(format_compact(parse_utc("2023-02-28T18:00Z")) == "2023022818");
  CHECK(hours_between(parse_utc("2023-12-31T18:00Z"), parse_utc("2024-01-01T06:00Z")) == 12);
  CHECK(code_of([] { parse_utc("2023-10-01T06:30+02:00"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { parse_utc("2023-02-30"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { hours_between(parse_utc("2023-10-01T06:30Z"), parse_utc("2023-10-01T07:00Z")); }) ==
        ErrorCode::InvalidData);
}

TEST_CASE("score table csv and json") {
  ScoreTable t;
  t.set({"t2m", 12, "rmse", "grid"}, {1.25, 84});
  t.set({"t2m", 6, "rmse", "grid"}, {0.5, 84});
  t.set({"ws10", 6, "crps", "stations"}, {0.1, 3});
  std::ostringstream csv;
  t.write_csv(csv);
  CHECK(csv.str() ==
        "variable,lead_hours,metric,reference,region,score,n_samples\n"
        "t2m,6,rmse,grid,global,0.5,84\n"
        "t2m,12,rmse,grid,global,1.25,84\n"
        "ws10,6,crps,stations,global,0.1,3\n");
  std::istringstream in(csv.str());
  const ScoreTable back = ScoreTable::read_csv(in);
  CHECK(back.size() == 3);
  CHECK(back.find({"ws10", 6, "crps", "stations"})->score == 0.1);

  std::ostringstream json;
  t.write_json(json);
  const auto j = nlohmann::json::parse(json.str());
  REQUIRE(j.is_array());
  CHECK(j.size() == 3);
  CHECK(j[0]["lead_hours"] == 6);
  CHECK(j[2]["n_samples"] == 3);

  CHECK(code_of([&] { t.set({"t2m", 0, "rmse", "grid"}, {1.0, 0}); }) == ErrorCode::InvalidData);
  CHECK(code_of([&] { t.set({"t2m", 0, "rmse", "grid"}, {-1.0, 2}); }) == ErrorCode::InvalidData);
  std::istringstream bad("variable,lead,metric\n");
  CHECK(code_of([&] { ScoreTable::read_csv(bad); }) == ErrorCode::FormatError);
}

TEST_CASE("pooling over init times") {
  ScoreAccumulator acc;
  const ScoreKey rmse{"t2m", 6, "rmse", "grid"};
  acc.add_mean_square(rmse, 0.0, 100);
  acc.add_mean_square(rmse, 4.0, 100);
  const ScoreKey mae{"t2m", 6, "mae", "grid"};
  acc.add_mean(mae, 1.0, 1);
  acc.add_mean(mae, 4.0, 3);
  const ScoreTable t = acc.finish();
  CHECK(t.find(rmse)->score == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t.find(rmse)->n_samples == 200);
  CHECK(t.find(mae)->score == doctest::Approx(3.25));
  CHECK(code_of([&] { acc.add_mean(rmse, 1.0, 1); }) == ErrorCode::InvalidData);
}

TEST_CASE("config parsing and overrides") {
  RunConfig cfg = config_from_json(R"({
    "init_times": ["06:00", "18:00"], "start_date": "2023-01-01", "end_date": "2023-01-02",
    "variables": ["t2m", "ws10"], "lead_max": 48, "metrics": ["rmse", "mae"],
    "crps_variant": "squared", "interp": "nearest", "periodic_lon": true, "threads": 4,
    "seed": 42, "members": 5, "amplitude": {"t2m": 0.5, "default": 2}, "correlation_length": 0
  })");
  CHECK(cfg.init_times == std::vector<std::string>{"06:00", "18:00"});
  CHECK(cfg.variables == std::vector<Variable>{Variable::t2m, Variable::ws10});
  CHECK(cfg.lead_max == 48);
  CHECK(cfg.crps_variant == CrpsVariant::Squared);
  CHECK(cfg.interp.method == Interp::Nearest);
  CHECK(cfg.interp.periodic_lon);
  CHECK(cfg.threads == 4);
  CHECK(cfg.seed == 42);
  CHECK(cfg.perturbation.n_members == 5);
  CHECK(cfg.perturbation.amplitude_for(Variable::t2m) == 0.5);
  CHECK(cfg.perturbation.amplitude_for(Variable::ws10) == 2.0);
  cfg.validate();

  apply_override(cfg, "lead-stride", "12");
  CHECK(cfg.lead_stride == 12);
  apply_override(cfg, "amplitude", "0.25");
  CHECK(cfg.perturbation.default_amplitude == 0.25);
  CHECK(code_of([&] { apply_override(cfg, "colour", "red"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { apply_override(cfg, "threads", "many"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { config_from_json(R"({"bogus": 1})"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { apply_override(cfg, "variables", "rain"); }) == ErrorCode::UnsupportedVariable);

  RunConfig bad = cfg;
  bad.lead_max = 481;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = cfg;
  bad.variables.clear();
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = cfg;
  bad.init_times = {"24:00"};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("schedule, lead grid and file names") {
  RunConfig cfg;
  cfg.start_date = "2023-01-01";
  cfg.end_date = "2023-01-02";
  const auto inits = init_schedule(cfg);
  REQUIRE(inits.size() == 4);
  CHECK(inits[1] == parse_utc("2023-01-01T12:00Z"));
  CHECK(inits[3] == parse_utc("2023-01-02T12:00Z"));
  CHECK(lead_grid(cfg).size() == 41);
  cfg.end_date = "2022-12-31";
  CHECK(init_schedule(cfg).empty());

  const TimePoint t = parse_utc("2023-07-04T12:00Z");
  CHECK(forecast_file_name(Variable::t2m, t, 6) == "t2m_2023070412_L006.gfd");
  CHECK(analysis_file_name(Variable::ssrd6h, t) == "ssrd6h_2023070412.gfd");
  CHECK(member_file_name(Variable::ws100, 3, 240) == "ws100_m03_L240.gfd");
}

TEST_CASE("cmd_score with a perfect forecast") {
  Scratch s("score_perfect");
  RunConfig cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  cfg.init_times = {"00:00"};
  cfg.metrics = {"rmse", "mae"};
  const TimePoint init = parse_utc("2023-01-01T00:00Z");
  for (int lead : {0, 6, 12}) {
    const GridField f = constant_field(kSpec, 280.0 + lead, Variable::t2m, lead, init);
    write_forecast(cfg.forecast_dir, f);
    write_analysis(cfg.reference_path, f);
  }
  const CommandOutcome out = cmd_score(cfg);
  CHECK(out.exit_code == 0);
  CHECK(out.table.size() == 6);
  for (const auto& [k, v] : out.table.entries()) {
    CHECK(v.score == 0.0);
    CHECK(v.n_samples == kSpec.size());
  }
  CHECK(fs::exists(cfg.out / "scores.csv"));
  CHECK(fs::exists(cfg.out / "scores.json"));
  const auto meta = nlohmann::json::parse(slurp(cfg.out / "metadata.json"));
  CHECK(meta["crps_variant"] == "standard");
  CHECK(meta["interpolation"] == "bilinear");
  CHECK(meta["n_init_times"] == 1);
}

TEST_CASE("cmd_score pools squared errors over inits") {
  Scratch s("score_pool");
  RunConfig cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  cfg.lead_min = cfg.lead_max = 6;
  const TimePoint i0 = parse_utc("2023-01-01T00:00Z"), i1 = parse_utc("2023-01-01T12:00Z");
  write_forecast(cfg.forecast_dir, constant_field(kSpec, 280.0, Variable::t2m, 6, i0));
  write_analysis(cfg.reference_path, constant_field(kSpec, 280.0, Variable::t2m, 6, i0));
  write_forecast(cfg.forecast_dir, constant_field(kSpec, 282.0, Variable::t2m, 6, i1));
  write_analysis(cfg.reference_path, constant_field(kSpec, 280.0, Variable::t2m, 6, i1));
  const CommandOutcome out = cmd_score(cfg);
  REQUIRE(out.exit_code == 0);
  const ScoreValue* v = out.table.find({"t2m", 6, "rmse", "grid"});
  REQUIRE(v != nullptr);
  CHECK(v->score == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(v->n_samples == 2 * kSpec.size());
}

TEST_CASE("cmd_score exit codes") {
  Scratch s("score_empty");
  RunConfig cfg = base_config(s.dir, "2023-01-02", "2023-01-01");
  CommandOutcome out = cmd_score(cfg);
  CHECK(out.exit_code != 0);
  CHECK(out.diagnostic == "no init times in range");

  cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  out = cmd_score(cfg);
  CHECK(out.exit_code != 0);
  CHECK(out.missing == 6);
  CHECK(!fs::exists(cfg.out / "scores.csv"));
}

TEST_CASE("cmd_score against stations") {
  Scratch s("score_stations");
  RunConfig cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  cfg.init_times = {"00:00"};
  cfg.lead_min = cfg.lead_max = 6;
  cfg.reference = ReferenceKind::Stations;
  cfg.reference_path = s.dir / "stations.csv";
  cfg.interp.method = Interp::Nearest;
  const TimePoint init = parse_utc("2023-01-01T00:00Z");
  write_forecast(cfg.forecast_dir, constant_field(kSpec, 280.0, Variable::t2m, 6, init));
  std::ofstream(cfg.reference_path) << "station_id,lat,lon,time,variable,value\n"
                                       "A,0,30,2023-01-01T06:00Z,t2m,283\n"
                                       "B,15,60,2023-01-01T06:00Z,t2m,277\n"
                                       "C,15,60,2023-01-01T07:00Z,t2m,250\n"
                                       "D,80,60,2023-01-01T06:00Z,t2m,250\n";
  const CommandOutcome out = cmd_score(cfg);
  REQUIRE(out.exit_code == 0);
  const ScoreValue* v = out.table.find({"t2m", 6, "rmse", "stations"});
  REQUIRE(v != nullptr);
  CHECK(v->score == 3.0);
  CHECK(v->n_samples == 2);
  const auto meta = nlohmann::json::parse(slurp(cfg.out / "metadata.json"));
  CHECK(meta["interpolation"] == "nearest");
  CHECK(meta["station_out_of_domain_skips"] == 1);
}

TEST_CASE("cmd_score accumulates hourly radiation") {
  Scratch s("score_ssrd");
  RunConfig cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  cfg.init_times = {"00:00"};
  cfg.variables = {Variable::ssrd6h};
  cfg.lead_min = 6;
  cfg.lead_max = 12;
  const TimePoint init = parse_utc("2023-01-01T00:00Z");
  for (int l = 1; l <= 12; ++l) {
    write_forecast(cfg.forecast_dir, constant_field(kSpec, 1000.0, Variable::ssrd, l, init));
  }
  write_analysis(cfg.reference_path, constant_field(kSpec, 6000.0, Variable::ssrd6h, 6, init));
  write_analysis(cfg.reference_path, constant_field(kSpec, 6300.0, Variable::ssrd6h, 12, init));
  const CommandOutcome out = cmd_score(cfg);
  REQUIRE(out.exit_code == 0);
  CHECK(out.table.find({"ssrd6h", 6, "rmse", "grid"})->score == 0.0);
  CHECK(out.table.find({"ssrd6h", 12, "rmse", "grid"})->score == doctest::Approx(300.0));
}

TEST_CASE("cmd_report series") {
  Scratch s("report");
  std::vector<int> leads;
  for (int l = 0; l <= 240; l += 6) leads.push_back(l);
  write_scores(s.dir / "cand.csv", "rmse", leads, 1.0);
  write_scores(s.dir / "base.csv", "rmse", leads, 2.0);

  const CommandOutcome single = cmd_report({{"cand", s.dir / "cand.csv"}}, {}, s.dir / "single");
  CHECK(single.exit_code == 0);
  auto rows = read_csv_rows(s.dir / "single" / "t2m_rmse_grid.csv");
  REQUIRE(rows.size() == 42);
  CHECK(rows[0] == std::vector<std::string>{"lead_hours", "cand"});
  CHECK(fs::exists(s.dir / "single" / "t2m_rmse_grid.svg"));

  cmd_report({{"cand", s.dir / "cand.csv"}}, {{"base", s.dir / "base.csv"}}, s.dir / "pair");
  rows = read_csv_rows(s.dir / "pair" / "t2m_rmse_grid.csv");
  REQUIRE(rows.size() == 42);
  CHECK(rows[0] == std::vector<std::string>{"lead_hours", "cand", "base", "cand-base"});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(std::stoi(rows[r][0]) == leads[r - 1]);
    CHECK(std::stod(rows[r][3]) < 0.0);
  }
  const std::string svg = slurp(s.dir / "pair" / "t2m_rmse_grid.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);

  write_scores(s.dir / "coarse.csv", "rmse", {0, 12, 24}, 1.0);
  CHECK(code_of([&] {
          cmd_report({{"cand", s.dir / "cand.csv"}}, {{"coarse", s.dir / "coarse.csv"}}, s.dir / "bad");
        }) == ErrorCode::LeadGridMismatch);
}

TEST_CASE("persistence ensemble with zero amplitude matches deterministic mae") {
  Scratch s("ens_zero");
  RunConfig cfg = base_config(s.dir, "2023-01-01", "2023-01-01");
  cfg.lead_max = 24;
  cfg.perturbation.default_amplitude = 0.0;
  cfg.perturbation.n_members = 4;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(280.0, 4.0);
  for (int h = 0; h <= 36; h += 6) {
    std::vector<double> v(kSpec.size());
    for (double& x : v) x = d(rng);
    write_analysis(cfg.ic_dir, make_field(kSpec, v, Variable::t2m, 0, add_hours(parse_utc("2023-01-01"), h)));
  }
  // Persistence forecasts as files, for the deterministic score.
  RunConfig fcfg = cfg;
  fcfg.out = cfg.forecast_dir;
  REQUIRE(cmd_forecast(fcfg).exit_code == 0);
  RunConfig scfg = cfg;
  scfg.metrics = {"mae"};
  scfg.out = s.dir / "det";
  const CommandOutcome det = cmd_score(scfg);
  REQUIRE(det.exit_code == 0);
  const CommandOutcome ens = cmd_ensemble(cfg);
  REQUIRE(ens.exit_code == 0);
  for (int lead : lead_grid(cfg)) {
    const double crps = ens.table.find({"t2m", lead, "crps", "grid"})->score;
    const double mae = det.table.find({"t2m", lead, "mae", "grid"})->score;
    CHECK(crps == doctest::Approx(mae).epsilon(1e-12));
  }
}

TEST_CASE("cmd_ensemble matches the module path and is reproducible") {
  Scratch s("ens_toy");
  wxv::testing::SyntheticConfig sc;
  sc.grid = GridSpec::regular(-40.0, 10.0, 9, 0.0, 20.0, 18);
  sc.hours = 24 * 4;
  sc.spin_up_hours = 48;
  const wxv::testing::SyntheticAtmosphere atm(sc);
  atm.write_analyses(s.dir / "an", sc.first, add_hours(sc.first, sc.hours));

  const ToyModel toy({{Variable::t2m, {0.9, 0.1, 0.02, 0.0}}},
                     {{Variable::t2m, std::vector<double>(sc.grid.size(), 280.0)}});
  save_toy_model(s.dir / "params.json", toy, atm.analysis(sc.first));

  RunConfig cfg = base_config(s.dir, "2023-01-02", "2023-01-02");
  cfg.model = "toy";
  cfg.model_params = s.dir / "params.json";
  cfg.lead_max = 24;
  cfg.perturbation.n_members = 2;
  cfg.perturbation.default_amplitude = 0.8;
  cfg.seed = 7;
  cfg.write_members = true;
  const CommandOutcome out = cmd_ensemble(cfg);
  REQUIRE(out.exit_code == 0);
  CHECK(fs::exists(cfg.out / "members" / "2023010200" / "t2m_m01_L024.gfd"));

  const auto manifest = nlohmann::json::parse(slurp(cfg.out / "manifest.json"));
  REQUIRE(manifest["inits"].size() == 2);
  ScoreAccumulator acc;
  for (const auto& entry : manifest["inits"]) {
    const TimePoint init = parse_utc(entry["init_time"].get<std::string>());
    PerturbationConfig pcfg = cfg.perturbation;
    pcfg.seed = entry["perturbation_seed"].get<std::uint64_t>();
    const std::vector<int> leads = lead_grid(cfg);
    const EnsembleRun run = run_ensemble(toy, atm.request(init, 6, 6), pcfg, leads);
    GridTruth truth;
    for (int lead : leads) truth.by_lead[lead] = {atm.analysis(add_hours(init, lead)).with_times(init, lead)};
    accumulate_ensemble_scores(run, truth, CrpsVariant::StandardAbsolute, acc);
  }
  const ScoreTable direct = acc.finish();
  REQUIRE(direct.size() == out.table.size());
  // Analyses pass through float32 files, so allow single-precision rounding.
  for (const auto& [k, v] : direct.entries()) {
    CHECK(out.table.find(k)->score == doctest::Approx(v.score).epsilon(1e-5));
  }

  const std::string csv1 = slurp(cfg.out / "scores.csv");
  const std::string manifest1 = slurp(cfg.out / "manifest.json");
  cfg.threads = 3;
  cmd_ensemble(cfg);
  CHECK(slurp(cfg.out / "scores.csv") == csv1);
  CHECK(slurp(cfg.out / "manifest.json") == manifest1);
}

TEST_CASE("cmd_train writes a loadable model") {
  Scratch s("train");
  wxv::testing::SyntheticConfig sc;
  sc.grid = GridSpec::regular(-40.0, 10.0, 9, 0.0, 20.0, 18);
  sc.hours = 24 * 6;
  sc.spin_up_hours = 48;
  const wxv::testing::SyntheticAtmosphere atm(sc);
  atm.write_analyses(s.dir / "an", sc.first, add_hours(sc.first, sc.hours));
  RunConfig cfg = base_config(s.dir, "2023-01-02", "2023-01-04");
  cfg.lead_min = 6;
  cfg.lead_max = 24;
  cfg.epochs = 40;
  const CommandOutcome out = cmd_train(cfg);
  REQUIRE(out.exit_code == 0);
  const ToyModel m = load_toy_model(cfg.out / "params.json");
  CHECK(m.params().contains(Variable::t2m));
  const auto report = nlohmann::json::parse(slurp(cfg.out / "train_report.json"));
  CHECK(report["final_loss"].get<double>() < report["initial_loss"].get<double>());
}

TEST_CASE("cmd_stations_validate counts") {
  Scratch s("validate");
  const fs::path in = s.dir / "in.csv";
  std::ofstream(in) << "station_id,lat,lon,time,variable,value\n"
                       "A,1,2,2023-01-01T00:00Z,t2m,280\n"
                       "A,1,2,2023-01-01T00:00Z,t2m,281\n"
                       "B,1,2,2023-01-01T00:00Z,t2m,100\n";
  std::ostringstream log;
  const CommandOutcome out = cmd_stations_validate(in, s.dir / "clean.csv", log);
  CHECK(out.exit_code == 0);
  CHECK(out.missing == 2);
  CHECK(log.str().find("rows=3 accepted=1 unparsable=0 implausible=1 duplicates=1") != std::string::npos);
  CHECK(slurp(s.dir / "clean.csv") == "station_id,lat,lon,time,variable,value\nA,1,2,2023-01-01T00:00:00Z,t2m,280\n");
}
