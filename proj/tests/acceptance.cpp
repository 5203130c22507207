// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "wxv/ensemble.hpp"
#include "wxv/error.hpp"
#include "wxv/forecaster.hpp"
#include "wxv/metrics.hpp"
#include "wxv/pipeline.hpp"
#include "wxv/stations.hpp"

using namespace wxv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// 1 -------------------------------------------------------------------------
Verdict crps_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> scale(0.1, 10.0), centre(-50.0, 50.0);
  double worst = 0.0, crps_seconds = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double mu = centre(rng), sd = scale(rng);
    std::normal_distribution<double> d(mu, sd);
    std::vector<double> m(static_cast<std::size_t>(size(rng)));
    for (double& x : m) x = d(rng);
    const double y = d(rng);
    const auto t0 = Clock::now();
    const double crps = crps_pointwise(m, y, CrpsVariant::StandardAbsolute);
    crps_seconds += seconds_since(t0);
    worst = std::max(worst, std::abs(crps - wxv::testing::crps_integral_oracle(m, y, 200000)));
  }
  return {worst <= 1e-3 && crps_seconds < 5.0,
          "max |crps - oracle| = " + fmt("%.2e", worst) + ", crps time " + fmt("%.2e", crps_seconds) + " s"};
}

// 2 -------------------------------------------------------------------------
Verdict crps_reductions() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> d(0.0, 20.0);
  std::uniform_int_distribution<int> size(1, 16);
  int bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const double x = d(rng), y = d(rng);
    const std::vector<double> one{x};
    if (crps_pointwise(one, y, CrpsVariant::StandardAbsolute) != std::abs(x - y)) ++bad;

    const std::vector<double> same(static_cast<std::size_t>(size(rng)), x);
    for (CrpsVariant v : {CrpsVariant::StandardAbsolute, CrpsVariant::Squared}) {
      if (crps_terms(same, y, v).spread != 0.0) ++bad;
      if (crps_pointwise(same, x, v) != 0.0) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " violations over 1000 cases"};
}

// 3 -------------------------------------------------------------------------
Verdict weight_normalization() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> hdist(1, 180), wdist(1, 360);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_mean = 0.0, worst_sum = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int h = hdist(rng);
    std::vector<double> lats;
    if (k % 4 == 0) {
      // Regular global grid including both poles.
      for (int i = 0; i < std::max(h, 3); ++i) lats.push_back(-90.0 + 180.0 * i / (std::max(h, 3) - 1));
    } else if (k % 4 == 1) {
      // Rows crowding a pole.
      for (int i = 0; i < h; ++i) lats.push_back(89.0 + 0.999999 * i / h);
    } else {
      std::vector<double> raw(static_cast<std::size_t>(h));
      for (double& x : raw) x = -90.0 + 180.0 * u(rng);
      std::sort(raw.begin(), raw.end());
      raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
      lats = raw;
    }
    const int w = wdist(rng);
    std::vector<double> lons;
    for (int j = 0; j < w; ++j) lons.push_back(360.0 * j / w);
    const GridSpec spec(lats, lons);
    const LatWeights m = lat_weights(spec, WeightMode::MeanOne);
    long double mean = 0.0L;
    for (double x : m.values()) mean += x;
    mean /= static_cast<long double>(spec.height());
    const LatWeights s = lat_weights(spec, WeightMode::SumOne);
    long double total = 0.0L;
    for (double x : s.values()) total += static_cast<long double>(x) * spec.width();
    worst_mean = std::max(worst_mean, static_cast<double>(std::fabs(mean - 1.0L)));
    worst_sum = std::max(worst_sum, static_cast<double>(std::fabs(total - 1.0L)));
  }
  return {worst_mean <= 1e-12 && worst_sum <= 1e-12,
          "max |mean-1| = " + fmt("%.2e", worst_mean) + ", max |total-1| = " + fmt("%.2e", worst_sum)};
}

// 4 -------------------------------------------------------------------------
Verdict loss_reference() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> cdist(1, 4), hdist(1, 16), wdist(1, 32);
  std::normal_distribution<double> d(0.0, 10.0);
  const Variable vars[] = {Variable::t2m, Variable::ws10, Variable::ws100, Variable::sp};
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int c = cdist(rng), h = hdist(rng), w = wdist(rng);
    const GridSpec spec = GridSpec::regular(-80.0, 160.0 / std::max(h, 2), h, 0.0, 360.0 / w, w);
    FieldStack p, t;
    for (int ch = 0; ch < c; ++ch) {
      std::vector<double> a(spec.size()), b(spec.size());
      for (std::size_t i = 0; i < spec.size(); ++i) {
        a[i] = d(rng);
        b[i] = d(rng);
      }
      p.push_back(wxv::testing::make_field(spec, a, vars[ch]));
      t.push_back(wxv::testing::make_field(spec, b, vars[ch]));
    }
    const double got = training_loss(p, t, lat_weights(spec, WeightMode::MeanOne));
    worst = std::max(worst, std::abs(got - wxv::testing::training_loss_reference(p, t)));
  }
  return {worst <= 1e-10, "max |loss - reference| = " + fmt("%.2e", worst)};
}

// 5 -------------------------------------------------------------------------
std::vector<TrainingSample> gradient_dataset(std::mt19937_64& rng) {
  const GridSpec spec = GridSpec::regular(-60.0, 30.0, 5, 0.0, 60.0, 6);
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_int_distribution<int> lead(1, 48);
  std::vector<TrainingSample> out;
  for (int k = 0; k < 4; ++k) {
    TrainingSample s;
    const TimePoint t0 = add_hours(wxv::testing::kInit, 12 * k);
    s.request.target_lead = lead(rng);
    FieldStack now, prev, truth;
    for (Variable v : {Variable::t2m, Variable::ws10}) {
      std::vector<double> a(spec.size()), b(spec.size()), c(spec.size());
      for (std::size_t i = 0; i < spec.size(); ++i) {
        a[i] = 5.0 + 2.0 * d(rng);
        b[i] = a[i] + 0.5 * d(rng);
        c[i] = 5.0 + 2.0 * d(rng);
      }
      now.push_back(wxv::testing::make_field(spec, a, v, 0, t0));
      prev.push_back(wxv::testing::make_field(spec, b, v, 0, add_hours(t0, -6)));
      truth.push_back(wxv::testing::make_field(spec, c, v, s.request.target_lead, t0));
    }
    s.request.history = {now, prev};
    s.truth = truth;
    out.push_back(std::move(s));
  }
  return out;
}

Verdict gradient_check() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> a(0.5, 1.2), b(-0.3, 0.3), l(0.005, 0.1), c(-0.5, 0.5);
  double worst = 0.0;
  int points = 0, reseeds = 0;
  while (points < 20 && reseeds < 200) {
    const auto ds = gradient_dataset(rng);
    const ToyParams params{{Variable::t2m, {a(rng), b(rng), l(rng), c(rng)}},
                           {Variable::ws10, {a(rng), b(rng), l(rng), c(rng)}}};
    const ToyModel model(params, compute_climatology(ds));
    try {
      const GradientReport r =
          check_gradient(model, ds, lat_weights(ds[0].truth[0].spec(), WeightMode::MeanOne));
      worst = std::max(worst, r.max_rel_error);
      ++points;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonSmoothPoint) throw;
      ++reseeds;
    }
  }
  return {points == 20 && worst < 1e-4, std::to_string(points) + " points, " + std::to_string(reseeds) +
                                            " reseeds, max rel error " + fmt("%.2e", worst)};
}

// 6 -------------------------------------------------------------------------
Verdict jensen() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> d(0.0, 1.0);
  int violations = 0;
  double min_gap = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const GridSpec spec = GridSpec::regular(-85.0, 10.0, 18, 0.0, 10.0, 36);
    const LatWeights w = lat_weights(spec, WeightMode::SumOne);
    std::vector<double> tv(spec.size());
    for (double& x : tv) x = 280.0 + 5.0 * d(rng);
    const GridField truth = wxv::testing::make_field(spec, tv);
    Ensemble ens;
    double mean_rmse = 0.0;
    const double bias = d(rng);
    for (int m = 0; m < 10; ++m) {
      std::vector<double> v(spec.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = tv[i] + bias + 2.0 * d(rng);
      ens.members.push_back(wxv::testing::make_field(spec, v));
      mean_rmse += weighted_rmse(ens.members.back(), truth, w) / 10.0;
    }
    const double gap = mean_rmse - weighted_rmse(ensemble_mean(ens), truth, w);
    min_gap = std::min(min_gap, gap);
    if (gap < -1e-12) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations, min(mean member rmse - ensmean rmse) = " +
                               fmt("%.3g", min_gap)};
}

// 7 -------------------------------------------------------------------------
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).generic_string()] = ss.str();
  }
  return out;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "wxv_acceptance_determinism";
  fs::remove_all(root);
  wxv::testing::SyntheticConfig sc;
  sc.grid = GridSpec::regular(-60.0, 10.0, 13, 0.0, 10.0, 36);
  sc.hours = 24 * 5;
  sc.spin_up_hours = 72;
  const wxv::testing::SyntheticAtmosphere atm(sc);
  atm.write_analyses(root / "an", sc.first, add_hours(sc.first, sc.hours));
  const ToyModel toy({{Variable::t2m, {0.9, 0.2, 0.02, 0.1}}},
                     {{Variable::t2m, std::vector<double>(sc.grid.size(), 280.0)}});
  save_toy_model(root / "params.json", toy, atm.analysis(sc.first));

  RunConfig cfg;
  cfg.start_date = "2023-01-02";
  cfg.end_date = "2023-01-03";
  cfg.variables = {Variable::t2m};
  cfg.ic_dir = cfg.reference_path = root / "an";
  cfg.lead_max = 48;
  cfg.model = "toy";
  cfg.model_params = root / "params.json";
  cfg.seed = 20230101;
  cfg.perturbation.n_members = 10;
  cfg.write_members = true;

  std::vector<std::map<std::string, std::string>> runs;
  for (auto [name, threads] : {std::pair{"a", 1u}, {"b", 1u}, {"c", 8u}}) {
    cfg.out = root / name;
    cfg.threads = threads;
    if (cmd_ensemble(cfg).exit_code != 0) return {false, "cmd_ensemble failed"};
    runs.push_back(snapshot(cfg.out));
  }
  fs::remove_all(root);
  const bool same = runs[0] == runs[1] && runs[0] == runs[2];
  return {same && runs[0].size() > 4,
          std::to_string(runs[0].size()) + " files compared, rerun " + (runs[0] == runs[1] ? "identical" : "differs") +
              ", threads 1 vs 8 " + (runs[0] == runs[2] ? "identical" : "differs")};
}

// 8 -------------------------------------------------------------------------
Verdict skill_ordering() {
  const auto t0 = Clock::now();
  const int spacing = 6;
  const int train_inits = 60, eval_inits = 30;
  wxv::testing::SyntheticConfig sc;
  sc.hours = 24 * 56;
  const wxv::testing::SyntheticAtmosphere atm(sc);

  // Training: inits from 12 UTC on the first day, leads 6..120 h.
  std::vector<int> train_leads;
  for (int l = 6; l <= 120; l += 6) train_leads.push_back(l);
  std::vector<TrainingSample> samples;
  for (TimePoint init : wxv::testing::twice_daily(add_hours(sc.first, 12), train_inits)) {
    for (int lead : train_leads) samples.push_back(atm.sample(init, lead, spacing));
  }
  const LatWeights w = lat_weights(sc.grid, WeightMode::MeanOne);
  const TrainResult trained = train_toy({{Variable::t2m, {}}}, samples, w, {0.1, 300, 40});
  const ToyModel& toy = trained.model;
  const PersistenceModel persistence;

  // Evaluation: 30 held-out inits starting after the last training truth.
  const TimePoint eval_start = add_hours(sc.first, 12 + 12 * train_inits + 120);
  const auto inits = wxv::testing::twice_daily(eval_start, eval_inits);
  std::vector<int> leads;
  for (int l = 24; l <= 120; l += 6) leads.push_back(l);
  std::vector<TimePoint> obs_times;
  for (TimePoint t = inits.front(); t <= add_hours(inits.back(), 120); t = add_hours(t, 6)) {
    obs_times.push_back(t);
  }
  const auto records = atm.stations(obs_times, 200, 0.5, 808);
  std::map<TimePoint, std::vector<StationRecord>> by_time;
  for (const auto& r : records) by_time[r.time].push_back(r);

  PerturbationConfig pcfg;
  pcfg.n_members = 10;
  pcfg.correlation_length = 4;
  pcfg.default_amplitude = 1.0;
  ScoreAccumulator det, pers, ens_acc;
  std::uint64_t seed = 8;
  for (TimePoint init : inits) {
    const ForecastRequest req = atm.request(init, leads.front(), spacing);
    for (int lead : leads) {
      ForecastRequest r = req;
      r.target_lead = lead;
      const auto& obs = by_time.at(add_hours(init, lead));
      const MatchResult toy_match = match_forecast(obs, toy.predict(r)[0]);
      const MatchResult pers_match = match_forecast(obs, persistence.predict(r)[0]);
      accumulate_station_errors(toy_match.pairs, det, "rmse");
      accumulate_station_errors(toy_match.pairs, det, "mae");
      accumulate_station_errors(pers_match.pairs, pers, "rmse");
    }
    pcfg.seed = seed++;
    const EnsembleRun run = run_ensemble(toy, req, pcfg, leads);
    for (const auto& [lead, e] : run) {
      const EnsembleRun single{{lead, e}};
      accumulate_ensemble_scores(single, StationTruth{by_time.at(add_hours(init, lead)), {}},
                                 CrpsVariant::StandardAbsolute, ens_acc);
    }
  }
  const ScoreTable d = det.finish();
  const ScoreTable pt = pers.finish();
  const ScoreTable e = ens_acc.finish();
  bool rmse_ok = true, crps_ok = true;
  std::string worst;
  double min_rmse_margin = INFINITY, min_crps_margin = INFINITY;
  for (int lead : leads) {
    const double toy_rmse = d.find({"t2m", lead, "rmse", "stations"})->score;
    const double pers_rmse = pt.find({"t2m", lead, "rmse", "stations"})->score;
    min_rmse_margin = std::min(min_rmse_margin, pers_rmse - toy_rmse);
    if (!(toy_rmse < pers_rmse)) rmse_ok = false;
    if (lead >= 48) {
      const double crps = e.find({"t2m", lead, "crps", "stations"})->score;
      const double mae = d.find({"t2m", lead, "mae", "stations"})->score;
      min_crps_margin = std::min(min_crps_margin, mae - crps);
      if (!(crps <= mae)) crps_ok = false;
    }
  }
  const double elapsed = seconds_since(t0);
  const auto& p = toy.params().at(Variable::t2m);
  std::printf("    toy a=%.4f b=%.4f lambda=%.5f c=%.4f, loss %.4f -> %.4f\n", p.a, p.b, p.lambda, p.c,
              trained.initial_loss, trained.final_loss);
  for (int lead : {24, 48, 72, 96, 120}) {
    std::printf("    lead %3d: persistence rmse %.3f, toy rmse %.3f, toy mae %.3f, ensemble crps %.3f\n", lead,
                pt.find({"t2m", lead, "rmse", "stations"})->score, d.find({"t2m", lead, "rmse", "stations"})->score,
                d.find({"t2m", lead, "mae", "stations"})->score, e.find({"t2m", lead, "crps", "stations"})->score);
  }
  return {rmse_ok && crps_ok && elapsed < 120.0,
          "min(persistence - toy rmse) = " + fmt("%.3f", min_rmse_margin) + ", min(toy mae - crps) = " +
              fmt("%.3f", min_crps_margin) + ", " + fmt("%.1f", elapsed) + " s"};
}

// 9 -------------------------------------------------------------------------
Verdict interpolation() {
  std::mt19937_64 rng(909);
  const GridSpec spec = GridSpec::regular(-75.0, 2.5, 61, -180.0, 2.5, 144);
  std::vector<double> v(spec.size());
  const double c0 = 12.5, cy = -0.37, cx = 0.11;
  for (std::size_t i = 0; i < spec.height(); ++i) {
    for (std::size_t j = 0; j < spec.width(); ++j) v[i * spec.width() + j] = c0 + cy * spec.lat(i) + cx * spec.lon(j);
  }
  const GridField f = wxv::testing::make_field(spec, v);
  std::uniform_real_distribution<double> lat(-75.0, 75.0), lon(-180.0, 177.5);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double y = lat(rng), x = lon(rng);
    worst = std::max(worst, std::abs(value_at_point(f, y, x) - (c0 + cy * y + cx * x)));
  }
  return {worst <= 1e-12, "max error " + fmt("%.2e", worst) + " over 1000 points"};
}

// 10 ------------------------------------------------------------------------
Verdict accumulation() {
  const GridSpec spec = GridSpec::regular(-90.0, 1.0, 181, 0.0, 1.0, 360);
  std::vector<GridField> hourly;
  for (int l = 1; l <= 6; ++l) hourly.push_back(wxv::testing::constant_field(spec, 1.0, Variable::ssrd, l));
  const GridField acc = accumulate(hourly, 6);
  const bool all_six = std::all_of(acc.values().begin(), acc.values().end(), [](double x) { return x == 6.0; });
  return {all_six && acc.variable() == Variable::ssrd6h && acc.lead_hours() == 6,
          std::string(all_six ? "every cell exactly 6" : "cells differ from 6") + ", variable " +
              std::string(to_string(acc.variable()))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 crps oracle equivalence", crps_oracle},
      {"2 crps reductions", crps_reductions},
      {"3 weight normalization", weight_normalization},
      {"4 loss reference equivalence", loss_reference},
      {"5 gradient check", gradient_check},
      {"6 jensen property", jensen},
      {"7 end-to-end determinism", determinism},
      {"8 synthetic skill ordering", skill_ordering},
      {"9 interpolation exactness", interpolation},
      {"10 accumulation", accumulation},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
