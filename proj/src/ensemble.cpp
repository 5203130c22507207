#include "wxv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "wxv/error.hpp"
#include "wxv/parallel.hpp"
#include "wxv/summation.hpp"

namespace wxv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, int member, Variable v) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(member));
  return splitmix64(h ^ (static_cast<std::uint64_t>(v) + 0x100));
}

/// Unit-variance noise smoothed by a width x width box; each cell is divided
/// by sqrt(cells in its truncated window).
std::vector<double> correlated_noise(std::size_t height, std::size_t width, int box,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(height * width);
  for (double& x : white) x = normal(rng);
  if (box <= 1) return white;

  // Summed-area table with a zero border.
  const std::size_t w1 = width + 1;
  std::vector<double> sat((height + 1) * w1, 0.0);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      sat[(i + 1) * w1 + j + 1] = white[i * width + j] + sat[i * w1 + j + 1] +
                                  sat[(i + 1) * w1 + j] - sat[i * w1 + j];
    }
  }
  const long before = (box - 1) / 2;
  const long after = box - 1 - before;
  const auto clamp = [](long x, long hi) { return static_cast<std::size_t>(std::clamp(x, 0L, hi)); };
  std::vector<double> out(height * width);
  for (std::size_t i = 0; i < height; ++i) {
    const std::size_t i0 = clamp(static_cast<long>(i) - before, static_cast<long>(height));
    const std::size_t i1 = clamp(static_cast<long>(i) + after + 1, static_cast<long>(height));
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t j0 = clamp(static_cast<long>(j) - before, static_cast<long>(width));
      const std::size_t j1 = clamp(static_cast<long>(j) + after + 1, static_cast<long>(width));
      const double sum = sat[i1 * w1 + j1] - sat[i0 * w1 + j1] - sat[i1 * w1 + j0] + sat[i0 * w1 + j0];
      const double count = static_cast<double>((i1 - i0) * (j1 - j0));
      out[i * width + j] = sum / std::sqrt(count);
    }
  }
  return out;
}

std::string strip_code(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

double PerturbationConfig::amplitude_for(Variable v) const {
  const auto it = amplitude.find(v);
  return it == amplitude.end() ? default_amplitude : it->second;
}

void PerturbationConfig::validate() const {
  if (n_members < 1) fail(ErrorCode::InvalidConfig, "n_members must be >= 1");
  if (correlation_length < 0) fail(ErrorCode::InvalidConfig, "correlation_length must be >= 0");
  if (!(default_amplitude >= 0.0)) fail(ErrorCode::InvalidConfig, "amplitude must be >= 0");
  for (const auto& [v, a] : amplitude) {
    if (!(a >= 0.0) || !std::isfinite(a)) fail(ErrorCode::InvalidConfig, "amplitude must be >= 0");
  }
}

FieldStack perturb_ic(const FieldStack& ic, const PerturbationConfig& cfg, int member) {
  cfg.validate();
  if (member < 0 || member >= cfg.n_members) {
    fail(ErrorCode::InvalidConfig, "member index " + std::to_string(member) + " out of range");
  }
  if (member == 0) return ic;
  FieldStack out;
  out.reserve(ic.size());
  for (const auto& f : ic) {
    const double amp = cfg.amplitude_for(f.variable());
    if (amp == 0.0) {
      out.push_back(f);
      continue;
    }
    std::mt19937_64 rng(stream_seed(cfg.seed, member, f.variable()));
    const auto noise = correlated_noise(f.spec().height(), f.spec().width(),
                                        cfg.correlation_length, rng);
    std::vector<double> values(f.values().begin(), f.values().end());
    for (std::size_t c = 0; c < values.size(); ++c) values[c] += amp * noise[c];
    out.push_back(f.with_values(std::move(values)));
  }
  return out;
}

Ensemble StackEnsemble::select(Variable v) const {
  Ensemble out;
  out.perturbation_seed = perturbation_seed;
  out.members.reserve(members.size());
  for (const auto& m : members) {
    const GridField* f = find_field(m, v);
    if (f == nullptr) fail(ErrorCode::UnsupportedVariable, "ensemble lacks " + std::string(to_string(v)));
    out.members.push_back(*f);
  }
  return out;
}

EnsembleRun run_ensemble(const ForecastModel& model, const ForecastRequest& ic,
                         const PerturbationConfig& cfg, std::span<const int> leads,
                         unsigned threads) {
  cfg.validate();
  check_request(ic);
  for (int lead : leads) {
    if (lead < 0) fail(ErrorCode::InvalidStep, "negative lead time");
  }
  const std::size_t n = static_cast<std::size_t>(cfg.n_members);
  // trajectories[member][lead index]
  std::vector<std::vector<FieldStack>> trajectories(n);
  parallel_for(n, threads, [&](std::size_t m) {
    const int member = static_cast<int>(m);
    try {
      ForecastRequest req;
      req.history.reserve(ic.history.size());
      const FieldStack perturbed_newest = perturb_ic(ic.history.front(), cfg, member);
      req.history.push_back(perturbed_newest);
      for (std::size_t h = 1; h < ic.history.size(); ++h) {
        const FieldStack& stack = ic.history[h];
        // Older entries get the same noise as the newest one.
        FieldStack shifted;
        for (const auto& f : stack) {
          const GridField* pn = find_field(perturbed_newest, f.variable());
          const GridField* on = find_field(ic.history.front(), f.variable());
          std::vector<double> values(f.values().begin(), f.values().end());
          for (std::size_t c = 0; c < values.size(); ++c) {
            values[c] += pn->values()[c] - on->values()[c];
          }
          shifted.push_back(f.with_values(std::move(values)));
        }
        req.history.push_back(std::move(shifted));
      }
      auto& out = trajectories[m];
      out.reserve(leads.size());
      for (int lead : leads) {
        if (lead == 0) {
          out.push_back(req.history.front());
          continue;
        }
        req.target_lead = lead;
        out.push_back(model.predict(req));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "member " + std::to_string(member) + ": " + strip_code(e));
    }
  });

  EnsembleRun run;
  for (std::size_t l = 0; l < leads.size(); ++l) {
    StackEnsemble& ens = run[leads[l]];
    ens.perturbation_seed = cfg.seed;
    ens.members.clear();
    for (std::size_t m = 0; m < n; ++m) ens.members.push_back(trajectories[m][l]);
  }
  return run;
}

namespace {

std::size_t accumulate_grid(const EnsembleRun& run, const GridTruth& truth, CrpsVariant variant,
                            ScoreAccumulator& acc) {
  std::size_t missing = 0;
  for (const auto& [lead, ens] : run) {
    if (ens.members.empty()) fail(ErrorCode::EmptyEnsemble, "no members at lead " + std::to_string(lead));
    const auto it = truth.by_lead.find(lead);
    for (const auto& f : ens.members.front()) {
      const GridField* t = it == truth.by_lead.end() ? nullptr : find_field(it->second, f.variable());
      if (t == nullptr) {
        ++missing;
        continue;
      }
      const Ensemble single = ens.select(f.variable());
      const LatWeights w = lat_weights(t->spec(), WeightMode::SumOne);
      const std::string var(to_string(f.variable()));
      const std::size_t n = t->spec().size();
      acc.add_mean_square({var, lead, "rmse_ensmean", "grid"},
                          weighted_mse(ensemble_mean(single), *t, w), n);
      acc.add_mean({var, lead, "crps", "grid"}, crps_field(single, *t, w, variant), n);
    }
  }
  return missing;
}

std::size_t accumulate_stations(const EnsembleRun& run, const StationTruth& truth,
                                CrpsVariant variant, ScoreAccumulator& acc) {
  std::size_t missing = 0;
  for (const auto& [lead, ens] : run) {
    if (ens.members.empty()) fail(ErrorCode::EmptyEnsemble, "no members at lead " + std::to_string(lead));
    for (const auto& f : ens.members.front()) {
      const Ensemble single = ens.select(f.variable());
      const MatchResult mean_match =
          match_forecast(truth.records, ensemble_mean(single), truth.extraction);
      if (mean_match.pairs.empty()) {
        ++missing;
        continue;
      }
      std::vector<MatchResult> per_member;
      per_member.reserve(single.members.size());
      for (const auto& m : single.members) {
        per_member.push_back(match_forecast(truth.records, m, truth.extraction));
      }
      const std::size_t n_pairs = mean_match.pairs.size();
      std::vector<PredObs> mean_pairs;
      std::vector<double> crps(n_pairs);
      std::vector<double> column(single.members.size());
      for (std::size_t p = 0; p < n_pairs; ++p) {
        const double obs = mean_match.pairs[p].record.value;
        mean_pairs.emplace_back(mean_match.pairs[p].predicted, obs);
        for (std::size_t k = 0; k < column.size(); ++k) column[k] = per_member[k].pairs[p].predicted;
        crps[p] = crps_pointwise(column, obs, variant);
      }
      const std::string var(to_string(f.variable()));
      acc.add_mean_square({var, lead, "rmse_ensmean", "stations"}, point_mse(mean_pairs), n_pairs);
      acc.add_mean({var, lead, "crps", "stations"},
                   compensated_sum(crps) / static_cast<double>(n_pairs), n_pairs);
    }
  }
  return missing;
}

}  // namespace

std::size_t accumulate_ensemble_scores(const EnsembleRun& run, const TruthSource& truth,
                                       CrpsVariant variant, ScoreAccumulator& acc) {
  if (const auto* g = std::get_if<GridTruth>(&truth)) return accumulate_grid(run, *g, variant, acc);
  return accumulate_stations(run, std::get<StationTruth>(truth), variant, acc);
}

EnsembleEvaluation evaluate_ensemble(const EnsembleRun& run, const TruthSource& truth,
                                     CrpsVariant variant) {
  ScoreAccumulator acc;
  EnsembleEvaluation out;
  out.missing_truth = accumulate_ensemble_scores(run, truth, variant, acc);
  out.table = acc.finish();
  return out;
}

}  // namespace wxv
