#include "wxv/forecaster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wxv/error.hpp"
#include "wxv/gfd.hpp"
#include "wxv/metrics.hpp"
#include "wxv/summation.hpp"

namespace wxv {
namespace {

constexpr std::array<const char*, 4> kCoefficientNames{"a", "b", "lambda", "c"};

double& coefficient(ToyCoefficients& p, std::size_t k) {
  switch (k) {
    case 0: return p.a;
    case 1: return p.b;
    case 2: return p.lambda;
    default: return p.c;
  }
}

void check_coefficients(const ToyParams& params) {
  for (const auto& [v, p] : params) {
    if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.lambda) ||
        !std::isfinite(p.c)) {
      fail(ErrorCode::InvalidConfig, "non-finite toy coefficient for " + std::string(to_string(v)));
    }
    if (p.lambda < 0.0) {
      fail(ErrorCode::InvalidConfig, "negative lambda for " + std::string(to_string(v)));
    }
  }
}

/// One cell of one sample, with everything the loss and its derivatives need.
struct CellTerm {
  Variable variable;
  double x_t;
  double x_prev;
  double clim;
  double truth;
  double lead;
  double weight;  ///< latitude weight divided by (samples * C * H * W)
};

/// Calls fn(CellTerm) for every predicted cell of every sample, in a fixed
/// order (sample, variable, row, column).
template <typename Fn>
void for_each_cell(const ToyModel& model, std::span<const TrainingSample> samples,
                   const LatWeights& weights, Fn&& fn) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "empty training dataset");
  if (weights.mode() != WeightMode::MeanOne) {
    fail(ErrorCode::SpecMismatch, "training needs MeanOne latitude weights");
  }
  const double n_samples = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    check_request(s.request);
    if (s.request.history.size() < 2) {
      fail(ErrorCode::InsufficientHistory, "toy model needs two history entries");
    }
    const FieldStack& newest = s.request.history[0];
    const FieldStack& prev = s.request.history[1];
    const GridSpec& spec = newest.front().spec();
    if (!weights.matches(spec)) fail(ErrorCode::SpecMismatch, "weights do not match grid");
    const double norm = n_samples * static_cast<double>(newest.size() * spec.size());
    for (const auto& x : newest) {
      const Variable v = x.variable();
      if (!model.supports(v)) {
        fail(ErrorCode::UnsupportedVariable, "toy model lacks " + std::string(to_string(v)));
      }
      const GridField* xp = find_field(prev, v);
      const GridField* truth = find_field(s.truth, v);
      if (truth == nullptr || !(truth->spec() == spec)) {
        fail(ErrorCode::SpecMismatch, "truth stack does not match prediction");
      }
      const auto& clim = model.climatology().at(v);
      const auto xt = x.values();
      const auto xpv = xp->values();
      const auto tv = truth->values();
      const std::size_t w = spec.width();
      for (std::size_t i = 0; i < spec.height(); ++i) {
        const double wi = weights.row(i) / norm;
        for (std::size_t j = 0; j < w; ++j) {
          const std::size_t c = i * w + j;
          fn(CellTerm{v, xt[c], xpv[c], clim[c], tv[c],
                      static_cast<double>(s.request.target_lead), wi});
        }
      }
    }
  }
}

double cell_loss(double residual, LossKind kind) {
  return kind == LossKind::L1 ? std::fabs(residual) : residual * residual;
}

double cell_loss_slope(double residual, LossKind kind) {
  if (kind == LossKind::Squared) return 2.0 * residual;
  if (residual > 0.0) return 1.0;
  if (residual < 0.0) return -1.0;
  return 0.0;
}

/// Sign of every residual in visiting order (+1, -1, or 0).
std::vector<signed char> residual_signs(const ToyModel& model,
                                        std::span<const TrainingSample> samples,
                                        const LatWeights& weights) {
  std::vector<signed char> out;
  for_each_cell(model, samples, weights, [&](const CellTerm& t) {
    const double r =
        ToyModel::evaluate(model.params().at(t.variable), t.x_t, t.x_prev, t.clim, t.lead) -
        t.truth;
    out.push_back(static_cast<signed char>((r > 0.0) - (r < 0.0)));
  });
  return out;
}

}  // namespace

void check_request(const ForecastRequest& req) {
  if (req.history.empty()) fail(ErrorCode::InsufficientHistory, "empty history");
  if (req.target_lead < 1) fail(ErrorCode::InvalidStep, "target lead must be >= 1 h");
  for (const auto& stack : req.history) check_stack(stack);
  const FieldStack& newest = req.history.front();
  const int spacing = history_spacing(req);
  for (std::size_t k = 1; k < req.history.size(); ++k) {
    const FieldStack& s = req.history[k];
    if (s.size() != newest.size() || !(s.front().spec() == newest.front().spec())) {
      fail(ErrorCode::SpecMismatch, "history stacks differ in grid or variable set");
    }
    for (const auto& f : newest) {
      if (find_field(s, f.variable()) == nullptr) {
        fail(ErrorCode::SpecMismatch, "history stacks differ in variable set");
      }
    }
    const long long gap =
        hours_between(s.front().valid_time(), req.history[k - 1].front().valid_time());
    if (gap != spacing) fail(ErrorCode::InvalidData, "history is not uniformly spaced");
  }
  if (req.history.size() > 1 && spacing <= 0) {
    fail(ErrorCode::InvalidData, "history must be ordered newest first");
  }
}

int history_spacing(const ForecastRequest& req) {
  if (req.history.size() < 2) return 0;
  return static_cast<int>(hours_between(req.history[1].front().valid_time(),
                                        req.history[0].front().valid_time()));
}

FieldStack ForecastModel::predict(const ForecastRequest& req) const {
  check_request(req);
  if (req.history.size() < history_length()) {
    fail(ErrorCode::InsufficientHistory, name() + " needs " + std::to_string(history_length()) +
                                             " history entries");
  }
  const FieldStack& newest = req.history.front();
  FieldStack out;
  out.reserve(newest.size());
  for (std::size_t k = 0; k < newest.size(); ++k) {
    const GridField& x = newest[k];
    if (!supports(x.variable())) {
      fail(ErrorCode::UnsupportedVariable,
           name() + " does not forecast " + std::string(to_string(x.variable())));
    }
    out.emplace_back(x.spec(), x.variable(), x.init_time(), x.lead_hours() + req.target_lead,
                     forecast_values(req, k));
  }
  return out;
}

std::vector<double> PersistenceModel::forecast_values(const ForecastRequest& req,
                                                      std::size_t k) const {
  const auto v = req.history.front()[k].values();
  return {v.begin(), v.end()};
}

std::vector<double> ClimatologyModel::forecast_values(const ForecastRequest& req,
                                                      std::size_t k) const {
  const GridField& x = req.history.front()[k];
  const auto& clim = clim_.at(x.variable());
  if (clim.size() != x.spec().size()) fail(ErrorCode::SpecMismatch, "climatology grid differs");
  return clim;
}

ToyModel::ToyModel(ToyParams params, Climatology clim)
    : params_(std::move(params)), clim_(std::move(clim)) {
  check_coefficients(params_);
}

double ToyModel::evaluate(const ToyCoefficients& p, double x_t, double x_prev, double clim,
                          double lead_hours) {
  const double decay = std::exp(-p.lambda * lead_hours);
  const double relax = -std::expm1(-p.lambda * lead_hours);
  return p.c + decay * (p.a * x_t + p.b * (x_t - x_prev)) + relax * clim;
}

std::vector<double> ToyModel::forecast_values(const ForecastRequest& req, std::size_t k) const {
  const GridField& x = req.history[0][k];
  const GridField& xp = *find_field(req.history[1], x.variable());
  const ToyCoefficients& p = params_.at(x.variable());
  const auto& clim = clim_.at(x.variable());
  if (clim.size() != x.spec().size()) fail(ErrorCode::SpecMismatch, "climatology grid differs");
  const auto xt = x.values();
  const auto xpv = xp.values();
  const double lead = static_cast<double>(req.target_lead);
  std::vector<double> out(xt.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = evaluate(p, xt[c], xpv[c], clim[c], lead);
  return out;
}

FieldStack rollout(const ForecastModel& model, const ForecastRequest& req, int step) {
  if (step < 1 || req.target_lead % step != 0) {
    fail(ErrorCode::InvalidStep, "step must be >= 1 and divide the target lead");
  }
  check_request(req);
  if (req.history.size() > 1 && history_spacing(req) != step) {
    fail(ErrorCode::InvalidStep, "rollout step must equal the history spacing");
  }
  ForecastRequest cur{req.history, step};
  FieldStack out;
  for (int done = 0; done < req.target_lead; done += step) {
    out = model.predict(cur);
    cur.history.insert(cur.history.begin(), out);
    cur.history.pop_back();
  }
  return out;
}

Climatology compute_climatology(std::span<const TrainingSample> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "empty training dataset");
  std::map<Variable, std::vector<CompensatedSum>> sums;
  std::map<Variable, std::size_t> counts;
  for (const auto& s : samples) {
    for (const auto& f : s.truth) {
      auto& acc = sums[f.variable()];
      if (acc.empty()) acc.resize(f.spec().size());
      if (acc.size() != f.spec().size()) fail(ErrorCode::SpecMismatch, "truth grids differ");
      const auto v = f.values();
      for (std::size_t c = 0; c < v.size(); ++c) acc[c].add(v[c]);
      ++counts[f.variable()];
    }
  }
  Climatology out;
  for (const auto& [var, acc] : sums) {
    const double n = static_cast<double>(counts[var]);
    auto& mean = out[var];
    mean.resize(acc.size());
    for (std::size_t c = 0; c < acc.size(); ++c) mean[c] = acc[c].value() / n;
  }
  return out;
}

double dataset_loss(const ToyModel& model, std::span<const TrainingSample> samples,
                    const LatWeights& weights, LossKind kind) {
  CompensatedSum total;
  for_each_cell(model, samples, weights, [&](const CellTerm& t) {
    const double pred =
        ToyModel::evaluate(model.params().at(t.variable), t.x_t, t.x_prev, t.clim, t.lead);
    total.add(t.weight * cell_loss(pred - t.truth, kind));
  });
  return total.value();
}

ToyParams loss_gradient(const ToyModel& model, std::span<const TrainingSample> samples,
                        const LatWeights& weights, LossKind kind) {
  std::map<Variable, std::array<CompensatedSum, 4>> sums;
  for_each_cell(model, samples, weights, [&](const CellTerm& t) {
    const ToyCoefficients& p = model.params().at(t.variable);
    const double decay = std::exp(-p.lambda * t.lead);
    const double extrap = p.a * t.x_t + p.b * (t.x_t - t.x_prev);
    const double pred = p.c + decay * extrap - std::expm1(-p.lambda * t.lead) * t.clim;
    const double g = t.weight * cell_loss_slope(pred - t.truth, kind);
    auto& s = sums[t.variable];
    s[0].add(g * decay * t.x_t);
    s[1].add(g * decay * (t.x_t - t.x_prev));
    s[2].add(g * t.lead * decay * (t.clim - extrap));
    s[3].add(g);
  });
  ToyParams out;
  for (const auto& [v, s] : sums) {
    out[v] = ToyCoefficients{s[0].value(), s[1].value(), s[2].value(), s[3].value()};
  }
  return out;
}

TrainResult train_toy(const ToyParams& init, std::span<const TrainingSample> samples,
                      const LatWeights& weights, const TrainOptions& opts) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "empty training dataset");
  if (!(opts.learning_rate > 0.0)) fail(ErrorCode::InvalidConfig, "learning rate must be > 0");
  ToyModel model(init, compute_climatology(samples));

  // RMS of d(pred)/d(coefficient) at the initial point; steps are taken in
  // coordinates scaled by these so that a and c move on comparable scales.
  std::map<Variable, std::array<double, 4>> scale;
  {
    std::map<Variable, std::array<CompensatedSum, 4>> sq;
    std::map<Variable, double> count;
    for_each_cell(model, samples, weights, [&](const CellTerm& t) {
      const ToyCoefficients& p = model.params().at(t.variable);
      const double decay = std::exp(-p.lambda * t.lead);
      const double extrap = p.a * t.x_t + p.b * (t.x_t - t.x_prev);
      const std::array<double, 4> d{decay * t.x_t, decay * (t.x_t - t.x_prev),
                                    t.lead * decay * (t.clim - extrap), 1.0};
      auto& s = sq[t.variable];
      for (std::size_t k = 0; k < 4; ++k) s[k].add(d[k] * d[k]);
      count[t.variable] += 1.0;
    });
    for (const auto& [v, s] : sq) {
      for (std::size_t k = 0; k < 4; ++k) {
        const double rms = std::sqrt(s[k].value() / count[v]);
        scale[v][k] = rms > 1e-12 ? rms : 1.0;
      }
    }
  }

  TrainResult result{model, 0.0, 0.0, 0, {}};
  double loss = dataset_loss(model, samples, weights);
  if (!std::isfinite(loss)) fail(ErrorCode::TrainingDiverged, "initial loss is not finite");
  result.initial_loss = loss;

  double lr = opts.learning_rate;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const ToyParams grad = loss_gradient(model, samples, weights);
    bool accepted = false;
    bool saw_finite = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, lr *= 0.5) {
      ToyParams next = model.params();
      for (auto& [v, p] : next) {
        const auto git = grad.find(v);
        if (git == grad.end()) continue;
        ToyCoefficients g = git->second;
        for (std::size_t k = 0; k < 4; ++k) {
          const double s = scale[v][k];
          coefficient(p, k) -= lr * coefficient(g, k) / (s * s);
        }
        p.lambda = std::max(0.0, p.lambda);
      }
      ToyModel candidate(std::move(next), model.climatology());
      const double cand_loss = dataset_loss(candidate, samples, weights);
      if (!std::isfinite(cand_loss)) continue;
      saw_finite = true;
      if (cand_loss < loss) {
        model = std::move(candidate);
        loss = cand_loss;
        accepted = true;
        ++result.accepted_steps;
        result.loss_history.push_back(loss);
        break;
      }
    }
    if (!saw_finite) fail(ErrorCode::TrainingDiverged, "loss not finite after every step halving");
    if (!accepted) break;
    lr = std::min(opts.learning_rate, lr * 2.0);
  }
  result.model = std::move(model);
  result.final_loss = loss;
  return result;
}

GradientReport check_gradient(const ToyModel& model, std::span<const TrainingSample> samples,
                              const LatWeights& weights, LossKind kind, double h) {
  std::vector<signed char> base_signs;
  if (kind == LossKind::L1) {
    base_signs = residual_signs(model, samples, weights);
    if (std::find(base_signs.begin(), base_signs.end(), 0) != base_signs.end()) {
      fail(ErrorCode::NonSmoothPoint, "zero residual at the evaluation point");
    }
  }
  const ToyParams analytic = loss_gradient(model, samples, weights, kind);
  GradientReport report;
  for (const auto& [v, coeffs] : model.params()) {
    const auto ait = analytic.find(v);
    if (ait == analytic.end()) continue;
    ToyCoefficients a = ait->second;
    for (std::size_t k = 0; k < 4; ++k) {
      ToyParams plus = model.params();
      ToyParams minus = model.params();
      coefficient(plus[v], k) += h;
      coefficient(minus[v], k) -= h;
      if (k == 2 && minus[v].lambda < 0.0) {
        fail(ErrorCode::NonSmoothPoint, "lambda within h of its lower bound");
      }
      const ToyModel mp(plus, model.climatology());
      const ToyModel mm(minus, model.climatology());
      if (kind == LossKind::L1 && (residual_signs(mp, samples, weights) != base_signs ||
                                   residual_signs(mm, samples, weights) != base_signs)) {
        fail(ErrorCode::NonSmoothPoint, "a residual changes sign inside the difference stencil");
      }
      const double numeric = (dataset_loss(mp, samples, weights, kind) -
                              dataset_loss(mm, samples, weights, kind)) /
                             (2.0 * h);
      const double an = coefficient(a, k);
      const double denom = std::max({std::fabs(an), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(an - numeric) / denom;
      report.entries.push_back({v, kCoefficientNames[k], an, numeric, rel});
      report.max_rel_error = std::max(report.max_rel_error, rel);
    }
  }
  return report;
}

std::string toy_params_to_json(const ToyParams& params,
                               const std::map<Variable, std::string>& climatology_files) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [v, p] : params) {
    nlohmann::ordered_json entry{{"a", p.a}, {"b", p.b}, {"lambda", p.lambda}, {"c", p.c}};
    if (auto it = climatology_files.find(v); it != climatology_files.end()) {
      entry["climatology"] = it->second;
    }
    j[std::string(to_string(v))] = entry;
  }
  return j.dump(2) + "\n";
}

ToyParams toy_params_from_json(const std::string& text,
                               std::map<Variable, std::string>* climatology_files) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("toy params: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::FormatError, "toy params must be a JSON object");
  ToyParams out;
  for (const auto& [name, entry] : j.items()) {
    const auto v = parse_variable(name);
    if (!v) fail(ErrorCode::FormatError, "toy params: unknown variable '" + name + "'");
    ToyCoefficients p;
    try {
      p.a = entry.at("a").get<double>();
      p.b = entry.at("b").get<double>();
      p.lambda = entry.at("lambda").get<double>();
      p.c = entry.at("c").get<double>();
      if (climatology_files != nullptr && entry.contains("climatology")) {
        (*climatology_files)[*v] = entry.at("climatology").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::FormatError, "toy params for '" + name + "': " + e.what());
    }
    out[*v] = p;
  }
  check_coefficients(out);
  return out;
}

void save_toy_model(const std::filesystem::path& params_path, const ToyModel& model,
                    const GridField& template_field) {
  std::map<Variable, std::string> files;
  const auto dir = params_path.parent_path();
  for (const auto& [v, clim] : model.climatology()) {
    if (!model.params().contains(v)) continue;
    const std::string name = "clim_" + std::string(to_string(v)) + ".gfd";
    GridField f(template_field.spec(), v, template_field.init_time(), 0, clim);
    write_gfd(dir / name, f);
    files[v] = name;
  }
  std::ofstream out(params_path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + params_path.string() + "'");
  out << toy_params_to_json(model.params(), files);
}

ToyModel load_toy_model(const std::filesystem::path& params_path) {
  std::ifstream in(params_path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + params_path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::map<Variable, std::string> files;
  ToyParams params = toy_params_from_json(ss.str(), &files);
  Climatology clim;
  for (const auto& [v, p] : params) {
    const auto it = files.find(v);
    if (it == files.end()) {
      fail(ErrorCode::FormatError, "toy params lack a climatology file for " +
                                       std::string(to_string(v)));
    }
    const GridField f = read_gfd(params_path.parent_path() / it->second);
    clim[v].assign(f.values().begin(), f.values().end());
  }
  return ToyModel(std::move(params), std::move(clim));
}

}  // namespace wxv
