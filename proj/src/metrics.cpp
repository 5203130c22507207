#include "wxv/metrics.hpp"

#include <cmath>
#include <string>

#include "wxv/error.hpp"
#include "wxv/summation.hpp"

namespace wxv {
namespace {

void check_pair(const GridField& pred, const GridField& truth, const LatWeights& weights,
                WeightMode mode) {
  if (!(pred.spec() == truth.spec())) fail(ErrorCode::SpecMismatch, "prediction and truth grids differ");
  if (pred.variable() != truth.variable()) {
    fail(ErrorCode::SpecMismatch, "prediction and truth variables differ");
  }
  if (pred.valid_time() != truth.valid_time()) {
    fail(ErrorCode::SpecMismatch, "prediction and truth valid times differ");
  }
  if (!weights.matches(pred.spec())) fail(ErrorCode::SpecMismatch, "weights do not match grid");
  if (weights.mode() != mode) fail(ErrorCode::SpecMismatch, "weights have the wrong normalization");
}

template <typename CellFn>
double weighted_reduce(const GridSpec& spec, const LatWeights& weights, CellFn&& cell) {
  CompensatedSum total;
  const std::size_t w = spec.width();
  for (std::size_t i = 0; i < spec.height(); ++i) {
    CompensatedSum row;
    for (std::size_t j = 0; j < w; ++j) row.add(cell(i * w + j));
    total.add(weights.row(i) * row.value());
  }
  const double v = total.value();
  if (!std::isfinite(v)) fail(ErrorCode::InvalidData, "non-finite reduction result");
  return v;
}

void check_finite(double x) {
  if (!std::isfinite(x)) fail(ErrorCode::InvalidData, "non-finite value");
}

}  // namespace

void check_ensemble(const Ensemble& ens) {
  if (ens.members.empty()) fail(ErrorCode::EmptyEnsemble, "ensemble has no members");
  const GridField& ref = ens.members.front();
  for (const auto& m : ens.members) {
    if (!(m.spec() == ref.spec()) || m.variable() != ref.variable() ||
        m.init_time() != ref.init_time() || m.lead_hours() != ref.lead_hours()) {
      fail(ErrorCode::SpecMismatch, "ensemble members differ in grid, variable or time");
    }
  }
}

std::string_view to_string(CrpsVariant v) {
  return v == CrpsVariant::StandardAbsolute ? "standard" : "squared";
}

CrpsVariant crps_variant_from_string(std::string_view name) {
  if (name == "standard") return CrpsVariant::StandardAbsolute;
  if (name == "squared") return CrpsVariant::Squared;
  fail(ErrorCode::InvalidConfig, "unknown CRPS variant '" + std::string(name) + "'");
}

CrpsTerms crps_terms(std::span<const double> members, double obs, CrpsVariant variant) {
  if (members.empty()) fail(ErrorCode::EmptyEnsemble, "CRPS needs at least one member");
  check_finite(obs);
  const auto dist = [variant](double a, double b) {
    const double d = a - b;
    return variant == CrpsVariant::StandardAbsolute ? std::fabs(d) : d * d;
  };
  const double n = static_cast<double>(members.size());
  CompensatedSum skill;
  CompensatedSum spread;
  for (std::size_t i = 0; i < members.size(); ++i) {
    check_finite(members[i]);
    skill.add(dist(members[i], obs));
    for (std::size_t j = 0; j < members.size(); ++j) spread.add(dist(members[i], members[j]));
  }
  return {skill.value() / n, spread.value() / (2.0 * n * n)};
}

double crps_pointwise(std::span<const double> members, double obs, CrpsVariant variant) {
  const CrpsTerms t = crps_terms(members, obs, variant);
  // Both forms are non-negative in exact arithmetic; clip rounding residue.
  return std::max(0.0, t.value());
}

double weighted_mse(const GridField& pred, const GridField& truth, const LatWeights& weights) {
  check_pair(pred, truth, weights, WeightMode::SumOne);
  const auto p = pred.values();
  const auto t = truth.values();
  return weighted_reduce(pred.spec(), weights, [&](std::size_t c) {
    const double d = p[c] - t[c];
    return d * d;
  });
}

double weighted_rmse(const GridField& pred, const GridField& truth, const LatWeights& weights) {
  return std::sqrt(std::max(0.0, weighted_mse(pred, truth, weights)));
}

double weighted_mae(const GridField& pred, const GridField& truth, const LatWeights& weights) {
  check_pair(pred, truth, weights, WeightMode::SumOne);
  const auto p = pred.values();
  const auto t = truth.values();
  return weighted_reduce(pred.spec(), weights,
                         [&](std::size_t c) { return std::fabs(p[c] - t[c]); });
}

double point_mse(std::span<const PredObs> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no prediction/observation pairs");
  CompensatedSum s;
  for (const auto& [pred, obs] : pairs) {
    check_finite(pred);
    check_finite(obs);
    const double d = pred - obs;
    s.add(d * d);
  }
  return s.value() / static_cast<double>(pairs.size());
}

double point_rmse(std::span<const PredObs> pairs) { return std::sqrt(point_mse(pairs)); }

double point_mae(std::span<const PredObs> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no prediction/observation pairs");
  CompensatedSum s;
  for (const auto& [pred, obs] : pairs) {
    check_finite(pred);
    check_finite(obs);
    s.add(std::fabs(pred - obs));
  }
  return s.value() / static_cast<double>(pairs.size());
}

double crps_field(const Ensemble& ens, const GridField& truth, const LatWeights& weights,
                  CrpsVariant variant) {
  check_ensemble(ens);
  for (const auto& m : ens.members) check_pair(m, truth, weights, WeightMode::SumOne);
  const auto t = truth.values();
  std::vector<double> column(ens.members.size());
  return weighted_reduce(truth.spec(), weights, [&](std::size_t c) {
    for (std::size_t k = 0; k < column.size(); ++k) column[k] = ens.members[k].values()[c];
    return crps_pointwise(column, t[c], variant);
  });
}

double training_loss(const FieldStack& pred, const FieldStack& truth, const LatWeights& weights) {
  if (pred.empty()) fail(ErrorCode::EmptyInput, "empty prediction stack");
  if (pred.size() != truth.size()) fail(ErrorCode::SpecMismatch, "stacks differ in channel count");
  const GridSpec& spec = pred.front().spec();
  if (!weights.matches(spec) || weights.mode() != WeightMode::MeanOne) {
    fail(ErrorCode::SpecMismatch, "training loss needs MeanOne weights matching the grid");
  }
  CompensatedSum total;
  for (const auto& p : pred) {
    const GridField* t = find_field(truth, p.variable());
    if (t == nullptr) fail(ErrorCode::SpecMismatch, "truth stack lacks a predicted variable");
    if (!(p.spec() == spec) || !(t->spec() == spec)) {
      fail(ErrorCode::SpecMismatch, "stack fields differ in grid shape");
    }
    const auto pv = p.values();
    const auto tv = t->values();
    total.add(weighted_reduce(spec, weights, [&](std::size_t c) { return std::fabs(pv[c] - tv[c]); }));
  }
  const double cells = static_cast<double>(pred.size() * spec.size());
  return total.value() / cells;
}

GridField ensemble_mean(const Ensemble& ens) {
  check_ensemble(ens);
  const GridField& ref = ens.members.front();
  const double n = static_cast<double>(ens.members.size());
  std::vector<double> out(ref.spec().size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    CompensatedSum s;
    for (const auto& m : ens.members) s.add(m.values()[c]);
    out[c] = s.value() / n;
  }
  return GridField(ref.spec(), ref.variable(), ref.init_time(), ref.lead_hours(), std::move(out),
                   /*derived=*/true);
}

}  // namespace wxv
