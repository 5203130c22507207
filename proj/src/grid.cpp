#include "wxv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "wxv/error.hpp"
#include "wxv/summation.hpp"

namespace wxv {
namespace {

void check_axis(std::span<const double> axis, const char* name) {
  if (axis.empty()) fail(ErrorCode::InvalidGrid, std::string(name) + " axis is empty");
  for (double x : axis) {
    if (!std::isfinite(x)) {
      fail(ErrorCode::InvalidGrid, std::string(name) + " axis has non-finite entries");
    }
  }
  if (axis.size() < 2) return;
  const bool ascending = axis[1] > axis[0];
  for (std::size_t k = 1; k < axis.size(); ++k) {
    const bool ok = ascending ? axis[k] > axis[k - 1] : axis[k] < axis[k - 1];
    if (!ok) fail(ErrorCode::InvalidGrid, std::string(name) + " axis is not strictly monotonic");
  }
}

std::optional<std::pair<double, double>> even_step(std::span<const double> axis) {
  if (axis.size() == 1) return std::pair{axis[0], 0.0};
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  for (std::size_t k = 1; k < axis.size(); ++k) {
    if (std::fabs((axis[k] - axis[k - 1]) - step) > 1e-9 * std::fabs(step)) return std::nullopt;
  }
  return std::pair{axis[0], step};
}

double normalize_lon(double lon, LonConvention c) {
  double x = std::fmod(lon, 360.0);
  if (x < 0.0) x += 360.0;
  if (c == LonConvention::MinusPlus180 && x >= 180.0) x -= 360.0;
  return x;
}

/// Position of x along a monotonic axis as value = (1-t)*v[i0] + t*v[i1].
struct Bracket {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  double t = 0.0;
};

std::optional<Bracket> locate(std::span<const double> axis, double x) {
  const std::size_t n = axis.size();
  if (n == 1) {
    if (x == axis[0]) return Bracket{};
    return std::nullopt;
  }
  const bool ascending = axis[1] > axis[0];
  const double lo = ascending ? axis.front() : axis.back();
  const double hi = ascending ? axis.back() : axis.front();
  if (x < lo || x > hi) return std::nullopt;
  std::size_t k;
  if (ascending) {
    k = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
  } else {
    k = static_cast<std::size_t>(
        std::upper_bound(axis.begin(), axis.end(), x, std::greater<>{}) - axis.begin());
  }
  // axis[k-1] is the last entry not past x.
  if (k == 0) k = 1;
  if (k >= n) return Bracket{n - 1, n - 1, 0.0};
  const double a = axis[k - 1];
  const double b = axis[k];
  return Bracket{k - 1, k, (x - a) / (b - a)};
}

std::optional<Bracket> locate_lon(std::span<const double> axis, double x, bool periodic) {
  if (auto b = locate(axis, x)) return b;
  if (!periodic) return std::nullopt;
  const std::size_t n = axis.size();
  const bool ascending = n < 2 || axis[1] > axis[0];
  const std::size_t first = ascending ? 0 : n - 1;  // smallest longitude
  const std::size_t last = ascending ? n - 1 : 0;   // largest longitude
  const double lo = axis[first];
  const double hi = axis[last];
  const double gap = lo + 360.0 - hi;
  if (gap <= 0.0) return std::nullopt;
  const double xs = x < lo ? x + 360.0 : x;
  if (xs < hi || xs > lo + 360.0) return std::nullopt;
  return Bracket{last, first, (xs - hi) / gap};
}

std::size_t nearest(const Bracket& b) { return b.t <= 0.5 ? b.i0 : b.i1; }

}  // namespace

GridSpec::GridSpec(std::vector<double> lats, std::vector<double> lons)
    : lats_(std::move(lats)), lons_(std::move(lons)) {
  check_axis(lats_, "latitude");
  check_axis(lons_, "longitude");
  for (double lat : lats_) {
    if (lat < -90.0 || lat > 90.0) fail(ErrorCode::InvalidGrid, "latitude outside [-90, 90]");
  }
  const auto [mn, mx] = std::minmax_element(lons_.begin(), lons_.end());
  if (*mn >= 0.0 && *mx < 360.0) {
    convention_ = LonConvention::ZeroTo360;
  } else if (*mn >= -180.0 && *mx < 180.0) {
    convention_ = LonConvention::MinusPlus180;
  } else {
    fail(ErrorCode::InvalidGrid, "longitudes must lie within [0, 360) or [-180, 180)");
  }
}

GridSpec GridSpec::regular(double lat0, double dlat, std::size_t height, double lon0,
                           double dlon, std::size_t width) {
  std::vector<double> lats(height), lons(width);
  for (std::size_t i = 0; i < height; ++i) lats[i] = lat0 + dlat * static_cast<double>(i);
  for (std::size_t j = 0; j < width; ++j) lons[j] = lon0 + dlon * static_cast<double>(j);
  return GridSpec(std::move(lats), std::move(lons));
}

std::optional<RegularAxes> GridSpec::regular_axes() const {
  const auto lat = even_step(lats_);
  const auto lon = even_step(lons_);
  if (!lat || !lon) return std::nullopt;
  return RegularAxes{lat->first, lat->second, lon->first, lon->second};
}

GridField::GridField(GridSpec spec, Variable variable, TimePoint init_time, int lead_hours,
                     std::vector<double> values, bool derived)
    : spec_(std::move(spec)),
      variable_(variable),
      init_time_(init_time),
      lead_hours_(lead_hours),
      values_(std::move(values)),
      derived_(derived) {
  if (values_.size() != spec_.size()) {
    fail(ErrorCode::InvalidData, "field has " + std::to_string(values_.size()) +
                                     " values, grid needs " + std::to_string(spec_.size()));
  }
  if (lead_hours_ < 0) fail(ErrorCode::InvalidData, "negative lead time");
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidData, "non-finite value in field");
  }
}

GridField GridField::with_values(std::vector<double> values) const {
  return GridField(spec_, variable_, init_time_, lead_hours_, std::move(values), derived_);
}

GridField GridField::with_times(TimePoint init_time, int lead_hours) const {
  return GridField(spec_, variable_, init_time, lead_hours, values_, derived_);
}

void check_stack(const FieldStack& stack) {
  if (stack.empty()) fail(ErrorCode::EmptyInput, "empty field stack");
  const GridField& ref = stack.front();
  for (std::size_t k = 1; k < stack.size(); ++k) {
    const GridField& f = stack[k];
    if (!(f.spec() == ref.spec()) || f.init_time() != ref.init_time() ||
        f.lead_hours() != ref.lead_hours()) {
      fail(ErrorCode::SpecMismatch, "stack members differ in grid or time");
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (stack[m].variable() == f.variable()) {
        fail(ErrorCode::SpecMismatch, "duplicate variable in stack");
      }
    }
  }
}

const GridField* find_field(const FieldStack& stack, Variable v) {
  for (const auto& f : stack) {
    if (f.variable() == v) return &f;
  }
  return nullptr;
}

LatWeights LatWeights::uniform(std::size_t height, std::size_t width, WeightMode mode) {
  const double w = mode == WeightMode::MeanOne
                       ? 1.0
                       : 1.0 / (static_cast<double>(height) * static_cast<double>(width));
  return LatWeights(mode, std::vector<double>(height, w), width);
}

LatWeights lat_weights(const GridSpec& spec, WeightMode mode) {
  const std::size_t h = spec.height();
  std::vector<double> cosines(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double lat = spec.lat(i);
    cosines[i] = std::fabs(lat) == 90.0 ? 0.0 : std::cos(lat * std::numbers::pi / 180.0);
  }
  const double total = compensated_sum(cosines);
  if (!(total > 0.0)) fail(ErrorCode::DegenerateGrid, "all latitude rows lie on a pole");

  const double norm = mode == WeightMode::MeanOne
                          ? total / static_cast<double>(h)
                          : total * static_cast<double>(spec.width());
  for (double& c : cosines) c /= norm;
  return LatWeights(mode, std::move(cosines), spec.width());
}

std::string_view to_string(Interp m) {
  return m == Interp::Nearest ? "nearest" : "bilinear";
}

Interp interp_from_string(std::string_view name) {
  if (name == "nearest") return Interp::Nearest;
  if (name == "bilinear") return Interp::Bilinear;
  fail(ErrorCode::InvalidConfig, "unknown interpolation method '" + std::string(name) + "'");
}

double value_at_point(const GridField& field, double lat, double lon, PointOptions opts) {
  const GridSpec& spec = field.spec();
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    fail(ErrorCode::OutOfDomain, "non-finite query point");
  }
  const double x = normalize_lon(lon, spec.lon_convention());
  const auto by = locate(spec.lats(), lat);
  const auto bx = locate_lon(spec.lons(), x, opts.periodic_lon);
  if (!by || !bx) {
    fail(ErrorCode::OutOfDomain,
         "point (" + std::to_string(lat) + ", " + std::to_string(lon) + ") outside grid");
  }
  if (opts.method == Interp::Nearest) return field.at(nearest(*by), nearest(*bx));

  const double ty = by->t;
  const double tx = bx->t;
  const double south = (1.0 - tx) * field.at(by->i0, bx->i0) + tx * field.at(by->i0, bx->i1);
  const double north = (1.0 - tx) * field.at(by->i1, bx->i0) + tx * field.at(by->i1, bx->i1);
  return (1.0 - ty) * south + ty * north;
}

GridField accumulate(std::span<const GridField> fields, int window_hours) {
  if (fields.empty()) fail(ErrorCode::EmptyInput, "no fields to accumulate");
  if (window_hours < 1) fail(ErrorCode::InvalidStep, "accumulation window must be >= 1 h");
  const GridField& ref = fields.front();
  int end_lead = ref.lead_hours();
  for (const auto& f : fields) {
    if (!(f.spec() == ref.spec()) || f.variable() != ref.variable() ||
        f.init_time() != ref.init_time()) {
      fail(ErrorCode::SpecMismatch, "accumulated fields differ in grid, variable or init time");
    }
    end_lead = std::max(end_lead, f.lead_hours());
  }
  const int start_lead = end_lead - window_hours + 1;

  std::vector<const GridField*> window(static_cast<std::size_t>(window_hours), nullptr);
  for (const auto& f : fields) {
    const int slot = f.lead_hours() - start_lead;
    if (slot < 0) continue;
    auto& entry = window[static_cast<std::size_t>(slot)];
    if (entry != nullptr) fail(ErrorCode::SpecMismatch, "duplicate lead time in accumulation");
    entry = &f;
  }
  for (std::size_t k = 0; k < window.size(); ++k) {
    if (window[k] == nullptr) {
      fail(ErrorCode::MissingStep,
           "missing lead " + std::to_string(start_lead + static_cast<int>(k)) + " h");
    }
  }

  std::vector<double> out(ref.spec().size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    CompensatedSum s;
    for (const GridField* f : window) s.add(f->values()[c]);
    out[c] = s.value();
  }
  const Variable var =
      ref.variable() == Variable::ssrd && window_hours == 6 ? Variable::ssrd6h : ref.variable();
  return GridField(ref.spec(), var, ref.init_time(), end_lead, std::move(out), ref.derived());
}

}  // namespace wxv
