#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wxv/time.hpp"
#include "wxv/variable.hpp"

namespace wxv {

enum class LonConvention { ZeroTo360, MinusPlus180 };

/// Evenly spaced axes, as stored in GFD headers.
struct RegularAxes {
  double lat0;
  double dlat;
  double lon0;
  double dlon;
};

/// Regular latitude/longitude grid. Coordinates in degrees; both axes
/// strictly monotonic (either direction).
class GridSpec {
 public:
  /// Throws InvalidGrid on empty, non-monotonic, non-finite or out-of-range
  /// coordinates.
  GridSpec(std::vector<double> lats, std::vector<double> lons);

  static GridSpec regular(double lat0, double dlat, std::size_t height, double lon0,
                          double dlon, std::size_t width);

  std::size_t height() const noexcept { return lats_.size(); }
  std::size_t width() const noexcept { return lons_.size(); }
  std::size_t size() const noexcept { return lats_.size() * lons_.size(); }

  std::span<const double> lats() const noexcept { return lats_; }
  std::span<const double> lons() const noexcept { return lons_; }
  double lat(std::size_t i) const { return lats_[i]; }
  double lon(std::size_t j) const { return lons_[j]; }

  LonConvention lon_convention() const noexcept { return convention_; }

  /// Axis origin and step when both axes are evenly spaced (relative
  /// tolerance 1e-9 on the step); a single-point axis reports step 0.
  std::optional<RegularAxes> regular_axes() const;

  bool operator==(const GridSpec& other) const = default;

 private:
  std::vector<double> lats_;
  std::vector<double> lons_;
  LonConvention convention_ = LonConvention::ZeroTo360;
};

/// One variable on a grid at one (init_time, lead_time). Immutable; values
/// are row-major (lat-major) and always finite.
class GridField {
 public:
  GridField(GridSpec spec, Variable variable, TimePoint init_time, int lead_hours,
            std::vector<double> values, bool derived = false);

  const GridSpec& spec() const noexcept { return spec_; }
  Variable variable() const noexcept { return variable_; }
  TimePoint init_time() const noexcept { return init_time_; }
  int lead_hours() const noexcept { return lead_hours_; }
  TimePoint valid_time() const { return add_hours(init_time_, lead_hours_); }
  /// True for fields computed from other forecasts (e.g. an ensemble mean).
  bool derived() const noexcept { return derived_; }

  std::span<const double> values() const noexcept { return values_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * spec_.width() + j]; }

  /// Same metadata, new values.
  GridField with_values(std::vector<double> values) const;
  GridField with_times(TimePoint init_time, int lead_hours) const;

 private:
  GridSpec spec_;
  Variable variable_;
  TimePoint init_time_;
  int lead_hours_;
  std::vector<double> values_;
  bool derived_;
};

/// Several variables sharing one grid and time.
using FieldStack = std::vector<GridField>;

/// Throws SpecMismatch unless all fields share spec and times and variables
/// are distinct. Throws EmptyInput for an empty stack.
void check_stack(const FieldStack& stack);
const GridField* find_field(const FieldStack& stack, Variable v);

enum class WeightMode { MeanOne, SumOne };

/// Per-latitude-row weights. For SumOne each value is the weight of a
/// single cell, so the values broadcast over the W columns total one.
class LatWeights {
 public:
  LatWeights(WeightMode mode, std::vector<double> rows, std::size_t width)
      : mode_(mode), rows_(std::move(rows)), width_(width) {}

  /// Equal weights (1 per row for MeanOne, 1/(H*W) per cell for SumOne).
  static LatWeights uniform(std::size_t height, std::size_t width, WeightMode mode);

  WeightMode mode() const noexcept { return mode_; }
  std::span<const double> values() const noexcept { return rows_; }
  double row(std::size_t i) const { return rows_[i]; }
  std::size_t height() const noexcept { return rows_.size(); }
  std::size_t width() const noexcept { return width_; }

  bool matches(const GridSpec& spec) const {
    return spec.height() == rows_.size() && spec.width() == width_;
  }

 private:
  WeightMode mode_;
  std::vector<double> rows_;
  std::size_t width_;
};

/// cos(lat) weights. Exact poles contribute cos = 0. Throws DegenerateGrid
/// when every row sits on a pole.
LatWeights lat_weights(const GridSpec& spec, WeightMode mode);

enum class Interp { Nearest, Bilinear };

std::string_view to_string(Interp m);
Interp interp_from_string(std::string_view name);

struct PointOptions {
  Interp method = Interp::Bilinear;
  /// Interpolate across the longitude seam between the last and first column.
  bool periodic_lon = false;
};

/// Samples a field at (lat, lon). The longitude is first normalized to the
/// grid's convention. Throws OutOfDomain outside the grid's bounding box.
double value_at_point(const GridField& field, double lat, double lon,
                      PointOptions opts = {});

/// Sums consecutive hourly fields over the `window_hours` ending at the
/// largest lead present. Hourly `ssrd` accumulated over 6 h becomes
/// `ssrd6h`; other variables keep their id.
GridField accumulate(std::span<const GridField> fields, int window_hours);

}  // namespace wxv
