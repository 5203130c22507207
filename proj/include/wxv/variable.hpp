#pragma once

#include <optional>
#include <string_view>

namespace wxv {

/// Surface variables handled by the toolkit. Canonical units: K for `t2m`,
/// m/s for wind speeds, hPa for `sp`, J/m^2 for radiation (`ssrd` holds
/// hourly accumulations, `ssrd6h` six-hour accumulations).
enum class Variable { t2m, ws10, ws100, ssrd6h, sp, ssrd };

std::string_view to_string(Variable v);
std::optional<Variable> parse_variable(std::string_view name);
/// Throws UnsupportedVariable on unknown names.
Variable variable_from_string(std::string_view name);

std::string_view units_of(Variable v);

/// Closed plausibility interval used to screen station observations.
struct PlausibleRange {
  double lo;
  double hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

PlausibleRange plausible_range(Variable v);

}  // namespace wxv
