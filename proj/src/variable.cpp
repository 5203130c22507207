#include "wxv/variable.hpp"

#include <array>
#include <string>
#include <utility>

#include "wxv/error.hpp"

namespace wxv {
namespace {

constexpr std::array<std::pair<Variable, std::string_view>, 6> kNames{{
    {Variable::t2m, "t2m"},
    {Variable::ws10, "ws10"},
    {Variable::ws100, "ws100"},
    {Variable::ssrd6h, "ssrd6h"},
    {Variable::sp, "sp"},
    {Variable::ssrd, "ssrd"},
}};

}  // namespace

std::string_view to_string(Variable v) {
  for (const auto& [var, name] : kNames) {
    if (var == v) return name;
  }
  return "unknown";
}

std::optional<Variable> parse_variable(std::string_view name) {
  for (const auto& [var, n] : kNames) {
    if (n == name) return var;
  }
  return std::nullopt;
}

Variable variable_from_string(std::string_view name) {
  if (auto v = parse_variable(name)) return *v;
  fail(ErrorCode::UnsupportedVariable, "unknown variable '" + std::string(name) + "'");
}

std::string_view units_of(Variable v) {
  switch (v) {
    case Variable::t2m: return "K";
    case Variable::ws10:
    case Variable::ws100: return "m s-1";
    case Variable::sp: return "hPa";
    case Variable::ssrd:
    case Variable::ssrd6h: return "J m-2";
  }
  return "";
}

PlausibleRange plausible_range(Variable v) {
  switch (v) {
    case Variable::t2m: return {180.0, 340.0};
    case Variable::ws10:
    case Variable::ws100: return {0.0, 120.0};
    case Variable::sp: return {400.0, 1100.0};
    // Clear-sky top-of-atmosphere flux stays below ~1400 W/m^2.
    case Variable::ssrd: return {0.0, 1400.0 * 3600.0};
    case Variable::ssrd6h: return {0.0, 1400.0 * 6.0 * 3600.0};
  }
  return {0.0, 0.0};
}

}  // namespace wxv
