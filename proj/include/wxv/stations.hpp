#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wxv/grid.hpp"
#include "wxv/score_table.hpp"

namespace wxv {

struct StationRecord {
  std::string station_id;
  double lat = 0.0;
  double lon = 0.0;  ///< normalized to [-180, 180)
  TimePoint time;
  Variable variable = Variable::t2m;
  double value = 0.0;

  bool operator==(const StationRecord&) const = default;
};

inline constexpr const char* kStationCsvHeader = "station_id,lat,lon,time,variable,value";

struct StationLoad {
  std::vector<StationRecord> records;
  std::size_t total_rows = 0;
  std::size_t unparsable = 0;
  std::size_t implausible = 0;
  std::size_t duplicates = 0;
  /// One line per rejected row, prefixed with its line number.
  std::vector<std::string> diagnostics;

  std::size_t rejected() const noexcept { return unparsable + implausible + duplicates; }
};

/// Reads the station CSV schema. Throws FormatError when the header is not
/// exactly `station_id,lat,lon,time,variable,value`; bad rows are counted
/// and dropped. Of duplicate (station_id, time, variable) rows the first
/// one wins.
StationLoad load_stations(std::istream& in);
StationLoad load_stations(const std::filesystem::path& path);

void write_stations(std::ostream& out, std::span<const StationRecord> records);

struct MatchedPair {
  StationRecord record;
  double predicted = 0.0;
  int lead_hours = 0;
  TimePoint init_time;
  Interp extraction = Interp::Bilinear;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::size_t skipped_variable = 0;
  std::size_t skipped_time = 0;
  std::size_t skipped_out_of_domain = 0;

  std::size_t skipped() const noexcept {
    return skipped_variable + skipped_time + skipped_out_of_domain;
  }
};

/// Pairs records with the forecast at their exact valid time and variable.
/// Nothing here is fatal: every unmatched record lands in one skip counter.
MatchResult match_forecast(std::span<const StationRecord> records, const GridField& field,
                           PointOptions opts = {});

/// Per (variable, lead) point RMSE against reference "stations".
/// Throws EmptyInput for no pairs.
ScoreTable score_stations(std::span<const MatchedPair> pairs);

/// Adds per (variable, lead) partials of `pairs` to `acc`: mean squares for
/// "rmse", mean absolute errors for "mae".
void accumulate_station_errors(std::span<const MatchedPair> pairs, ScoreAccumulator& acc,
                               const std::string& metric = "rmse");

}  // namespace wxv
