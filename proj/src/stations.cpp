#include "wxv/stations.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "wxv/error.hpp"
#include "wxv/metrics.hpp"

namespace wxv {
namespace {

bool parse_real(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

/// Inputs are within [-180, 360]; in-range values pass through untouched.
double normalize_station_lon(double lon) { return lon >= 180.0 ? lon - 360.0 : lon; }

}  // namespace

StationLoad load_stations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::FormatError, "station file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStationCsvHeader) {
    fail(ErrorCode::FormatError, "station header must be '" + std::string(kStationCsvHeader) + "'");
  }

  StationLoad out;
  std::set<std::tuple<std::string, TimePoint, Variable>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++out.total_rows;
    const auto reject = [&](std::size_t& counter, const std::string& why) {
      ++counter;
      out.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
    };

    std::vector<std::string> cells;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6 || line.back() == ',') {
      reject(out.unparsable, "expected 6 columns");
      continue;
    }
    StationRecord r;
    r.station_id = cells[0];
    const auto var = parse_variable(cells[4]);
    double lon = 0.0;
    bool time_ok = true;
    try {
      r.time = parse_utc(cells[3]);
    } catch (const Error&) {
      time_ok = false;
    }
    if (r.station_id.empty() || !parse_real(cells[1], r.lat) || !parse_real(cells[2], lon) ||
        !parse_real(cells[5], r.value) || !var || !time_ok) {
      reject(out.unparsable, "unparsable row");
      continue;
    }
    r.variable = *var;
    if (r.lat < -90.0 || r.lat > 90.0 || lon < -180.0 || lon > 360.0) {
      reject(out.unparsable, "coordinates out of range");
      continue;
    }
    r.lon = normalize_station_lon(lon);
    if (!plausible_range(r.variable).contains(r.value)) {
      reject(out.implausible, "implausible " + std::string(to_string(r.variable)) +
                                  " value " + cells[5]);
      continue;
    }
    if (!seen.emplace(r.station_id, r.time, r.variable).second) {
      reject(out.duplicates, "duplicate observation for station " + r.station_id);
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

StationLoad load_stations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return load_stations(in);
}

void write_stations(std::ostream& out, std::span<const StationRecord> records) {
  out << kStationCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.station_id << ',' << format_number(r.lat) << ',' << format_number(r.lon) << ','
        << format_utc(r.time) << ',' << to_string(r.variable) << ',' << format_number(r.value)
        << '\n';
  }
}

MatchResult match_forecast(std::span<const StationRecord> records, const GridField& field,
                           PointOptions opts) {
  MatchResult out;
  const TimePoint valid = field.valid_time();
  for (const auto& r : records) {
    if (r.variable != field.variable()) {
      ++out.skipped_variable;
      continue;
    }
    if (r.time != valid) {
      ++out.skipped_time;
      continue;
    }
    try {
      const double v = value_at_point(field, r.lat, r.lon, opts);
      out.pairs.push_back({r, v, field.lead_hours(), field.init_time(), opts.method});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfDomain) throw;
      ++out.skipped_out_of_domain;
    }
  }
  return out;
}

void accumulate_station_errors(std::span<const MatchedPair> pairs, ScoreAccumulator& acc,
                               const std::string& metric) {
  std::map<std::pair<Variable, int>, std::vector<PredObs>> groups;
  for (const auto& p : pairs) {
    groups[{p.record.variable, p.lead_hours}].emplace_back(p.predicted, p.record.value);
  }
  if (metric != "rmse" && metric != "mae") fail(ErrorCode::InvalidConfig, "unknown metric '" + metric + "'");
  for (const auto& [key, list] : groups) {
    const ScoreKey k{std::string(to_string(key.first)), key.second, metric, "stations"};
    if (metric == "mae") {
      acc.add_mean(k, point_mae(list), list.size());
    } else {
      acc.add_mean_square(k, point_mse(list), list.size());
    }
  }
}

ScoreTable score_stations(std::span<const MatchedPair> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no matched station pairs");
  ScoreAccumulator acc;
  accumulate_station_errors(pairs, acc);
  return acc.finish();
}

}  // namespace wxv
