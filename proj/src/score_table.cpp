#include "wxv/score_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "wxv/error.hpp"
#include "wxv/summation.hpp"

namespace wxv {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void ScoreTable::set(const ScoreKey& key, ScoreValue value) {
  if (value.n_samples == 0) fail(ErrorCode::InvalidData, "score entry with zero samples");
  if (!std::isfinite(value.score)) fail(ErrorCode::InvalidData, "non-finite score");
  if (value.score < 0.0) fail(ErrorCode::InvalidData, "negative score for metric " + key.metric);
  entries_[key] = value;
}

const ScoreValue* ScoreTable::find(const ScoreKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void ScoreTable::write_csv(std::ostream& out) const {
  out << kScoreCsvHeader << '\n';
  for (const auto& [k, v] : entries_) {
    out << k.variable << ',' << k.lead_hours << ',' << k.metric << ',' << k.reference << ','
        << k.region << ',' << format_number(v.score) << ',' << v.n_samples << '\n';
  }
}

void ScoreTable::write_json(std::ostream& out) const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [k, v] : entries_) {
    arr.push_back({{"variable", k.variable},
                   {"lead_hours", k.lead_hours},
                   {"metric", k.metric},
                   {"reference", k.reference},
                   {"region", k.region},
                   {"score", v.score},
                   {"n_samples", v.n_samples}});
  }
  out << arr.dump(2) << '\n';
}

ScoreTable ScoreTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kScoreCsvHeader) {
    fail(ErrorCode::FormatError, "score file does not start with the ScoreTable header");
  }
  ScoreTable table;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) {
      fail(ErrorCode::FormatError, "score row " + std::to_string(row) + " has wrong column count");
    }
    ScoreKey key{cells[0], 0, cells[2], cells[3], cells[4]};
    ScoreValue value;
    const auto parse_ok = [](const std::string& s, auto& v) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (!parse_ok(cells[1], key.lead_hours) || !parse_ok(cells[5], value.score) ||
        !parse_ok(cells[6], value.n_samples)) {
      fail(ErrorCode::FormatError, "unparsable score row " + std::to_string(row));
    }
    table.set(key, value);
  }
  return table;
}

ScoreTable ScoreTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return read_csv(in);
}

void ScoreAccumulator::add(const ScoreKey& key, double value, std::size_t n, bool root) {
  if (n == 0) return;
  if (!std::isfinite(value)) fail(ErrorCode::InvalidData, "non-finite partial score");
  Slot& s = slots_[key];
  if (s.n > 0 && s.root != root) fail(ErrorCode::InvalidData, "mixed pooling kinds for one key");
  s.root = root;
  // Neumaier step kept inline so the slot stays a plain aggregate.
  const double x = value * static_cast<double>(n);
  const double t = s.weighted_sum + x;
  s.compensation += std::fabs(s.weighted_sum) >= std::fabs(x) ? (s.weighted_sum - t) + x
                                                              : (x - t) + s.weighted_sum;
  s.weighted_sum = t;
  s.n += n;
}

void ScoreAccumulator::add_mean_square(const ScoreKey& key, double mean_square, std::size_t n) {
  add(key, mean_square, n, true);
}

void ScoreAccumulator::add_mean(const ScoreKey& key, double mean, std::size_t n) {
  add(key, mean, n, false);
}

ScoreTable ScoreAccumulator::finish() const {
  ScoreTable table;
  for (const auto& [key, s] : slots_) {
    const double mean = std::max(0.0, (s.weighted_sum + s.compensation) / static_cast<double>(s.n));
    table.set(key, {s.root ? std::sqrt(mean) : mean, s.n});
  }
  return table;
}

}  // namespace wxv
