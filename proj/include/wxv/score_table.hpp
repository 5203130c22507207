#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace wxv {

struct ScoreKey {
  std::string variable;
  int lead_hours = 0;
  std::string metric;
  std::string reference;
  std::string region = "global";

  auto operator<=>(const ScoreKey&) const = default;
};

struct ScoreValue {
  double score = 0.0;
  std::size_t n_samples = 0;
};

/// Scores keyed by (variable, lead, metric, reference, region). Iteration
/// order is the key order, so serialized output is deterministic.
class ScoreTable {
 public:
  /// Throws InvalidData for n_samples == 0, a non-finite score, or a
  /// negative RMSE/CRPS/MAE-type score.
  void set(const ScoreKey& key, ScoreValue value);

  const std::map<ScoreKey, ScoreValue>& entries() const noexcept { return entries_; }
  const ScoreValue* find(const ScoreKey& key) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
  /// Throws FormatError when the header is not the exact ScoreTable header.
  static ScoreTable read_csv(std::istream& in);
  static ScoreTable read_csv(const std::filesystem::path& path);

 private:
  std::map<ScoreKey, ScoreValue> entries_;
};

inline constexpr const char* kScoreCsvHeader =
    "variable,lead_hours,metric,reference,region,score,n_samples";

/// Pools per-chunk scores (e.g. one chunk per init time) before finalizing.
/// Root-mean-square metrics pool sample-weighted mean squares and take the
/// square root at the end; mean metrics pool sample-weighted means.
class ScoreAccumulator {
 public:
  void add_mean_square(const ScoreKey& key, double mean_square, std::size_t n);
  void add_mean(const ScoreKey& key, double mean, std::size_t n);
  ScoreTable finish() const;
  bool empty() const noexcept { return slots_.empty(); }

 private:
  struct Slot {
    bool root = false;
    double weighted_sum = 0.0;
    double compensation = 0.0;
    std::size_t n = 0;
  };
  void add(const ScoreKey& key, double value, std::size_t n, bool root);
  std::map<ScoreKey, Slot> slots_;
};

/// Shortest round-trip decimal form of a double.
std::string format_number(double x);

}  // namespace wxv
