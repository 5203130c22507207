#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <tuple>

#include "wxv/error.hpp"
#include "wxv/pipeline.hpp"

namespace wxv {
namespace {

using SeriesKey = std::tuple<std::string, std::string, std::string, std::string>;  // var, metric, ref, region

struct Series {
  // model index -> (lead -> score)
  std::map<std::size_t, std::map<int, double>> by_model;
};

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string render_svg(const std::string& title, const std::vector<int>& leads,
                       const std::vector<std::pair<std::string, std::vector<double>>>& lines) {
  constexpr double width = 640, height = 400, left = 60, right = 20, top = 40, bottom = 50;
  double lo = lines.front().second.front(), hi = lo;
  for (const auto& [name, ys] : lines) {
    for (double y : ys) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= 0.5;
  }
  const double x0 = leads.front();
  const double x1 = leads.size() > 1 ? leads.back() : x0 + 1.0;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
  const auto py = [&](double y) { return height - bottom - (y - lo) / (hi - lo) * (height - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = lo + (hi - lo) * k / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(py(y) + 4, 1)
        << "\" text-anchor=\"end\">" << fixed(y, 3) << "</text>\n";
    const double x = x0 + (x1 - x0) * k / 4.0;
    svg << "<text x=\"" << fixed(px(x), 1) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\">" << fixed(x, 0) << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">lead time (h)</text>\n";
  for (std::size_t m = 0; m < lines.size(); ++m) {
    const char* color = kPalette[m % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < leads.size(); ++k) {
      if (k) svg << ' ';
      svg << fixed(px(leads[k]), 2) << ',' << fixed(py(lines[m].second[k]), 2);
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - right - 120 << "\" y=\"" << top + 14 * (m + 1) << "\" fill=\""
        << color << "\">" << lines[m].first << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

CommandOutcome cmd_report(const std::vector<NamedScores>& candidates,
                          const std::vector<NamedScores>& baselines,
                          const std::filesystem::path& out) {
  std::vector<NamedScores> models = candidates;
  models.insert(models.end(), baselines.begin(), baselines.end());
  if (models.empty()) fail(ErrorCode::InvalidConfig, "report needs at least one score file");

  std::map<SeriesKey, Series> series;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const ScoreTable table = ScoreTable::read_csv(models[m].path);
    for (const auto& [k, v] : table.entries()) {
      series[{k.variable, k.metric, k.reference, k.region}].by_model[m][k.lead_hours] = v.score;
    }
  }

  CommandOutcome outcome;
  std::filesystem::create_directories(out);
  for (const auto& [key, s] : series) {
    const auto& [var, metric, ref, region] = key;
    std::vector<int> leads;
    for (const auto& [lead, score] : s.by_model.begin()->second) leads.push_back(lead);
    for (const auto& [m, scores] : s.by_model) {
      std::vector<int> mine;
      for (const auto& [lead, score] : scores) mine.push_back(lead);
      if (mine != leads) {
        fail(ErrorCode::LeadGridMismatch,
             models[m].name + " has a different lead grid for " + var + " " + metric);
      }
    }

    std::vector<std::pair<std::string, std::vector<double>>> lines;
    std::vector<std::size_t> present;
    for (const auto& [m, scores] : s.by_model) {
      std::vector<double> ys;
      for (int lead : leads) ys.push_back(scores.at(lead));
      lines.emplace_back(models[m].name, std::move(ys));
      present.push_back(m);
    }
    // Difference columns: every candidate against every baseline present.
    std::vector<std::pair<std::string, std::vector<double>>> diffs;
    for (std::size_t a = 0; a < present.size(); ++a) {
      if (present[a] >= candidates.size()) continue;
      for (std::size_t b = 0; b < present.size(); ++b) {
        if (present[b] < candidates.size()) continue;
        std::vector<double> d;
        for (std::size_t k = 0; k < leads.size(); ++k) d.push_back(lines[a].second[k] - lines[b].second[k]);
        diffs.emplace_back(lines[a].first + "-" + lines[b].first, std::move(d));
      }
    }

    std::string stem = var + "_" + metric + "_" + ref;
    if (region != "global") stem += "_" + region;
    std::ostringstream csv;
    csv << "lead_hours";
    for (const auto& [name, ys] : lines) csv << ',' << name;
    for (const auto& [name, ys] : diffs) csv << ',' << name;
    csv << '\n';
    for (std::size_t k = 0; k < leads.size(); ++k) {
      csv << leads[k];
      for (const auto& [name, ys] : lines) csv << ',' << format_number(ys[k]);
      for (const auto& [name, ys] : diffs) csv << ',' << format_number(ys[k]);
      csv << '\n';
    }
    const auto csv_path = out / (stem + ".csv");
    const auto svg_path = out / (stem + ".svg");
    std::ofstream(csv_path, std::ios::binary | std::ios::trunc) << csv.str();
    std::ofstream(svg_path, std::ios::binary | std::ios::trunc)
        << render_svg(var + " " + metric + " vs " + ref, leads, lines);
    outcome.written.push_back(csv_path);
    outcome.written.push_back(svg_path);
    ++outcome.scored_chunks;
  }
  return outcome;
}

}  // namespace wxv
