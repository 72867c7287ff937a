#pragma once

// RunReport emission: report.csv (time rows), <table>.csv, report.json, config echo, SVG
// plots, and meta.json (the only file with timestamps).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracschrod/config.hpp"
#include "fracschrod/diagnostics.hpp"
#include "fracschrod/errors.hpp"

namespace fracschrod {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> residual_columns(const RunReport& r) {
  std::set<std::string> keys;
  for (const auto& row : r.rows)
    for (const auto& [k, v] : row.residuals) keys.insert(k);
  return {keys.begin(), keys.end()};
}

inline void write_rows_csv(std::ostream& os, const RunReport& r) {
  const auto cols = residual_columns(r);
  os << "t,l2,h1";
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  for (const auto& row : r.rows) {
    os << format_number(row.t) << ',' << format_number(row.l2) << ',' << format_number(row.h1);
    for (const auto& c : cols) {
      os << ',';
      if (const auto it = row.residuals.find(c); it != row.residuals.end()) os << format_number(it->second);
    }
    os << '\n';
  }
}

inline void write_table_csv(std::ostream& os, const StudyTable& t) {
  const bool labelled = !t.row_labels.empty();
  if (labelled) os << "label,";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (labelled) os << t.row_labels[r] << ',';
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
}

inline nlohmann::ordered_json report_json(const RunReport& r, const SolverConfig& c) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o{{"t", row.t}, {"l2", row.l2}, {"h1", row.h1}};
    for (const auto& [k, v] : row.residuals) o[k] = v;
    rows.push_back(o);
  }
  j["rows"] = rows;
  auto tables = nlohmann::ordered_json::array();
  for (const auto& t : r.tables) {
    nlohmann::ordered_json o;
    o["name"] = t.name;
    o["columns"] = t.columns;
    o["rows"] = t.rows;
    if (!t.row_labels.empty()) o["row_labels"] = t.row_labels;
    nlohmann::ordered_json orders = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.orders) orders[k] = v;
    o["orders"] = orders;
    o["flags"] = t.flags;
    tables.push_back(o);
  }
  j["tables"] = tables;
  j["warnings"] = r.warnings;
  return j;
}

struct PlotSeries {
  std::string name;
  std::vector<double> y;
};

/// Minimal line plot: polyline per series, axis box with min/max labels, optional log axes.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::vector<double>& x,
                            const std::vector<PlotSeries>& series, bool logx, bool logy) {
  const double W = 640, H = 400, ml = 80, mr = 20, mt = 40, mb = 50;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  auto usable = [&](double xv, double yv) {
    return std::isfinite(xv) && std::isfinite(yv) && (!logx || xv > 0) && (!logy || yv > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < x.size() && i < s.y.size(); ++i) {
      if (!usable(x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(x[i]));
      x1 = std::max(x1, tx(x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto label = [&](double v, bool lg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", lg ? std::pow(10.0, v) : v);
    return std::string(buf);
  };
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\">" << label(x0, logx) << "</text>\n";
  os << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"end\">" << label(x1, logx)
     << "</text>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb << "\" text-anchor=\"end\">" << label(y0, logy) << "</text>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\">" << label(y1, logy) << "</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* col = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[k].y.size(); ++i)
      if (usable(x[i], series[k].y[i])) os << px(x[i]) << ',' << py(series[k].y[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 14 * static_cast<double>(k) << "\" fill=\"" << col
       << "\">" << series[k].name << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file '" + p.string() + "'");
  f << text;
}

inline std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes the artifact tree for one run into `dir`.
inline void emit_report(const std::filesystem::path& dir, const RunReport& r, const SolverConfig& c,
                        std::chrono::system_clock::time_point started, std::chrono::system_clock::time_point finished) {
  r.validate();
  std::filesystem::create_directories(dir);
  write_text(dir / "config.echo.ini", c.canonical());
  std::ostringstream rows;
  write_rows_csv(rows, r);
  write_text(dir / "report.csv", rows.str());
  for (const auto& t : r.tables) {
    std::ostringstream os;
    write_table_csv(os, t);
    write_text(dir / (t.name + ".csv"), os.str());
  }
  write_text(dir / "report.json", report_json(r, c).dump(2) + "\n");

  if (r.rows.size() > 1) {
    std::vector<double> t, drift;
    for (const auto& row : r.rows) {
      t.push_back(row.t);
      drift.push_back(std::abs(row.l2 - r.rows.front().l2));
    }
    write_text(dir / "charge_drift.svg", svg_plot("charge drift | ||Psi(t)|| - ||Psi0|| |", "t", t, {{"drift", drift}}, false, false));
  }
  for (const auto& tab : r.tables) {
    if (tab.rows.size() < 2 || tab.columns.size() < 2 || !tab.row_labels.empty()) continue;
    std::vector<double> x;
    for (const auto& row : tab.rows) x.push_back(row[0]);
    std::vector<PlotSeries> ys;
    for (std::size_t k = 1; k < tab.columns.size(); ++k) {
      PlotSeries s{tab.columns[k], {}};
      for (const auto& row : tab.rows) s.y.push_back(row[k]);
      ys.push_back(std::move(s));
    }
    write_text(dir / (tab.name + ".svg"), svg_plot(tab.name, tab.columns[0], x, ys, true, true));
  }

  nlohmann::ordered_json meta;
  meta["config_hash"] = r.config_hash;
  meta["started_utc"] = iso_utc(started);
  meta["finished_utc"] = iso_utc(finished);
  meta["wall_seconds"] = std::chrono::duration<double>(finished - started).count();
  meta["workers"] = c.workers;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace fracschrod
