#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "raman/error.hpp"
#include "raman/rng.hpp"
#include "raman/sweep.hpp"

#ifndef RAMAN_VERSION
#define RAMAN_VERSION "unknown"
#endif

namespace raman {

inline constexpr const char* kVersion = RAMAN_VERSION;

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

// Shortest round-trip decimal form; the same double always prints the same.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double comparator_value(const SweepRow& row, const std::string& name) {
  for (const auto& c : row.comparators)
    if (c.name == name) return c.one_minus_F;
  return std::numeric_limits<double>::quiet_NaN();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace detail

inline std::vector<std::string> csv_columns(const SweepSpec& spec) {
  std::vector<std::string> cols{"point"};
  for (const auto& a : spec.axes) cols.push_back(a.name);
  for (const char* c : {"F_mc", "F_stderr", "one_minus_F_mc", "eta", "eta_stderr", "trials", "converged"})
    cols.emplace_back(c);
  if (spec.mode == Mode::three_level_filtered)
    for (const char* c : {"F_unfiltered", "eta_unfiltered", "filter_efficiency"}) cols.emplace_back(c);
  cols.emplace_back("xi");
  for (const auto& n : comparator_names(spec.mode)) cols.push_back("one_minus_F_" + n);
  for (const char* c : {"regime_ok", "max_balance", "error"}) cols.emplace_back(c);
  return cols;
}

// Wall-clock figures are left out so reruns compare byte for byte.
inline void write_csv(const SweepResult& res, std::ostream& os) {
  const auto cols = csv_columns(res.spec);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool filtered = res.spec.mode == Mode::three_level_filtered;
  for (const auto& row : res.rows) {
    const auto& r = row.result;
    const bool ok = !r.error;
    std::vector<std::string> f;
    f.push_back(std::to_string(row.index));
    for (double v : row.axis_values) f.push_back(format_number(v));
    f.push_back(format_number(ok ? r.mc.F : nan));
    f.push_back(format_number(ok ? r.mc.F_stderr : nan));
    f.push_back(format_number(ok ? r.mc.one_minus_F() : nan));
    f.push_back(format_number(ok ? r.mc.eta : nan));
    f.push_back(format_number(ok ? r.mc.eta_stderr : nan));
    f.push_back(std::to_string(r.trials));
    f.push_back(r.converged ? "1" : "0");
    if (filtered) {
      const bool u = ok && r.unfiltered;
      f.push_back(format_number(u ? r.unfiltered->F : nan));
      f.push_back(format_number(u ? r.unfiltered->eta : nan));
      f.push_back(format_number(u && r.unfiltered->eta > 0.0 ? r.mc.eta / r.unfiltered->eta : nan));
    }
    f.push_back(format_number(row.xi));
    for (const auto& n : comparator_names(res.spec.mode)) f.push_back(format_number(detail::comparator_value(row, n)));
    f.push_back(row.regime_ok ? (*row.regime_ok ? "1" : "0") : "");
    f.push_back(format_number(r.max_balance));
    f.push_back(detail::csv_escape(r.error.value_or("")));
    for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
    os << '\n';
  }
}

inline nlohmann::json provenance_json(const SweepSpec& spec) {
  return {{"version", kVersion},
          {"rng", std::string(kRngName)},
          {"master_seed", spec.master_seed},
          {"trajectory_key", "stream_key(master_seed, point_index, trajectory_index)"}};
}

inline nlohmann::json to_json_result(const SweepResult& res) {
  nlohmann::json j;
  j["provenance"] = provenance_json(res.spec);
  j["spec"] = to_json_spec(res.spec);
  j["wall_seconds"] = res.wall_seconds;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : res.rows) {
    nlohmann::json rj;
    rj["point"] = row.index;
    nlohmann::json ax = nlohmann::json::object();
    for (std::size_t k = 0; k < res.spec.axes.size(); ++k) ax[res.spec.axes[k].name] = row.axis_values[k];
    rj["axes"] = ax;
    rj["params"] = row.params;
    rj["channels"] = row.channels;
    if (row.filter) rj["filter"] = *row.filter;
    rj["xi"] = std::isfinite(row.xi) ? nlohmann::json(row.xi) : nlohmann::json(nullptr);
    rj["regime_ok"] = row.regime_ok ? nlohmann::json(*row.regime_ok) : nlohmann::json(nullptr);
    rj["comparators"] = row.comparators;
    const auto& r = row.result;
    if (r.error)
      rj["error"] = *r.error;
    else {
      rj["mc"] = r.mc;
      if (r.unfiltered) rj["unfiltered"] = *r.unfiltered;
    }
    rj["grid"] = {{"t_max", r.grid.t_max}, {"dt", r.grid.dt}, {"steps", r.grid.steps}};
    rj["trials"] = r.trials;
    rj["converged"] = r.converged;
    rj["max_balance"] = r.max_balance;
    rj["wall_seconds"] = r.wall_seconds;
    rows.push_back(std::move(rj));
  }
  j["rows"] = rows;
  return j;
}

// Minimal SVG plotting: log-log line chart and log-colour heatmap.
namespace svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool markers = true;  // false draws a line
  std::string colour;
};

inline std::string palette(std::size_t i) {
  static const char* c[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
  return c[i % 8];
}

inline void log_range(const std::vector<Series>& s, bool use_x, double& lo, double& hi) {
  lo = INFINITY;
  hi = -INFINITY;
  for (const auto& se : s)
    for (double v : use_x ? se.x : se.y)
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) lo = 1.0, hi = 10.0;
  lo = std::pow(10.0, std::floor(std::log10(lo)));
  hi = std::pow(10.0, std::ceil(std::log10(hi)));
  if (hi <= lo) hi = lo * 10.0;
}

inline std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series) {
  const double W = 640, H = 440, L = 80, R = 170, T = 40, B = 60;
  double xlo, xhi, ylo, yhi;
  log_range(series, true, xlo, xhi);
  log_range(series, false, ylo, yhi);
  auto X = [&](double v) { return L + (W - L - R) * (std::log10(v) - std::log10(xlo)) / (std::log10(xhi) - std::log10(xlo)); };
  auto Y = [&](double v) { return H - B - (H - T - B) * (std::log10(v) - std::log10(ylo)) / (std::log10(yhi) - std::log10(ylo)); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << (W - R + L) / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xlo; d <= xhi * 1.0001; d *= 10.0)
    o << "<line x1=\"" << X(d) << "\" y1=\"" << H - B << "\" x2=\"" << X(d) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/><text x=\"" << X(d) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e"
      << std::lround(std::log10(d)) << "</text>\n";
  for (double d = ylo; d <= yhi * 1.0001; d *= 10.0)
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << Y(d) << "\" x2=\"" << L << "\" y2=\"" << Y(d)
      << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << Y(d) + 4 << "\" text-anchor=\"end\">1e"
      << std::lround(std::log10(d)) << "</text>\n";
  o << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text x=\"18\" y=\"" << (H - B + T) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (H - B + T) / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string col = s.colour.empty() ? palette(i) : s.colour;
    if (s.markers) {
      for (std::size_t k = 0; k < s.x.size(); ++k)
        if (s.x[k] > 0 && s.y[k] > 0 && std::isfinite(s.y[k]))
          o << "<circle cx=\"" << X(s.x[k]) << "\" cy=\"" << Y(s.y[k]) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k)
        if (s.x[k] > 0 && s.y[k] > 0 && std::isfinite(s.y[k])) o << X(s.x[k]) << ',' << Y(s.y[k]) << ' ';
      o << "\"/>\n";
    }
    const double ly = T + 16.0 * static_cast<double>(i) + 8.0, lx = W - R + 12;
    if (s.markers)
      o << "<circle cx=\"" << lx + 8 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << col << "\"/>";
    else
      o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 16 << "\" y2=\"" << ly << "\" stroke=\"" << col
        << "\" stroke-width=\"1.5\"/>";
    o << "<text x=\"" << lx + 22 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// values[i][j] is drawn at column i (x) and row j (y); colour is log-scaled
// between the data minimum and maximum.
inline std::string heatmap(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::vector<std::vector<double>>& values) {
  const double W = 560, H = 440, L = 80, R = 110, T = 40, B = 60;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& col : values)
    for (double v : col)
      if (v > 0.0 && std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) lo = 1.0, hi = 10.0;
  if (hi <= lo) hi = lo * 10.0;
  auto colour = [&](double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return std::string("#cccccc");
    const double t = std::clamp((std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo)), 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 * t)), g = static_cast<int>(std::lround(60 + 120 * (1 - std::abs(2 * t - 1)))),
              b = static_cast<int>(std::lround(255 * (1 - t)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  const double cw = (W - L - R) / std::max<std::size_t>(1, xs.size()), ch = (H - T - B) / std::max<std::size_t>(1, ys.size());
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << (W - R + L) / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double v = i < values.size() && j < values[i].size() ? values[i][j] : NAN;
      o << "<rect x=\"" << L + cw * static_cast<double>(i) << "\" y=\"" << H - B - ch * static_cast<double>(j + 1)
        << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"" << colour(v) << "\"><title>"
        << format_number(v) << "</title></rect>\n";
    }
  for (std::size_t i = 0; i < xs.size(); ++i)
    o << "<text x=\"" << L + cw * (static_cast<double>(i) + 0.5) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\">" << format_number(xs[i]) << "</text>\n";
  for (std::size_t j = 0; j < ys.size(); ++j)
    o << "<text x=\"" << L - 8 << "\" y=\"" << H - B - ch * (static_cast<double>(j) + 0.5) + 4
      << "\" text-anchor=\"end\">" << format_number(ys[j]) << "</text>\n";
  o << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text x=\"18\" y=\"" << (H - B + T) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (H - B + T) / 2 << ")\">" << ylabel << "</text>\n";
  // colour bar
  const int steps = 20;
  for (int s = 0; s < steps; ++s) {
    const double v = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * (s + 0.5) / steps);
    o << "<rect x=\"" << W - R + 20 << "\" y=\"" << H - B - (H - T - B) * (s + 1) / steps << "\" width=\"18\" height=\""
      << (H - T - B) / steps + 0.5 << "\" fill=\"" << colour(v) << "\"/>\n";
  }
  o << "<text x=\"" << W - R + 44 << "\" y=\"" << H - B << "\">" << format_number(lo) << "</text>\n";
  o << "<text x=\"" << W - R + 44 << "\" y=\"" << T + 10 << "\">" << format_number(hi) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace svg

// 1-F against the last axis, one MC series and one comparator curve per value
// of the first axis.
inline std::string sweep_line_svg(const SweepResult& res) {
  const auto& axes = res.spec.axes;
  const std::string xname = axes.back().name;
  const auto comps = comparator_names(res.spec.mode);
  std::map<double, std::pair<svg::Series, svg::Series>> groups;
  std::vector<double> order;
  for (const auto& row : res.rows) {
    const double key = axes.size() > 1 ? row.axis_values.front() : 0.0;
    if (!groups.count(key)) order.push_back(key);
    auto& [mc, an] = groups[key];
    const double x = row.axis_values.back();
    mc.x.push_back(x);
    mc.y.push_back(row.result.error ? NAN : row.result.mc.one_minus_F());
    an.x.push_back(x);
    an.y.push_back(comps.empty() ? NAN : detail::comparator_value(row, comps.front()));
  }
  std::vector<svg::Series> series;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto [mc, an] = groups[order[i]];
    const std::string tag = axes.size() > 1 ? axes.front().name + "=" + format_number(order[i]) : std::string("MC");
    mc.label = tag + " MC";
    mc.colour = svg::palette(i);
    an.label = tag + " " + (comps.empty() ? std::string() : comps.front());
    an.markers = false;
    an.colour = svg::palette(i);
    series.push_back(mc);
    series.push_back(an);
  }
  return svg::line_plot(res.spec.name, xname, "1 - F", series);
}

inline std::string sweep_heatmap_svg(const SweepResult& res) {
  const auto& axes = res.spec.axes;
  if (axes.size() != 2) throw InvalidArgument("heatmap needs exactly two axes");
  std::vector<std::vector<double>> v(axes[1].values.size(), std::vector<double>(axes[0].values.size(), NAN));
  for (const auto& row : res.rows) {
    const std::size_t i = row.index / axes[1].values.size(), j = row.index % axes[1].values.size();
    v[j][i] = row.result.error ? NAN : row.result.mc.one_minus_F();
  }
  return svg::heatmap(res.spec.name + " 1 - F (MC)", axes[1].name, axes[0].name, axes[1].values, axes[0].values, v);
}

struct Formats {
  bool csv = true, json = true, svg = false;
};

inline Formats parse_formats(const std::string& s) {
  Formats f{false, false, false};
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "csv") f.csv = true;
    else if (tok == "json") f.json = true;
    else if (tok == "svg") f.svg = true;
    else if (!tok.empty()) throw InvalidArgument("unknown format '" + tok + "' (expected csv, json, svg)");
  }
  return f;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  os.close();
  if (!os) throw IoError("write failed for " + path.string());
}

// Writes <stem>.csv/.json/.svg into dir and returns the paths written.
inline std::vector<std::filesystem::path> emit_outputs(const SweepResult& res, const std::filesystem::path& dir,
                                                       const std::string& stem, const Formats& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  if (formats.csv) {
    std::ostringstream os;
    write_csv(res, os);
    out.push_back(dir / (stem + ".csv"));
    write_text(out.back(), os.str());
  }
  if (formats.json) {
    out.push_back(dir / (stem + ".json"));
    write_text(out.back(), to_json_result(res).dump(2) + "\n");
  }
  if (formats.svg && !res.rows.empty()) {
    out.push_back(dir / (stem + ".svg"));
    write_text(out.back(), sweep_line_svg(res));
    if (res.spec.axes.size() == 2 && res.spec.axes[0].values.size() > 1 && res.spec.axes[1].values.size() > 1) {
      out.push_back(dir / (stem + "_heatmap.svg"));
      write_text(out.back(), sweep_heatmap_svg(res));
    }
  }
  return out;
}

}  // namespace raman
