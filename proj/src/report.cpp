#include "contro/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "contro/error.hpp"

namespace contro {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto end = line.find(',', start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("config,", 0) == 0) continue;
    const auto f = split_csv(line);
    auto fail = [&](const char* why) { throw DataError("results csv line " + std::to_string(lineno) + ": " + why); };
    if (f.size() != 4) fail("expected 4 fields");
    ResultRow r;
    r.config = f[0];
    if (!f[1].empty()) {
      r.t = to_double(f[1]);
      if (!r.t) fail("bad t");
    }
    auto fold = to_double(f[2]);
    auto acc = to_double(f[3]);
    if (!fold || *fold < 0) fail("bad fold");
    if (!acc || *acc < 0 || *acc > 1) fail("bad accuracy");
    r.fold = static_cast<std::size_t>(*fold);
    r.accuracy = *acc;
    rows.push_back(std::move(r));
  }
  return rows;
}

SweepSeries aggregate(const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, double>, std::pair<double, std::size_t>> timed;
  std::map<std::string, std::pair<double, std::size_t>> untimed;
  for (const auto& r : rows) {
    auto& slot = r.t ? timed[{r.config, *r.t}] : untimed[r.config];
    slot.first += r.accuracy;
    slot.second += 1;
  }
  SweepSeries s;
  for (const auto& [key, acc] : timed)
    s.by_config[key.first].push_back({key.second, acc.first / static_cast<double>(acc.second)});
  for (const auto& [cfg, acc] : untimed) s.post_only[cfg] = acc.first / static_cast<double>(acc.second);
  return s;
}

std::string render_sweep_svg(const SweepSeries& series, const std::string& title) {
  constexpr double W = 640, H = 400, L = 60, R = 180, T = 40, B = 50;
  double t_lo = 0, t_hi = 180, y_lo = 0.4, y_hi = 1.0;
  bool any = false;
  for (const auto& [cfg, pts] : series.by_config)
    for (const auto& p : pts) {
      if (!any) t_lo = t_hi = p.t;
      any = true;
      t_lo = std::min(t_lo, p.t);
      t_hi = std::max(t_hi, p.t);
      y_lo = std::min(y_lo, p.mean);
      y_hi = std::max(y_hi, p.mean);
    }
  for (const auto& [cfg, m] : series.post_only) {
    y_lo = std::min(y_lo, m);
    y_hi = std::max(y_hi, m);
  }
  if (t_hi == t_lo) t_hi = t_lo + 1;
  y_lo = std::floor(y_lo * 10) / 10;
  y_hi = std::ceil(y_hi * 10) / 10;
  if (y_hi == y_lo) y_hi = y_lo + 0.1;
  auto X = [&](double t) { return L + (t - t_lo) / (t_hi - t_lo) * (W - L - R); };
  auto Y = [&](double a) { return H - B - (a - y_lo) / (y_hi - y_lo) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(W / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
  o << "<g class=\"axes\" stroke=\"black\">\n";
  o << "<line x1=\"" << px(L) << "\" y1=\"" << px(H - B) << "\" x2=\"" << px(W - R) << "\" y2=\"" << px(H - B)
    << "\"/>\n";
  o << "<line x1=\"" << px(L) << "\" y1=\"" << px(T) << "\" x2=\"" << px(L) << "\" y2=\"" << px(H - B) << "\"/>\n";
  o << "</g>\n";
  o << "<g class=\"ticks\" font-size=\"10\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = t_lo + (t_hi - t_lo) * k / 4.0;
    o << "<text x=\"" << px(X(t)) << "\" y=\"" << px(H - B + 15) << "\" text-anchor=\"middle\">" << px(t)
      << "</text>\n";
  }
  for (double a = y_lo; a <= y_hi + 1e-9; a += 0.1)
    o << "<text x=\"" << px(L - 6) << "\" y=\"" << px(Y(a) + 3) << "\" text-anchor=\"end\">" << px(a) << "</text>\n";
  o << "</g>\n";
  o << "<text x=\"" << px((L + W - R) / 2) << "\" y=\"" << px(H - 10)
    << "\" text-anchor=\"middle\" font-size=\"12\">t (minutes)</text>\n";
  o << "<text x=\"15\" y=\"" << px((T + H - B) / 2) << "\" transform=\"rotate(-90 15 " << px((T + H - B) / 2)
    << ")\" text-anchor=\"middle\" font-size=\"12\">accuracy</text>\n";

  std::size_t k = 0;
  double legend_y = T;
  for (const auto& [cfg, mean] : series.post_only) {
    const char* color = kPalette[k++ % 8];
    o << "<line class=\"post-only\" data-config=\"" << escape(cfg) << "\" data-mean=\"" << num(mean) << "\" x1=\""
      << px(L) << "\" y1=\"" << px(Y(mean)) << "\" x2=\"" << px(W - R) << "\" y2=\"" << px(Y(mean)) << "\" stroke=\""
      << color << "\" stroke-dasharray=\"4 3\"/>\n";
    o << "<text x=\"" << px(W - R + 10) << "\" y=\"" << px(legend_y) << "\" font-size=\"10\" fill=\"" << color << "\">"
      << escape(cfg) << "</text>\n";
    legend_y += 14;
  }
  for (const auto& [cfg, pts] : series.by_config) {
    const char* color = kPalette[k++ % 8];
    o << "<polyline class=\"series\" data-config=\"" << escape(cfg) << "\" fill=\"none\" stroke=\"" << color
      << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) o << (i ? " " : "") << px(X(pts[i].t)) << ',' << px(Y(pts[i].mean));
    o << "\"/>\n";
    for (const auto& p : pts)
      o << "<circle data-config=\"" << escape(cfg) << "\" data-t=\"" << num(p.t) << "\" data-mean=\"" << num(p.mean)
        << "\" cx=\"" << px(X(p.t)) << "\" cy=\"" << px(Y(p.mean)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    o << "<text x=\"" << px(W - R + 10) << "\" y=\"" << px(legend_y) << "\" font-size=\"10\" fill=\"" << color << "\">"
      << escape(cfg) << "</text>\n";
    legend_y += 14;
  }
  o << "</svg>\n";
  return o.str();
}

TransferMatrix read_transfer_csv(std::istream& in) {
  struct Cell {
    std::string src, dst;
    double acc;
    std::optional<double> deg;
  };
  std::vector<Cell> cells;
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("source,", 0) == 0) continue;
    const auto f = split_csv(line);
    auto fail = [&](const char* why) { throw DataError("transfer csv line " + std::to_string(lineno) + ": " + why); };
    if (f.size() != 4) fail("expected 4 fields");
    Cell c{f[0], f[1], 0.0, std::nullopt};
    auto acc = to_double(f[2]);
    if (!acc) fail("bad accuracy");
    c.acc = *acc;
    if (!f[3].empty()) {
      c.deg = to_double(f[3]);
      if (!c.deg) fail("bad degradation");
    }
    for (const auto* n : {&c.src, &c.dst})
      if (std::find(names.begin(), names.end(), *n) == names.end()) names.push_back(*n);
    cells.push_back(std::move(c));
  }
  TransferMatrix m;
  m.communities = names;
  m.accuracy.assign(names.size(), std::vector<double>(names.size(), 0.0));
  m.degradation.assign(names.size(), std::vector<std::optional<double>>(names.size()));
  auto idx = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  for (const auto& c : cells) {
    m.accuracy[idx(c.src)][idx(c.dst)] = c.acc;
    m.degradation[idx(c.src)][idx(c.dst)] = c.deg;
  }
  return m;
}

std::string render_transfer_svg(const TransferMatrix& m, const std::string& title) {
  const double cell = 70, L = 110, T = 60;
  const auto n = m.communities.size();
  const double W = L + cell * static_cast<double>(n) + 20, H = T + cell * static_cast<double>(n) + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(W) << "\" height=\"" << px(H) << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (std::size_t j = 0; j < n; ++j)
    o << "<text x=\"" << px(L + cell * (static_cast<double>(j) + 0.5)) << "\" y=\"" << px(T - 8)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(m.communities[j]) << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double y = T + cell * static_cast<double>(i);
    o << "<text x=\"" << px(L - 8) << "\" y=\"" << px(y + cell / 2) << "\" text-anchor=\"end\" font-size=\"10\">"
      << escape(m.communities[i]) << "</text>\n";
    for (std::size_t j = 0; j < n; ++j) {
      const double x = L + cell * static_cast<double>(j);
      const auto& d = m.degradation[i][j];
      // white at 0, saturated red at -1 or below
      std::string fill = "#dddddd";
      if (d) {
        const double s = std::clamp(-*d, 0.0, 1.0);
        char buf[16];
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", static_cast<int>(255 * (1 - s)), static_cast<int>(255 * (1 - s)));
        fill = buf;
      }
      o << "<rect class=\"cell\" data-source=\"" << escape(m.communities[i]) << "\" data-target=\""
        << escape(m.communities[j]) << "\" data-accuracy=\"" << num(m.accuracy[i][j]) << "\"";
      if (d) o << " data-degradation=\"" << num(*d) << "\"";
      o << " x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(cell) << "\" height=\"" << px(cell)
        << "\" fill=\"" << fill << "\" stroke=\"black\"/>\n";
      char label[32];
      if (d) std::snprintf(label, sizeof label, "%+.0f%%", 100 * *d);
      else std::snprintf(label, sizeof label, "n/a");
      o << "<text x=\"" << px(x + cell / 2) << "\" y=\"" << px(y + cell / 2 + 4)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace contro
