#include "monoalign/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "monoalign/common.hpp"

namespace monoalign {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axes {
  double x0, x1, y0, y1;
  bool log_x;

  double px(double x) const {
    const double a = log_x ? std::log(x) : x, lo = log_x ? std::log(x0) : x0, hi = log_x ? std::log(x1) : x1;
    return kLeft + (hi > lo ? (a - lo) / (hi - lo) : 0.5) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (kHeight - kTop - kBottom);
  }
};

std::string frame(const Axes& ax, const std::vector<double>& xticks, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  const double bx = kLeft, by = kHeight - kBottom, ex = kWidth - kRight;
  s += "<line x1=\"" + num(bx) + "\" y1=\"" + num(by) + "\" x2=\"" + num(ex) + "\" y2=\"" + num(by) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(bx) + "\" y1=\"" + num(by) + "\" x2=\"" + num(bx) + "\" y2=\"" + num(kTop) +
       "\" stroke=\"black\"/>\n";
  for (double x : xticks) {
    s += "<line x1=\"" + num(ax.px(x)) + "\" y1=\"" + num(by) + "\" x2=\"" + num(ax.px(x)) + "\" y2=\"" +
         num(by + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(ax.px(x)) + "\" y=\"" + num(by + 18) + "\" text-anchor=\"middle\">" + tick(x) +
         "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double y = ax.y0 + (ax.y1 - ax.y0) * k / 4.0;
    s += "<line x1=\"" + num(bx - 5) + "\" y1=\"" + num(ax.py(y)) + "\" x2=\"" + num(bx) + "\" y2=\"" +
         num(ax.py(y)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(bx - 8) + "\" y=\"" + num(ax.py(y) + 4) + "\" text-anchor=\"end\">" + tick(y) +
         "</text>\n";
  }
  s += "<text x=\"" + num((bx + ex) / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
       escape(xlabel) + "</text>\n";
  s += "<text transform=\"translate(16," + num((by + kTop) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(ylabel) + "</text>\n";
  return s;
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& metric, const std::string& title) {
  std::map<std::string, std::vector<CurvePoint>> lines;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double x0 = lo, x1 = -lo;
  std::vector<double> sizes;
  for (const auto& p : curve) {
    if (p.metric != metric) continue;
    lines[p.model_kind].push_back(p);
    lo = std::min(lo, p.ci_low);
    hi = std::max(hi, p.ci_high);
    x0 = std::min(x0, static_cast<double>(p.train_size));
    x1 = std::max(x1, static_cast<double>(p.train_size));
    sizes.push_back(static_cast<double>(p.train_size));
  }
  if (lines.empty()) throw Error("curve_svg: no points for metric " + metric);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const auto [y0, y1] = padded(lo, hi);
  const Axes ax{x0, x1, y0, y1, x0 > 0};
  std::string s = frame(ax, sizes, title.empty() ? metric : title, "training set size", metric);
  std::size_t color = 0;
  for (auto& [kind, pts] : lines) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.train_size < b.train_size; });
    const char* c = kPalette[color++ % std::size(kPalette)];
    std::string band, line;
    for (const auto& p : pts) band += num(ax.px(p.train_size)) + "," + num(ax.py(p.ci_high)) + " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      band += num(ax.px(it->train_size)) + "," + num(ax.py(it->ci_low)) + " ";
    for (const auto& p : pts) line += num(ax.px(p.train_size)) + "," + num(ax.py(p.mean)) + " ";
    s += "<polygon points=\"" + band + "\" fill=\"" + c + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(color);
    s += "<line x1=\"" + num(kWidth - kRight + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kWidth - kRight + 40) +
         "\" y2=\"" + num(ly) + "\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight + 45) + "\" y=\"" + num(ly + 4) + "\">" + escape(kind) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string pdp_svg(const PdpCurve& curve, const std::vector<Violation>& flagged) {
  if (curve.grid.empty()) throw Error("pdp_svg: empty curve");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    lo = std::min(lo, curve.mean[i] - 2 * curve.se[i]);
    hi = std::max(hi, curve.mean[i] + 2 * curve.se[i]);
  }
  const auto [y0, y1] = padded(lo, hi);
  const auto [gx0, gx1] = curve.grid.size() > 1 ? std::pair{curve.grid.front(), curve.grid.back()}
                                                  : padded(curve.grid.front(), curve.grid.front());
  const Axes ax{gx0, gx1, y0, y1, false};
  std::string s = frame(ax, curve.grid, "partial dependence: " + curve.feature, curve.feature, "mean predicted risk");
  std::string band, line;
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    band += num(ax.px(curve.grid[i])) + "," + num(ax.py(curve.mean[i] + 2 * curve.se[i])) + " ";
  for (std::size_t i = curve.grid.size(); i-- > 0;)
    band += num(ax.px(curve.grid[i])) + "," + num(ax.py(curve.mean[i] - 2 * curve.se[i])) + " ";
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    line += num(ax.px(curve.grid[i])) + "," + num(ax.py(curve.mean[i])) + " ";
  s += "<polygon points=\"" + band + "\" fill=\"#1f78b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#1f78b4\" stroke-width=\"2\"/>\n";
  for (const auto& v : flagged) {
    s += "<line x1=\"" + num(ax.px(curve.grid[v.from])) + "\" y1=\"" + num(ax.py(curve.mean[v.from])) + "\" x2=\"" +
         num(ax.px(curve.grid[v.to])) + "\" y2=\"" + num(ax.py(curve.mean[v.to])) +
         "\" stroke=\"#e31a1c\" stroke-width=\"3\"/>\n";
  }
  return s + "</svg>\n";
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace monoalign
