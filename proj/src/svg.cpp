#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rfsgd/error.hpp"
#include "rfsgd/sweep.hpp"

namespace rfsgd {
namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 180, kTop = 30, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double pixel_lo = 0, pixel_hi = 1;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo, b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(v) : v;
    return pixel_lo + (x - a) / (b - a) * (pixel_hi - pixel_lo);
  }
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (f * mag >= raw) {
      step = f * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) out.push_back(t);
  return out;
}

}  // namespace

std::vector<Series> aggregate(const std::vector<SweepRow>& rows, const std::string& metric) {
  if (!is_metric(metric)) throw InvalidArgument("unknown metric '" + metric + "'");
  std::map<std::pair<double, double>, std::map<double, std::vector<double>>> groups;
  for (const SweepRow& r : rows) {
    const double v = metric_value(r, metric);
    auto& bucket = groups[{r.zeta, r.gamma0}][r.ratio];
    if (std::isfinite(v)) bucket.push_back(v);
  }
  std::vector<Series> out;
  for (const auto& [key, by_ratio] : groups) {
    Series s;
    s.label = metric;
    if (groups.size() > 1) s.label += " (zeta=" + num(key.first) + ", gamma0=" + num(key.second) + ")";
    for (const auto& [ratio, vals] : by_ratio) {
      if (vals.empty()) continue;
      SeriesPoint p;
      p.ratio = ratio;
      p.count = Index(vals.size());
      for (double v : vals) p.mean += v / double(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - p.mean) * (v - p.mean);
        p.sd = std::sqrt(ss / double(vals.size() - 1));
      }
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_svg_string(const std::vector<SweepRow>& rows, const std::vector<std::string>& metrics,
                              bool log_y) {
  if (rows.empty()) throw InvalidArgument("nothing to plot: no rows");
  if (metrics.empty()) throw InvalidArgument("nothing to plot: no metrics");
  std::vector<Series> all;
  for (const auto& m : metrics)
    for (Series& s : aggregate(rows, m)) all.push_back(std::move(s));

  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const Series& s : all)
    for (const SeriesPoint& p : s.points) {
      xlo = std::min(xlo, p.ratio), xhi = std::max(xhi, p.ratio);
      const double lo = log_y ? (p.mean - p.sd > 0.0 ? p.mean - p.sd : p.mean) : p.mean - p.sd;
      ylo = std::min(ylo, lo), yhi = std::max(yhi, p.mean + p.sd);
    }
  if (!std::isfinite(xlo)) throw InvalidArgument("nothing to plot: every value is missing");
  if (log_y && !(ylo > 0.0)) throw InvalidArgument("log-scale y needs positive values");

  Axis x, y;
  x.log = xlo > 0.0 && xhi / xlo >= 4.0;
  if (xhi == xlo) xlo = x.log ? xlo / 2 : xlo - 0.5, xhi = x.log ? xhi * 2 : xhi + 0.5;
  x.lo = x.log ? xlo / 1.15 : xlo - 0.05 * (xhi - xlo);
  x.hi = x.log ? xhi * 1.15 : xhi + 0.05 * (xhi - xlo);
  x.pixel_lo = kLeft, x.pixel_hi = kWidth - kRight;
  y.log = log_y;
  if (yhi == ylo) ylo = log_y ? ylo / 2 : ylo - 0.5, yhi = log_y ? yhi * 2 : yhi + 0.5;
  y.lo = log_y ? ylo / 1.2 : ylo - 0.05 * (yhi - ylo);
  y.hi = log_y ? yhi * 1.2 : yhi + 0.05 * (yhi - ylo);
  y.pixel_lo = kHeight - kBottom, y.pixel_hi = kTop;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g stroke=\"#444\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
     << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom << "\"/></g>\n";

  // x ticks at the distinct ratios
  std::vector<double> xt;
  for (const Series& s : all)
    for (const SeriesPoint& p : s.points) xt.push_back(p.ratio);
  std::sort(xt.begin(), xt.end());
  xt.erase(std::unique(xt.begin(), xt.end()), xt.end());
  for (double t : xt)
    os << "<text x=\"" << num(x.map(t)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
       << num(t) << "</text>\n";
  std::vector<double> yt;
  if (log_y) {
    for (double e = std::floor(std::log10(y.lo)); e <= std::ceil(std::log10(y.hi)); e += 1.0) {
      const double t = std::pow(10.0, e);
      if (t >= y.lo && t <= y.hi) yt.push_back(t);
    }
  } else {
    yt = linear_ticks(y.lo, y.hi);
  }
  for (double t : yt)
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << num(y.map(t)) << "\" y2=\""
       << num(y.map(t)) << "\" stroke=\"#ddd\"/><text x=\"" << kLeft - 6 << "\" y=\"" << num(y.map(t) + 4)
       << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">ratio m/n" << (x.log ? " (log scale)" : "") << "</text>\n";

  for (std::size_t k = 0; k < all.size(); ++k) {
    const Series& s = all[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    if (s.points.empty()) continue;
    auto lower = [&](const SeriesPoint& p) { return log_y && p.mean - p.sd <= 0.0 ? y.lo : p.mean - p.sd; };
    os << "<g class=\"series\" data-label=\"" << escape(s.label) << "\">\n<polygon fill=\"" << color
       << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const SeriesPoint& p : s.points) os << num(x.map(p.ratio)) << ',' << num(y.map(p.mean + p.sd)) << ' ';
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it)
      os << num(x.map(it->ratio)) << ',' << num(y.map(lower(*it))) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const SeriesPoint& p : s.points) os << num(x.map(p.ratio)) << ',' << num(y.map(p.mean)) << ' ';
    os << "\"/>\n";
    for (const SeriesPoint& p : s.points) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "ratio=%.17g mean=%.17g sd=%.17g count=%lld", p.ratio, p.mean, p.sd,
                    static_cast<long long>(p.count));
      os << "<circle cx=\"" << num(x.map(p.ratio)) << "\" cy=\"" << num(y.map(p.mean)) << "\" r=\"3\" fill=\""
         << color << "\"><title>" << buf << "</title></circle>\n";
    }
    os << "</g>\n";
    const double ly = kTop + 14 + 18 * double(k);
    os << "<line x1=\"" << kWidth - kRight + 12 << "\" x2=\"" << kWidth - kRight + 32 << "\" y1=\"" << ly - 4
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\""
       << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_svg(const std::vector<SweepRow>& rows, const std::vector<std::string>& metrics,
                const std::filesystem::path& path, bool log_y) {
  const std::string svg = render_svg_string(rows, metrics, log_y);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << svg;
  if (!out) throw Error("short write to '" + path.string() + "'");
}

}  // namespace rfsgd
