#include "roa/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace roa {

namespace {

// Plot geometry shared by all figures.
constexpr double kSize = 560.0;
constexpr double kMargin = 56.0;
constexpr double kPlot = kSize - 2 * kMargin;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * kPlot; }
  double py(double y) const { return kMargin + (y1 - y) / (y1 - y0) * kPlot; }
};

std::string rgb(const std::array<double, 3>& c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(std::clamp(c[0], 0.0, 1.0) * 255)),
                static_cast<int>(std::lround(std::clamp(c[1], 0.0, 1.0) * 255)),
                static_cast<int>(std::lround(std::clamp(c[2], 0.0, 1.0) * 255)));
  return buf;
}

std::array<double, 3> ramp(const std::vector<std::array<double, 3>>& stops, double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(stops.size() - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double u = t - static_cast<double>(k);
  std::array<double, 3> c{};
  for (int i = 0; i < 3; ++i) c[i] = stops[k][i] * (1 - u) + stops[k + 1][i] * u;
  return c;
}

const std::vector<std::array<double, 3>> kSequential = {
    {0.267, 0.005, 0.329}, {0.230, 0.322, 0.546}, {0.128, 0.567, 0.551}, {0.369, 0.789, 0.383}, {0.993, 0.906, 0.144}};
const std::vector<std::array<double, 3>> kDiverging = {
    {0.019, 0.188, 0.380}, {0.573, 0.773, 0.871}, {0.969, 0.969, 0.969}, {0.957, 0.647, 0.510}, {0.404, 0.000, 0.122}};

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize + 40
     << "\" viewBox=\"0 0 " << kSize << ' ' << kSize + 40 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kSize / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  return os.str();
}

std::string axes(const Frame& f, const std::string& xname, const std::string& yname) {
  std::ostringstream os;
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot << "\" height=\"" << kPlot
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<line x1=\"" << num(f.px(x)) << "\" y1=\"" << num(kMargin + kPlot) << "\" x2=\"" << num(f.px(x))
       << "\" y2=\"" << num(kMargin + kPlot + 5) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << num(kMargin + kPlot + 18) << "\" text-anchor=\"middle\">"
       << num(x) << "</text>\n";
    os << "<line x1=\"" << num(kMargin - 5) << "\" y1=\"" << num(f.py(y)) << "\" x2=\"" << num(kMargin)
       << "\" y2=\"" << num(f.py(y)) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(kMargin - 8) << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
       << "</text>\n";
  }
  os << "<text x=\"" << kSize / 2 << "\" y=\"" << num(kMargin + kPlot + 36) << "\" text-anchor=\"middle\">" << xname
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << kSize / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kSize / 2
     << ")\">" << yname << "</text>\n";
  return os.str();
}

std::string segments_path(const Frame& f, const std::vector<Segment>& segs, const std::string& stroke, double width,
                          const std::string& extra = "") {
  if (segs.empty()) return "";
  std::ostringstream os;
  os << "<path fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"" << extra << " d=\"";
  for (const auto& s : segs)
    os << 'M' << num(f.px(s.x0)) << ' ' << num(f.py(s.y0)) << 'L' << num(f.px(s.x1)) << ' ' << num(f.py(s.y1));
  os << "\"/>\n";
  return os.str();
}

// Coarse cell mosaic of a field; cheaper than per-pixel rects.
std::string heatmap(const Frame& f, const Field2D& field, const std::function<std::string(double)>& color,
                    std::size_t cells) {
  std::ostringstream os;
  os << "<g shape-rendering=\"crispEdges\">\n";
  const double w = (f.x1 - f.x0) / static_cast<double>(cells), h = (f.y1 - f.y0) / static_cast<double>(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    for (std::size_t i = 0; i < cells; ++i) {
      const auto ix = static_cast<std::size_t>(std::lround((i + 0.5) / cells * static_cast<double>(field.nx - 1)));
      const auto iy = static_cast<std::size_t>(std::lround((j + 0.5) / cells * static_cast<double>(field.ny - 1)));
      const double x = f.x0 + i * w, y = f.y0 + (j + 1) * h;
      os << "<rect x=\"" << num(f.px(x)) << "\" y=\"" << num(f.py(y)) << "\" width=\"" << num(kPlot / cells + 0.5)
         << "\" height=\"" << num(kPlot / cells + 0.5) << "\" fill=\"" << color(field.at(ix, iy)) << "\"/>\n";
    }
  }
  os << "</g>\n";
  return os.str();
}

double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::fabs(a - b) <= 1e-9 * (1 + std::fabs(a)); }),
          v.end());
  return v;
}

struct GridShape {
  std::vector<double> xs, ys;
  double hx = 0, hy = 0;
};

GridShape grid_shape(const ReportData& d) {
  if (d.n != 2) throw std::runtime_error("figures need a 2-D system");
  std::vector<double> xs, ys;
  for (const auto& p : d.points) {
    xs.push_back(p[0]);
    ys.push_back(p[1]);
  }
  GridShape g;
  g.xs = sorted_unique(xs);
  g.ys = sorted_unique(ys);
  if (g.xs.size() < 2 || g.ys.size() < 2 || g.xs.size() * g.ys.size() != d.points.size())
    throw std::runtime_error("report points do not form a full grid");
  g.hx = (g.xs.back() - g.xs.front()) / static_cast<double>(g.xs.size() - 1);
  g.hy = (g.ys.back() - g.ys.front()) / static_cast<double>(g.ys.size() - 1);
  return g;
}

}  // namespace

Field2D sample_field(const BoxRegion& domain, std::size_t res, const std::function<double(double, double)>& fn) {
  if (domain.dim() != 2 || res < 2) throw std::runtime_error("sample_field needs a 2-D domain and res >= 2");
  Field2D f;
  f.x0 = domain[0].lo;
  f.x1 = domain[0].hi;
  f.y0 = domain[1].lo;
  f.y1 = domain[1].hi;
  f.nx = f.ny = res;
  f.v.resize(res * res);
  for (std::size_t iy = 0; iy < res; ++iy)
    for (std::size_t ix = 0; ix < res; ++ix) f.v[iy * res + ix] = fn(f.x(ix), f.y(iy));
  return f;
}

std::vector<Segment> marching_squares(const Field2D& f, double level) {
  std::vector<Segment> out;
  if (f.nx < 2 || f.ny < 2) return out;
  for (std::size_t iy = 0; iy + 1 < f.ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < f.nx; ++ix) {
      // corners counter-clockwise from bottom-left
      const double v[4] = {f.at(ix, iy), f.at(ix + 1, iy), f.at(ix + 1, iy + 1), f.at(ix, iy + 1)};
      if (!std::all_of(v, v + 4, [](double a) { return std::isfinite(a); })) continue;
      const double cx[4] = {f.x(ix), f.x(ix + 1), f.x(ix + 1), f.x(ix)};
      const double cy[4] = {f.y(iy), f.y(iy), f.y(iy + 1), f.y(iy + 1)};
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (v[k] >= level) code |= 1 << k;
      if (code == 0 || code == 15) continue;

      // crossing point on edge k (between corner k and k+1)
      auto cross = [&](int k, double& x, double& y) {
        const int a = k, b = (k + 1) % 4;
        const double t = (level - v[a]) / (v[b] - v[a]);
        x = cx[a] + t * (cx[b] - cx[a]);
        y = cy[a] + t * (cy[b] - cy[a]);
      };
      auto emit = [&](int e0, int e1) {
        Segment s{};
        cross(e0, s.x0, s.y0);
        cross(e1, s.x1, s.y1);
        out.push_back(s);
      };
      // An edge is crossed when its two corners disagree.
      std::vector<int> edges;
      for (int k = 0; k < 4; ++k)
        if (((code >> k) & 1) != ((code >> ((k + 1) % 4)) & 1)) edges.push_back(k);
      if (edges.size() == 2) {
        emit(edges[0], edges[1]);
      } else {
        // saddle: corners 0 and 2 agree
        const bool center_high = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= level;
        const bool c0_high = (code & 1) != 0;
        if (center_high == c0_high) {
          emit(0, 1);
          emit(2, 3);
        } else {
          emit(3, 0);
          emit(1, 2);
        }
      }
    }
  }
  return out;
}

std::vector<Segment> cell_union_boundary(const ReportData& d, const std::vector<bool>& cells) {
  const GridShape g = grid_shape(d);
  const std::size_t nx = g.xs.size(), ny = g.ys.size();
  // Report points are ordered with x1 fastest, but index by value to be safe.
  std::vector<int> occ(nx * ny, 0);
  auto locate = [](const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v - 1e-9 * (1 + std::fabs(v))) - axis.begin());
  };
  for (std::size_t i = 0; i < d.points.size(); ++i)
    if (cells[i]) occ[locate(g.ys, d.points[i][1]) * nx + locate(g.xs, d.points[i][0])] = 1;
  auto in = [&](long ix, long iy) {
    return ix >= 0 && iy >= 0 && ix < static_cast<long>(nx) && iy < static_cast<long>(ny) && occ[iy * nx + ix];
  };
  std::vector<Segment> out;
  for (long iy = 0; iy < static_cast<long>(ny); ++iy) {
    for (long ix = 0; ix < static_cast<long>(nx); ++ix) {
      if (!in(ix, iy)) continue;
      const double xl = g.xs[ix] - g.hx / 2, xr = g.xs[ix] + g.hx / 2;
      const double yb = g.ys[iy] - g.hy / 2, yt = g.ys[iy] + g.hy / 2;
      if (!in(ix - 1, iy)) out.push_back({xl, yb, xl, yt});
      if (!in(ix + 1, iy)) out.push_back({xr, yb, xr, yt});
      if (!in(ix, iy - 1)) out.push_back({xl, yb, xr, yb});
      if (!in(ix, iy + 1)) out.push_back({xl, yt, xr, yt});
    }
  }
  return out;
}

Field2D report_field(const ReportData& d, const std::vector<double>& values) {
  const GridShape g = grid_shape(d);
  Field2D f;
  f.nx = g.xs.size();
  f.ny = g.ys.size();
  f.x0 = g.xs.front();
  f.x1 = g.xs.back();
  f.y0 = g.ys.front();
  f.y1 = g.ys.back();
  f.v.assign(f.nx * f.ny, std::nan(""));
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto ix = static_cast<std::size_t>(std::lround((d.points[i][0] - f.x0) / g.hx));
    const auto iy = static_cast<std::size_t>(std::lround((d.points[i][1] - f.y0) / g.hy));
    f.v[iy * f.nx + ix] = values[i];
  }
  return f;
}

FigureSet render_figures(const ReportInputs& in) {
  if (!in.nn || !in.nn_report) throw std::runtime_error("report needs the neural model and its verification report");
  const LyapCandidate& c = *in.nn;
  const DynSystem& sys = *c.sys;
  if (sys.dim() != 2 || in.nn_report->n != 2) throw std::runtime_error("figures are only drawn for 2-D systems");
  const std::string xname = sys.state_names[0], yname = sys.state_names[1];

  const Frame frame{sys.domain[0].lo, sys.domain[0].hi, sys.domain[1].lo, sys.domain[1].hi};
  FigureSet out;

  Field2D fv, fvd;
  {
    std::vector<double> x(2);
    fv = sample_field(sys.domain, in.render_res, [&](double a, double b) {
      x[0] = a;
      x[1] = b;
      return V(c, x);
    });
    fvd = sample_field(sys.domain, in.render_res, [&](double a, double b) {
      x[0] = a;
      x[1] = b;
      return Vdot(c, x);
    });
  }
  {
    std::ostringstream os;
    os << xname << ',' << yname << ",V,Vdot\n";
    for (std::size_t iy = 0; iy < fv.ny; ++iy)
      for (std::size_t ix = 0; ix < fv.nx; ++ix)
        os << g17(fv.x(ix)) << ',' << g17(fv.y(iy)) << ',' << g17(fv.at(ix, iy)) << ',' << g17(fvd.at(ix, iy)) << '\n';
    out.fields_csv = os.str();
  }

  // (a) Lyapunov function: quantile-spaced levels.
  {
    std::vector<double> levels;
    for (int k = 1; k <= 12; ++k) levels.push_back(quantile(fv.v, k / 13.0));
    levels = sorted_unique(levels);
    const double lo = quantile(fv.v, 0.0), hi = quantile(fv.v, 0.98);
    std::ostringstream os;
    os << svg_open("Lyapunov function V (" + sys.name + ")");
    os << heatmap(frame, fv, [&](double v) { return rgb(ramp(kSequential, std::sqrt(std::max(0.0, (v - lo) / (hi - lo))))); }, 100);
    for (double L : levels) os << segments_path(frame, marching_squares(fv, L), "black", 0.6, " stroke-opacity=\"0.6\"");
    os << axes(frame, xname, yname) << "</svg>\n";
    out.V_svg = os.str();
  }

  // (b) derivative: diverging map, zero level in bold.
  {
    std::vector<double> mags;
    for (double v : fvd.v) mags.push_back(std::fabs(v));
    const double scale = std::max(quantile(mags, 0.95), 1e-12);
    std::ostringstream os;
    os << svg_open("Lyapunov derivative dV/dt (" + sys.name + ")");
    os << heatmap(frame, fvd, [&](double v) { return rgb(ramp(kDiverging, 0.5 + 0.5 * std::clamp(v / scale, -1.0, 1.0))); }, 100);
    for (double q : {-0.5, -0.25, -0.1, 0.1, 0.25, 0.5})
      os << segments_path(frame, marching_squares(fvd, q * scale), "#444444", 0.5, " stroke-dasharray=\"3 2\"");
    os << segments_path(frame, marching_squares(fvd, 0.0), "black", 1.6);
    os << axes(frame, xname, yname) << "</svg>\n";
    out.Vdot_svg = os.str();
  }

  // (c) phase portrait and region estimates.
  {
    std::vector<RoaOverlay> overlays;
    const ReportData& nr = *in.nn_report;
    overlays.push_back({"NN trained estimate", "#1f4fd8", cell_union_boundary(nr, nr.member_before)});
    overlays.push_back({"NN verified inner approximation", "#1a9e3a", cell_union_boundary(nr, nr.certified)});
    auto quad_curve = [&](const ReportData* r, const char* label, const char* color) {
      if (!r) return;
      double cmax = -1.0;
      for (std::size_t i = 0; i < r->V.size(); ++i)
        if (r->certified[i]) cmax = std::max(cmax, r->V[i]);
      std::vector<Segment> segs;
      if (cmax > 0.0) segs = marching_squares(report_field(*r, r->V), cmax);
      overlays.push_back({label, color, std::move(segs)});
    };
    quad_curve(in.quad_report, "quadratic V = x'P1x", "#d62728");
    quad_curve(in.opt_report, "optimized quadratic", "#ff8c00");

    std::ostringstream os;
    os << svg_open("Region of attraction estimates (" + sys.name + ")");
    os << "<g fill=\"none\" stroke=\"#9a9a9a\" stroke-width=\"0.7\">\n";
    const std::size_t ns = in.stream_seeds;
    const double span = std::max(frame.x1 - frame.x0, frame.y1 - frame.y0);
    for (std::size_t j = 0; j < ns; ++j) {
      for (std::size_t i = 0; i < ns; ++i) {
        const std::vector<double> x0{frame.x0 + (i + 0.5) / ns * (frame.x1 - frame.x0),
                                     frame.y0 + (j + 0.5) / ns * (frame.y1 - frame.y0)};
        Trajectory tr;
        try {
          tr = integrate_rk4(sys, x0, 0.002 * span, 8.0, 1e-3 * span);
        } catch (const std::exception&) {
          continue;
        }
        os << "<path d=\"";
        for (std::size_t k = 0; k < tr.states.size(); k += 4) {
          const auto& s = tr.states[k];
          if (!sys.domain.contains(s)) break;
          os << (k == 0 ? 'M' : 'L') << num(frame.px(s[0])) << ' ' << num(frame.py(s[1]));
        }
        os << "\"/>\n";
        os << "<circle cx=\"" << num(frame.px(x0[0])) << "\" cy=\"" << num(frame.py(x0[1]))
           << "\" r=\"1.2\" fill=\"#9a9a9a\" stroke=\"none\"/>\n";
      }
    }
    os << "</g>\n";
    for (const auto& o : overlays) os << segments_path(frame, o.segments, o.color, 2.0, " stroke-linecap=\"square\"");
    for (const auto& m : sys.marked_points) {
      if (m.size() != 2) continue;
      const double px = frame.px(m[0]), py = frame.py(m[1]);
      os << "<path d=\"M" << num(px - 5) << ' ' << num(py - 5) << "L" << num(px + 5) << ' ' << num(py + 5) << "M"
         << num(px - 5) << ' ' << num(py + 5) << "L" << num(px + 5) << ' ' << num(py - 5)
         << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    os << "<circle cx=\"" << num(frame.px(0)) << "\" cy=\"" << num(frame.py(0)) << "\" r=\"3\" fill=\"black\"/>\n";
    if (std::none_of(nr.certified.begin(), nr.certified.end(), [](bool b) { return b; }))
      os << "<text x=\"" << kSize / 2 << "\" y=\"" << num(kMargin + 20)
         << "\" text-anchor=\"middle\" font-size=\"14\" fill=\"#b00000\">empty certified set</text>\n";
    // legend
    double ly = kMargin + kPlot + 52;
    double lx = kMargin;
    for (const auto& o : overlays) {
      os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 18) << "\" y2=\"" << num(ly - 4)
         << "\" stroke=\"" << o.color << "\" stroke-width=\"3\"/>";
      os << "<text x=\"" << num(lx + 22) << "\" y=\"" << num(ly) << "\">" << o.label
         << (o.segments.empty() ? " (empty)" : "") << "</text>\n";
      lx += 225;
      if (lx > kSize - 200) {
        lx = kMargin;
        ly += 14;
      }
    }
    os << axes(frame, xname, yname) << "</svg>\n";
    out.roa_svg = os.str();
  }
  {
    const ReportData& nr = *in.nn_report;
    auto same_grid = [&](const ReportData* r) {
      return r && r->points.size() == nr.points.size() && r->n == nr.n;
    };
    std::ostringstream os;
    os << "grid_index," << xname << ',' << yname << ",nn_V,nn_member,nn_certified";
    if (same_grid(in.quad_report)) os << ",quadratic_certified";
    if (same_grid(in.opt_report)) os << ",optimized_certified";
    os << '\n';
    for (std::size_t i = 0; i < nr.points.size(); ++i) {
      os << i << ',' << g17(nr.points[i][0]) << ',' << g17(nr.points[i][1]) << ',' << g17(nr.V[i]) << ','
         << (nr.member_before[i] ? 1 : 0) << ',' << (nr.certified[i] ? 1 : 0);
      if (same_grid(in.quad_report)) os << ',' << (in.quad_report->certified[i] ? 1 : 0);
      if (same_grid(in.opt_report)) os << ',' << (in.opt_report->certified[i] ? 1 : 0);
      os << '\n';
    }
    out.combined_csv = os.str();
  }
  return out;
}

}  // namespace roa
