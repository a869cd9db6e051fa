#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roa/interval.hpp"
#include "roa/lyapunov.hpp"
#include "roa/verify.hpp"

namespace roa {

struct Segment {
  double x0, y0, x1, y1;
};

// Node-centered samples on [x0,x1] x [y0,y1]; v[iy * nx + ix].
struct Field2D {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  std::size_t nx = 0, ny = 0;
  std::vector<double> v;

  double x(std::size_t ix) const { return x0 + (x1 - x0) * static_cast<double>(ix) / static_cast<double>(nx - 1); }
  double y(std::size_t iy) const { return y0 + (y1 - y0) * static_cast<double>(iy) / static_cast<double>(ny - 1); }
  double at(std::size_t ix, std::size_t iy) const { return v[iy * nx + ix]; }
};

Field2D sample_field(const BoxRegion& domain, std::size_t res, const std::function<double(double, double)>& fn);

// Isoline segments at `level` with linear interpolation along cell edges.
// Saddle cells are split using the cell-center average.
std::vector<Segment> marching_squares(const Field2D& f, double level);

// Outer edges of a union of cells of a 2-D report grid: every cell edge whose
// neighbor across it is outside the set (or outside the grid).
std::vector<Segment> cell_union_boundary(const ReportData& d, const std::vector<bool>& cells);

// Values of a report's V on its own grid as a field (cell centers as nodes).
Field2D report_field(const ReportData& d, const std::vector<double>& values);

struct RoaOverlay {
  std::string label;
  std::string color;
  std::vector<Segment> segments;
};

struct FigureSet {
  std::string V_svg;
  std::string Vdot_svg;
  std::string roa_svg;
  std::string fields_csv;    // x1,x2,V,Vdot on the render grid
  std::string combined_csv;  // grid point membership per estimate
};

struct ReportInputs {
  const LyapCandidate* nn = nullptr;          // neural model (for the V/Vdot maps)
  const ReportData* nn_report = nullptr;      // required
  const ReportData* quad_report = nullptr;    // optional
  const ReportData* opt_report = nullptr;     // optional
  std::size_t render_res = 200;
  std::size_t stream_seeds = 12;
};

// Fails with std::runtime_error unless the system is 2-D.
FigureSet render_figures(const ReportInputs& in);

}  // namespace roa
