#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "roa/cli.hpp"
#include "roa/expr.hpp"
#include "roa/model_io.hpp"
#include "roa/train.hpp"
#include "roa/verify.hpp"
#include "roa/version.hpp"

namespace py = pybind11;
using namespace roa;

namespace {

using Rows = std::vector<std::vector<double>>;

DenseMatrix to_matrix(const Rows& rows) {
  if (rows.empty()) throw py::value_error("empty matrix");
  DenseMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw py::value_error("ragged matrix");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Rows to_rows(const DenseMatrix& m) {
  Rows out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

TrainConfig make_config(std::size_t hidden, double lr, std::size_t epochs, std::size_t grid, std::uint64_t seed,
                        double eps_vdot, double sigmoid_k, double beta, unsigned workers) {
  TrainConfig c;
  c.hidden = hidden;
  c.lr = lr;
  c.epochs = epochs;
  c.grid_per_dim = grid;
  c.seed = seed;
  c.eps_vdot = eps_vdot;
  c.sigmoid_k = sigmoid_k;
  c.beta = beta;
  c.workers = workers;
  return c;
}

py::dict train_result(const TrainResult& r, const TrainConfig& cfg, const std::string& kind) {
  ModelMeta meta;
  meta.kind = kind;
  meta.train = cfg;
  meta.best_epoch = r.best_epoch;
  meta.best_cardinality = r.best_cardinality;
  py::list log;
  for (const auto& row : r.log) {
    py::dict d;
    d["epoch"] = row.epoch;
    d["smooth_loss"] = row.smooth_loss;
    d["hard_cardinality"] = row.hard_cardinality;
    d["alpha"] = row.alpha;
    d["eps"] = row.eps;
    log.append(d);
  }
  py::dict out;
  out["model_json"] = model_to_json(r.candidate, meta);
  out["best_epoch"] = r.best_epoch;
  out["best_cardinality"] = r.best_cardinality;
  out["diverged"] = r.diverged;
  out["log"] = log;
  return out;
}

// Loaded model kept alive on the Python side.
struct PyModel {
  LoadedModel m;

  double v(const std::vector<double>& x) const { return V(m.candidate, x); }
  double vdot(const std::vector<double>& x) const { return Vdot(m.candidate, x); }

  py::dict verify(double delta_scale, double eps, std::size_t max_boxes, unsigned workers) const {
    VerifyConfig vc = default_verify_config(m.grid, delta_scale, eps);
    vc.max_boxes = max_boxes;
    vc.workers = workers;
    VerifyReport r;
    {
      py::gil_scoped_release release;
      const GridValues gv = evaluate_grid(m.candidate, m.grid, workers);
      const auto mask = roa_membership_hard(gv.V, gv.Vdot, m.meta.train.eps_vdot);
      r = certify(m.candidate, mask, m.grid, vc);
    }
    py::dict out;
    out["members"] = r.member_count();
    out["certified"] = r.certified_count();
    out["verified"] = r.count(CubeStatus::Verified);
    out["counterexamples"] = r.count(CubeStatus::Counterexample);
    out["delta_counterexamples"] = r.count(CubeStatus::DeltaCounterexample);
    out["budget_exhausted"] = r.count(CubeStatus::BudgetExhausted);
    out["c_max"] = r.c_max;
    out["eps_used"] = r.eps_used;
    out["delta_sat"] = r.delta_sat;
    out["report_csv"] = report_csv(r);
    out["summary_json"] = summary_json(r);
    return out;
  }
};

}  // namespace

PYBIND11_MODULE(_roacert, mod) {
  mod.doc() = "Neural Lyapunov training and region-of-attraction certification";
  mod.attr("__version__") = kVersion;

  mod.def("systems", &builtin_system_names, "Names of the builtin systems");
  mod.def("system_config", &builtin_system_config, py::arg("name"));

  mod.def(
      "eval_expr",
      [](const std::string& text, const std::vector<std::string>& names, const std::vector<double>& x) {
        return eval_point(parse_expr(text, names), x);
      },
      py::arg("text"), py::arg("names"), py::arg("x"));
  mod.def(
      "eval_expr_interval",
      [](const std::string& text, const std::vector<std::string>& names,
         const std::vector<std::pair<double, double>>& box) {
        std::vector<Interval> dims;
        for (auto [lo, hi] : box) dims.emplace_back(lo, hi);
        const Interval r = eval_interval(parse_expr(text, names), BoxRegion(std::move(dims)));
        return std::make_pair(r.lo, r.hi);
      },
      py::arg("text"), py::arg("names"), py::arg("box"));
  mod.def(
      "differentiate",
      [](const std::string& text, const std::vector<std::string>& names, std::size_t wrt) {
        return to_string(differentiate(parse_expr(text, names), wrt), names);
      },
      py::arg("text"), py::arg("names"), py::arg("wrt"));

  mod.def(
      "solve_lyapunov", [](const Rows& a, const Rows& q) { return to_rows(solve_lyapunov(to_matrix(a), to_matrix(q))); },
      py::arg("A"), py::arg("Q"));
  mod.def(
      "eig_extrema",
      [](const Rows& m) {
        const EigExtrema e = sym_eig_extrema(to_matrix(m));
        return std::make_pair(e.lambda_min, e.lambda_max);
      },
      py::arg("M"));

  mod.def(
      "membership_hard",
      [](const std::vector<double>& v, const std::vector<double>& vdot, double eps_vdot) {
        return roa_membership_hard(v, vdot, eps_vdot);
      },
      py::arg("V"), py::arg("Vdot"), py::arg("eps_vdot"));

  mod.def(
      "train",
      [](const std::string& system, std::size_t hidden, double lr, std::size_t epochs, std::size_t grid,
         std::uint64_t seed, double eps_vdot, double sigmoid_k, double beta, unsigned workers) {
        const TrainConfig cfg = make_config(hidden, lr, epochs, grid, seed, eps_vdot, sigmoid_k, beta, workers);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(resolve_system(system), cfg);
        }
        return train_result(r, cfg, "neural");
      },
      py::arg("system"), py::arg("hidden") = 512, py::arg("lr") = 5e-4, py::arg("epochs") = 2000,
      py::arg("grid") = 50, py::arg("seed") = 0, py::arg("eps_vdot") = 1e-3, py::arg("sigmoid_k") = 50.0,
      py::arg("beta") = 1.2, py::arg("workers") = 1);

  mod.def(
      "train_baseline",
      [](const std::string& system, bool optimize, double lr, std::size_t epochs, std::size_t grid,
         std::uint64_t seed, double eps_vdot, double sigmoid_k, unsigned workers) {
        const TrainConfig cfg = make_config(1, lr, epochs, grid, seed, eps_vdot, sigmoid_k, 1.2, workers);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train_quadratic_baseline(resolve_system(system), cfg, optimize);
        }
        return train_result(r, cfg, optimize ? "optimized" : "quadratic");
      },
      py::arg("system"), py::arg("optimize") = false, py::arg("lr") = 5e-4, py::arg("epochs") = 2000,
      py::arg("grid") = 50, py::arg("seed") = 0, py::arg("eps_vdot") = 1e-3, py::arg("sigmoid_k") = 50.0,
      py::arg("workers") = 1);

  py::class_<PyModel>(mod, "Model")
      .def_static("from_json", [](const std::string& text) { return PyModel{model_from_json(text)}; },
                  py::arg("text"))
      .def_property_readonly("kind", [](const PyModel& p) { return p.m.meta.kind; })
      .def_property_readonly("system", [](const PyModel& p) { return p.m.candidate.sys->name; })
      .def_property_readonly("alpha", [](const PyModel& p) { return p.m.candidate.alpha; })
      .def_property_readonly("eps", [](const PyModel& p) { return p.m.candidate.origin.eps; })
      .def_property_readonly("P_theta", [](const PyModel& p) { return to_rows(p.m.candidate.P_theta); })
      .def_property_readonly("grid_points", [](const PyModel& p) { return p.m.grid.points; })
      .def("V", &PyModel::v, py::arg("x"))
      .def("Vdot", &PyModel::vdot, py::arg("x"))
      .def("verify", &PyModel::verify, py::arg("delta_scale") = 1e-6, py::arg("eps") = 1e-4,
           py::arg("max_boxes") = 1000000, py::arg("workers") = 1);

  mod.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"roacert"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr)");

  py::register_exception<ParseError>(mod, "ParseError", PyExc_ValueError);
  py::register_exception<SystemError>(mod, "SystemConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);
  py::register_exception<LinalgError>(mod, "LinalgError", PyExc_ValueError);
}
