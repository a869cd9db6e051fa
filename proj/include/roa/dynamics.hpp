#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roa/expr.hpp"
#include "roa/interval.hpp"
#include "roa/linalg.hpp"

namespace roa {

class SystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Autonomous polynomial/tanh vector field with its equilibrium at the origin.
// Immutable after construction.
struct DynSystem {
  std::string name;
  std::vector<std::string> state_names;
  std::vector<std::string> f_text;  // source expressions, kept for serialization
  std::vector<Expr> f;
  BoxRegion domain;
  std::vector<std::vector<Expr>> jacobian;              // [i][j] = d f_i / d x_j
  std::vector<std::vector<std::vector<Expr>>> hessian;  // [i][j][k]
  std::vector<std::vector<double>> marked_points;       // e.g. known unstable equilibria, for plots

  std::size_t dim() const { return f.size(); }

  std::vector<double> eval(std::span<const double> x) const;
  void eval_into(std::span<const double> x, std::span<double> out) const;
  std::vector<Interval> eval(const BoxRegion& box) const;

  DenseMatrix jacobian_at(std::span<const double> x) const;
  DenseMatrix linearization() const;  // A = J_f(0)

  // Largest r with [-r, r]^n inside the domain.
  double domain_radius() const;
};

using SystemPtr = std::shared_ptr<const DynSystem>;

// Builds and validates a system: origin must be an equilibrium (|f_i(0)| <= 1e-12)
// and the linearization Hurwitz.
SystemPtr make_system(std::string name, std::vector<std::string> state_names, std::vector<std::string> f_text,
                      std::vector<Interval> domain, std::vector<std::vector<double>> marked_points = {});

// Parses the sectioned key-value config format:
//   name = "vanderpol_reverse"
//   states = ["x1", "x2"]
//   f = ["-x2", "x1 + (x1^2 - 1)*x2"]
//   domain = [[-3, 3], [-3, 3]]
// Optional: marked = [[0, 1], [1, 0]]
SystemPtr load_system(const std::string& config_text);
std::string system_to_config(const DynSystem& sys);

std::vector<std::string> builtin_system_names();
std::string builtin_system_config(const std::string& name);
SystemPtr builtin_system(const std::string& name);

// Builtin name or path to a config file.
SystemPtr resolve_system(const std::string& name_or_path);

// Upper bound on sup ||J_f(x)||_2 over B_delta (box-outer-approximated).
double bound_Cf(const DynSystem& sys, double delta);
// Upper bound on 1/2 sup ||H_f(x)|| over B_delta (Frobenius majorant).
double bound_Cg(const DynSystem& sys, double delta);

enum class TrajectoryStatus { Completed, Converged, LeftDomain };

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  TrajectoryStatus status = TrajectoryStatus::Completed;
};

// Fixed-step classical RK4. Stops early on leaving the domain or reaching
// ||x|| <= converge_tol.
Trajectory integrate_rk4(const DynSystem& sys, std::span<const double> x0, double dt, double t_end,
                         double converge_tol = 1e-6);

}  // namespace roa
