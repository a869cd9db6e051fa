#include "roa/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace roa {

std::vector<double> DynSystem::eval(std::span<const double> x) const {
  std::vector<double> out(f.size());
  eval_into(x, out);
  return out;
}

void DynSystem::eval_into(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = eval_point(f[i], x);
}

std::vector<Interval> DynSystem::eval(const BoxRegion& box) const {
  std::vector<Interval> out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(eval_interval(fi, box));
  return out;
}

DenseMatrix DynSystem::jacobian_at(std::span<const double> x) const {
  const std::size_t n = dim();
  DenseMatrix j(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) j(r, c) = eval_point(jacobian[r][c], x);
  return j;
}

DenseMatrix DynSystem::linearization() const {
  const std::vector<double> zero(dim(), 0.0);
  return jacobian_at(zero);
}

double DynSystem::domain_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& d : domain.dims()) r = std::min({r, -d.lo, d.hi});
  return r;
}

SystemPtr make_system(std::string name, std::vector<std::string> state_names, std::vector<std::string> f_text,
                      std::vector<Interval> domain, std::vector<std::vector<double>> marked_points) {
  const std::size_t n = state_names.size();
  if (n == 0) throw SystemError("system must declare at least one state");
  if (f_text.size() != n) throw SystemError("expected one dynamics expression per state");
  if (domain.size() != n) throw SystemError("domain dimension does not match the number of states");

  auto sys = std::make_shared<DynSystem>();
  sys->name = std::move(name);
  sys->state_names = std::move(state_names);
  sys->f_text = std::move(f_text);
  sys->domain = BoxRegion(std::move(domain));
  sys->marked_points = std::move(marked_points);

  for (const auto& text : sys->f_text) sys->f.push_back(parse_expr(text, sys->state_names));
  for (std::size_t i = 0; i < n; ++i)
    if (!(sys->domain[i].lo < 0.0 && 0.0 < sys->domain[i].hi))
      throw SystemError("domain must contain the origin strictly in its interior");

  sys->jacobian.assign(n, std::vector<Expr>(n));
  sys->hessian.assign(n, std::vector<std::vector<Expr>>(n, std::vector<Expr>(n)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      sys->jacobian[i][j] = differentiate(sys->f[i], j);
      for (std::size_t k = 0; k < n; ++k) sys->hessian[i][j][k] = differentiate(sys->jacobian[i][j], k);
    }

  const std::vector<double> zero(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = eval_point(sys->f[i], zero);
    if (!(std::fabs(v) <= 1e-12))
      throw SystemError("origin is not an equilibrium: f_" + std::to_string(i + 1) + "(0) = " + std::to_string(v));
  }
  if (!is_hurwitz(sys->linearization()))
    throw SystemError(
        "linearization at the origin is not Hurwitz: not all eigenvalues of A have a strictly negative real part");
  return sys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

SystemPtr load_system(const std::string& config_text) {
  std::map<std::string, nlohmann::json> kv;
  std::istringstream in(config_text);
  std::string line, pending_key, pending_value;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos && line.find('"') == std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    if (pending_key.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw SystemError("config line " + std::to_string(lineno) + ": expected key = value");
      pending_key = trim(line.substr(0, eq));
      pending_value = line.substr(eq + 1);
    } else {
      pending_value += "\n" + line;
    }
    auto parsed = nlohmann::json::parse(pending_value, nullptr, false);
    if (!parsed.is_discarded()) {
      kv[pending_key] = std::move(parsed);
      pending_key.clear();
    }
  }
  if (!pending_key.empty()) throw SystemError("config: malformed value for key '" + pending_key + "'");

  auto need = [&](const char* key) -> const nlohmann::json& {
    auto it = kv.find(key);
    if (it == kv.end()) throw SystemError(std::string("config: missing key '") + key + "'");
    return it->second;
  };
  try {
    const std::string name = need("name").get<std::string>();
    auto states = need("states").get<std::vector<std::string>>();
    auto f = need("f").get<std::vector<std::string>>();
    std::vector<Interval> domain;
    for (const auto& d : need("domain")) {
      if (!d.is_array() || d.size() != 2) throw SystemError("config: domain entries must be [lo, hi]");
      const double lo = d[0].get<double>(), hi = d[1].get<double>();
      if (!(lo < hi)) throw SystemError("config: domain interval must have lo < hi");
      domain.emplace_back(lo, hi);
    }
    std::vector<std::vector<double>> marked;
    if (auto it = kv.find("marked"); it != kv.end()) marked = it->second.get<std::vector<std::vector<double>>>();
    return make_system(name, std::move(states), std::move(f), std::move(domain), std::move(marked));
  } catch (const nlohmann::json::exception& e) {
    throw SystemError(std::string("config: ") + e.what());
  }
}

std::string system_to_config(const DynSystem& sys) {
  nlohmann::json domain = nlohmann::json::array();
  for (const auto& d : sys.domain.dims()) domain.push_back({d.lo, d.hi});
  std::ostringstream os;
  os << "name = " << nlohmann::json(sys.name).dump() << "\n";
  os << "states = " << nlohmann::json(sys.state_names).dump() << "\n";
  os << "f = " << nlohmann::json(sys.f_text).dump() << "\n";
  os << "domain = " << domain.dump() << "\n";
  if (!sys.marked_points.empty()) os << "marked = " << nlohmann::json(sys.marked_points).dump() << "\n";
  return os.str();
}

std::vector<std::string> builtin_system_names() { return {"vanderpol_reverse", "quartic_interaction"}; }

std::string builtin_system_config(const std::string& name) {
  if (name == "vanderpol_reverse")
    return "name = \"vanderpol_reverse\"\n"
           "states = [\"x1\", \"x2\"]\n"
           "f = [\"-x2\", \"x1 + (x1^2 - 1)*x2\"]\n"
           "domain = [[-3, 3], [-3, 3]]\n";
  if (name == "quartic_interaction")
    return "name = \"quartic_interaction\"\n"
           "states = [\"x1\", \"x2\"]\n"
           "f = [\"-x1*(1 - x1^2 - 2*x2 + x2^4)\", \"-x2*(1 - x1^4 - x2^2)\"]\n"
           "domain = [[-1.5, 1.5], [-1.5, 1.5]]\n"
           "marked = [[0, 1], [1, 0], [-1, 0]]\n";
  throw SystemError("unknown builtin system '" + name + "'");
}

SystemPtr builtin_system(const std::string& name) { return load_system(builtin_system_config(name)); }

SystemPtr resolve_system(const std::string& name_or_path) {
  for (const auto& b : builtin_system_names())
    if (b == name_or_path) return builtin_system(b);
  std::ifstream in(name_or_path);
  if (!in) throw SystemError("'" + name_or_path + "' is neither a builtin system nor a readable config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_system(ss.str());
}

namespace {

BoxRegion delta_box(const DynSystem& sys, double delta) {
  if (!(delta > 0.0)) throw SystemError("delta must be positive");
  if (delta > sys.domain_radius()) throw SystemError("delta exceeds the domain radius");
  return BoxRegion(std::vector<Interval>(sys.dim(), Interval(-delta, delta)));
}

}  // namespace

double bound_Cf(const DynSystem& sys, double delta) {
  const BoxRegion box = delta_box(sys, delta);
  Interval sum(0.0);
  for (const auto& row : sys.jacobian)
    for (const auto& e : row) sum += sqr(Interval(eval_interval(e, box).mag()));
  return detail::up(std::sqrt(sum.hi));
}

double bound_Cg(const DynSystem& sys, double delta) {
  const BoxRegion box = delta_box(sys, delta);
  Interval sum(0.0);
  for (const auto& plane : sys.hessian)
    for (const auto& row : plane)
      for (const auto& e : row) {
        const double m = eval_interval(e, box).mag();
        if (m > 0.0) sum += sqr(Interval(m));
      }
  if (sum.hi == 0.0) return 0.0;  // zero Hessian, no rounding slack needed
  return detail::up(0.5 * std::sqrt(sum.hi));
}

Trajectory integrate_rk4(const DynSystem& sys, std::span<const double> x0, double dt, double t_end,
                         double converge_tol) {
  if (!(dt > 0.0) || !(t_end >= dt)) throw SystemError("integrate_rk4 requires dt > 0 and t_end >= dt");
  const std::size_t n = sys.dim();
  if (x0.size() != n) throw SystemError("initial state dimension mismatch");

  Trajectory tr;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto norm = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
  };
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  if (norm(x) <= converge_tol) {
    tr.status = TrajectoryStatus::Converged;
    return tr;
  }

  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  for (std::size_t s = 1; s <= steps; ++s) {
    sys.eval_into(x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    sys.eval_into(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    sys.eval_into(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    sys.eval_into(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (double v : x)
      if (!std::isfinite(v)) throw SystemError("integrate_rk4: non-finite state encountered");
    tr.times.push_back(static_cast<double>(s) * dt);
    tr.states.push_back(x);
    if (!sys.domain.contains(x)) {
      tr.status = TrajectoryStatus::LeftDomain;
      return tr;
    }
    if (norm(x) <= converge_tol) {
      tr.status = TrajectoryStatus::Converged;
      return tr;
    }
  }
  return tr;
}

}  // namespace roa
