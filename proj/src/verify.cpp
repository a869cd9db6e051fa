#include "roa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "roa/parallel.hpp"

namespace roa {

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void VerifyConfig::validate() const {
  if (!(delta_sat > 0.0)) throw VerifyError("delta_sat must be > 0");
  if (!(eps_ball > 0.0)) throw VerifyError("eps must be > 0");
  if (!(gamma > 0.0)) throw VerifyError("gamma must be > 0");
  if (max_boxes < 1) throw VerifyError("max_boxes must be >= 1");
}

VerifyConfig default_verify_config(const Grid& g, double delta_scale, double eps_ball) {
  VerifyConfig cfg;
  cfg.gamma = g.step;
  cfg.delta_sat = delta_scale * g.step;
  cfg.eps_ball = eps_ball;
  return cfg;
}

const char* to_string(CubeStatus s) {
  switch (s) {
    case CubeStatus::NotMember: return "not_member";
    case CubeStatus::Disconnected: return "disconnected";
    case CubeStatus::Verified: return "verified";
    case CubeStatus::Counterexample: return "counterexample";
    case CubeStatus::DeltaCounterexample: return "delta_counterexample";
    case CubeStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "?";
}

CubeStatus cube_status_from_string(const std::string& s) {
  for (CubeStatus c : {CubeStatus::NotMember, CubeStatus::Disconnected, CubeStatus::Verified,
                       CubeStatus::Counterexample, CubeStatus::DeltaCounterexample, CubeStatus::BudgetExhausted})
    if (s == to_string(c)) return c;
  throw VerifyError("unknown cube status '" + s + "'");
}

BoxCheck check_box(const VdotModel& m, const BoxRegion& b, double eps, double delta_sat, std::size_t max_boxes) {
  BoxCheck out;
  const double eps2 = eps * eps;
  std::vector<BoxRegion> stack{b};
  while (!stack.empty()) {
    BoxRegion box = std::move(stack.back());
    stack.pop_back();
    ++out.boxes;
    // Entirely inside the open ball: the first conjunct is false.
    if (box.norm2().hi < eps2) continue;

    const Interval enc = m.enclosure(box);
    if (enc.hi < 0.0) continue;

    const std::vector<double> mid = box.midpoint();
    const double v = m.point(mid);
    if (norm(mid) >= eps && !(v < 0.0)) {
      out.status = CubeStatus::Counterexample;
      out.point = mid;
      out.enclosure = enc;
      out.point_vdot = v;
      return out;
    }
    if (box.max_width() <= delta_sat) {
      out.status = CubeStatus::DeltaCounterexample;
      out.point = mid;
      out.enclosure = enc;
      out.point_vdot = v;
      return out;
    }
    if (out.boxes >= max_boxes) {
      out.status = CubeStatus::BudgetExhausted;
      out.point = mid;
      out.enclosure = enc;
      out.point_vdot = v;
      return out;
    }
    auto [lo, hi] = box.bisect(box.widest_dim());
    stack.push_back(std::move(hi));
    stack.push_back(std::move(lo));
  }
  return out;
}

double effective_eps(const LyapCandidate& c, const VerifyConfig& cfg) { return std::min(cfg.eps_ball, c.origin.eps); }

BoxCheck check_box(const LyapCandidate& c, const BoxRegion& b, const VerifyConfig& cfg) {
  cfg.validate();
  return check_box(CandidateVdot(c), b, effective_eps(c, cfg), cfg.delta_sat, cfg.max_boxes);
}

Hypercubes build_hypercubes(const std::vector<bool>& mask, const Grid& g, double gamma, double eps) {
  if (mask.size() != g.size()) throw VerifyError("mask size does not match the grid");
  if (std::find(mask.begin(), mask.end(), true) == mask.end()) throw VerifyError("empty member set");
  (void)gamma;  // adjacency is over grid cells; gamma only scales the cube side

  Hypercubes h;
  h.kept.assign(g.size(), false);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask[i]) continue;
    // distance from the origin to the cell
    double d2 = 0.0;
    for (std::size_t k = 0; k < g.dim(); ++k) {
      const double half = 0.5 * g.steps[k];
      const double gap = std::max(0.0, std::fabs(g.points[i][k]) - half);
      d2 += gap * gap;
    }
    if (d2 <= eps * eps * (1.0 + 1e-12) + 1e-24) {
      h.kept[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    auto idx = g.multi_index(i);
    for (std::size_t k = 0; k < g.dim(); ++k) {
      for (int s : {-1, 1}) {
        if (s < 0 && idx[k] == 0) continue;
        if (s > 0 && idx[k] + 1 >= g.shape[k]) continue;
        auto nb = idx;
        nb[k] = static_cast<std::size_t>(static_cast<long long>(idx[k]) + s);
        const std::size_t j = g.flat_index(nb);
        if (mask[j] && !h.kept[j]) {
          h.kept[j] = true;
          queue.push_back(j);
        }
      }
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (h.kept[i])
      h.indices.push_back(i);
    else if (mask[i])
      ++h.dropped;
  }
  return h;
}

PruneResult prune_by_level(std::span<const double> v, const std::vector<bool>& kept,
                           const std::vector<CubeStatus>& status) {
  if (v.size() != kept.size() || v.size() != status.size()) throw VerifyError("prune_by_level: size mismatch");
  PruneResult r;
  r.v_cut = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (kept[i] && is_failure(status[i])) r.v_cut = std::min(r.v_cut, v[i]);
  r.certified.assign(v.size(), false);
  r.pruned_by_level.assign(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!kept[i]) continue;
    if (v[i] < r.v_cut) {
      r.certified[i] = true;
    } else if (!is_failure(status[i])) {
      r.pruned_by_level[i] = true;
    }
  }
  return r;
}

void check_origin_ball(const LyapCandidate& c, double eps, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = c.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(n);
  for (std::size_t s = 0; s < samples; ++s) {
    double r2 = 0.0;
    for (auto& xi : x) {
      xi = gauss(rng);
      r2 += xi * xi;
    }
    const double r = eps * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    if (r < 1e-9 || r2 == 0.0) continue;
    const double scale = r / std::sqrt(r2);
    for (auto& xi : x) xi *= scale;
    const double vd = Vdot(c, x);
    if (!(vd < 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "origin ball check failed: Vdot = " << vd << " >= 0 at radius " << r << " inside eps = " << eps;
      throw VerifyError(os.str());
    }
  }
}

std::size_t VerifyReport::count(CubeStatus s) const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), s));
}
std::size_t VerifyReport::certified_count() const {
  return static_cast<std::size_t>(std::count(certified.begin(), certified.end(), true));
}
std::size_t VerifyReport::member_count() const {
  return static_cast<std::size_t>(std::count(member_before.begin(), member_before.end(), true));
}

VerifyReport certify(const LyapCandidate& c, const std::vector<bool>& mask, const Grid& g, const VerifyConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport r;
  r.eps_requested = cfg.eps_ball;
  r.eps_used = effective_eps(c, cfg);
  r.delta_sat = cfg.delta_sat;
  r.gamma = cfg.gamma;
  if (!(r.eps_used > 0.0)) throw VerifyError("candidate has no proven-decay ball around the origin (eps = 0)");
  check_origin_ball(c, r.eps_used);

  r.points = g.points;
  const GridValues gv = evaluate_grid(c, g, cfg.workers);
  r.V = gv.V;
  r.Vdot = gv.Vdot;
  r.member_before = mask;
  r.status.assign(g.size(), CubeStatus::NotMember);

  if (mask.size() != g.size()) throw VerifyError("mask size does not match the grid");
  Hypercubes hc;
  if (std::find(mask.begin(), mask.end(), true) != mask.end())
    hc = build_hypercubes(mask, g, cfg.gamma, r.eps_used);
  else
    hc.kept.assign(g.size(), false);
  r.dropped_disconnected = hc.dropped;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (mask[i] && !hc.kept[i]) r.status[i] = CubeStatus::Disconnected;

  const double scale = cfg.gamma / g.step;
  std::vector<BoxCheck> checks(hc.indices.size());
  const CandidateVdot model(c);
  for_each_chunk(hc.indices.size(), 1, cfg.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k)
      checks[k] = check_box(model, g.cell(hc.indices[k], scale), r.eps_used, cfg.delta_sat, cfg.max_boxes);
  });
  for (std::size_t k = 0; k < hc.indices.size(); ++k) {
    const std::size_t i = hc.indices[k];
    r.status[i] = checks[k].status;
    r.boxes_total += checks[k].boxes;
    if (is_failure(checks[k].status)) {
      r.failure_index.push_back(i);
      r.failures.push_back(checks[k]);
    }
  }

  PruneResult pr = prune_by_level(r.V, hc.kept, r.status);
  r.certified = std::move(pr.certified);
  r.pruned_by_level = std::move(pr.pruned_by_level);
  r.v_cut = pr.v_cut;
  r.c_max = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (r.certified[i]) r.c_max = std::max(r.c_max, r.V[i]);
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string report_csv(const VerifyReport& r) {
  std::ostringstream os;
  const std::size_t n = r.points.empty() ? 0 : r.points[0].size();
  os << "grid_index";
  for (std::size_t k = 0; k < n; ++k) os << ",x" << k + 1;
  os << ",V,Vdot,member_before,status,pruned_by_level,certified\n";
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    os << i;
    for (double x : r.points[i]) os << ',' << fmt17(x);
    os << ',' << fmt17(r.V[i]) << ',' << fmt17(r.Vdot[i]) << ',' << (r.member_before[i] ? 1 : 0) << ','
       << to_string(r.status[i]) << ',' << (r.pruned_by_level[i] ? 1 : 0) << ',' << (r.certified[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string counterexamples_csv(const VerifyReport& r) {
  std::ostringstream os;
  const std::size_t n = r.points.empty() ? 0 : r.points[0].size();
  os << "grid_index,status";
  for (std::size_t k = 0; k < n; ++k) os << ",p" << k + 1;
  os << ",Vdot_point,enc_lo,enc_hi,boxes\n";
  for (std::size_t k = 0; k < r.failures.size(); ++k) {
    const BoxCheck& b = r.failures[k];
    os << r.failure_index[k] << ',' << to_string(b.status);
    for (double p : b.point) os << ',' << fmt17(p);
    os << ',' << fmt17(b.point_vdot) << ',' << fmt17(b.enclosure.lo) << ',' << fmt17(b.enclosure.hi) << ','
       << b.boxes << '\n';
  }
  return os.str();
}

std::string summary_json(const VerifyReport& r, const std::string& extra_fields_json) {
  nlohmann::ordered_json j;
  j["grid_points"] = r.points.size();
  j["members"] = r.member_count();
  j["disconnected"] = r.count(CubeStatus::Disconnected);
  j["checked"] = r.member_count() - r.count(CubeStatus::Disconnected);
  j["verified"] = r.count(CubeStatus::Verified);
  j["counterexamples"] = r.count(CubeStatus::Counterexample);
  j["delta_counterexamples"] = r.count(CubeStatus::DeltaCounterexample);
  j["budget_exhausted"] = r.count(CubeStatus::BudgetExhausted);
  j["pruned_by_level"] = static_cast<std::size_t>(std::count(r.pruned_by_level.begin(), r.pruned_by_level.end(), true));
  j["certified"] = r.certified_count();
  j["c_max_empirical"] = r.c_max;
  if (std::isfinite(r.v_cut))
    j["v_cut"] = r.v_cut;
  else
    j["v_cut"] = nullptr;
  j["eps_requested"] = r.eps_requested;
  j["eps_used"] = r.eps_used;
  j["delta_sat"] = r.delta_sat;
  j["gamma"] = r.gamma;
  j["boxes_examined"] = r.boxes_total;
  j["wall_ms"] = r.wall_ms;
  const auto extra = nlohmann::ordered_json::parse(extra_fields_json);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

ReportData parse_report_csv(const std::string& text) {
  ReportData d;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw VerifyError("report CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 8 || header[0] != "grid_index" || header.back() != "certified")
    throw VerifyError("not a report CSV (unexpected header)");
  d.n = header.size() - 7;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) throw VerifyError("report CSV line " + std::to_string(lineno) + ": wrong field count");
    try {
      std::vector<double> p(d.n);
      for (std::size_t k = 0; k < d.n; ++k) p[k] = std::stod(cells[1 + k]);
      d.points.push_back(std::move(p));
      d.V.push_back(std::stod(cells[1 + d.n]));
      d.Vdot.push_back(std::stod(cells[2 + d.n]));
      d.member_before.push_back(cells[3 + d.n] == "1");
      d.status.push_back(cube_status_from_string(cells[4 + d.n]));
      d.certified.push_back(cells[6 + d.n] == "1");
    } catch (const std::invalid_argument&) {
      throw VerifyError("report CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return d;
}

}  // namespace roa
