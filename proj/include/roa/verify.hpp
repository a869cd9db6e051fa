#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roa/interval.hpp"
#include "roa/lyapunov.hpp"
#include "roa/train.hpp"

namespace roa {

class VerifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyConfig {
  double delta_sat = 0.0;  // smallest box width the search refines to
  double eps_ball = 1e-4;  // clamped to the candidate's proven-decay radius
  double gamma = 0.0;      // hypercube side
  std::size_t max_boxes = 1000000;
  unsigned workers = 1;

  void validate() const;
};

// Defaults for a grid: gamma = step, delta_sat = delta_scale * step.
VerifyConfig default_verify_config(const Grid& g, double delta_scale = 1e-6, double eps_ball = 1e-4);

enum class CubeStatus {
  NotMember,
  Disconnected,  // member, but not connected to the origin through members
  Verified,
  Counterexample,
  DeltaCounterexample,
  BudgetExhausted,
};

const char* to_string(CubeStatus s);
CubeStatus cube_status_from_string(const std::string& s);
inline bool is_failure(CubeStatus s) {
  return s == CubeStatus::Counterexample || s == CubeStatus::DeltaCounterexample || s == CubeStatus::BudgetExhausted;
}

// The checker only needs Vdot at points and over boxes, so tests can plug in
// an analytic function.
class VdotModel {
 public:
  virtual ~VdotModel() = default;
  virtual double point(std::span<const double> x) const = 0;
  virtual Interval enclosure(const BoxRegion& b) const = 0;
};

class CandidateVdot final : public VdotModel {
 public:
  explicit CandidateVdot(const LyapCandidate& c) : c_(c) {}
  double point(std::span<const double> x) const override { return Vdot(c_, x); }
  Interval enclosure(const BoxRegion& b) const override { return Vdot_interval(c_, b); }

 private:
  const LyapCandidate& c_;
};

struct BoxCheck {
  CubeStatus status = CubeStatus::Verified;
  std::vector<double> point;       // witness for failures
  Interval enclosure{0.0};         // Vdot enclosure of the witness box
  double point_vdot = 0.0;
  std::size_t boxes = 0;           // sub-boxes examined
};

// Branch and bound on  ||x|| >= eps  and  Vdot(x) >= 0  over `b`.
BoxCheck check_box(const VdotModel& m, const BoxRegion& b, double eps, double delta_sat, std::size_t max_boxes);
BoxCheck check_box(const LyapCandidate& c, const BoxRegion& b, const VerifyConfig& cfg);

// eps actually used: min(cfg.eps_ball, c.origin.eps).
double effective_eps(const LyapCandidate& c, const VerifyConfig& cfg);

struct Hypercubes {
  std::vector<std::size_t> indices;  // grid indices of kept cubes, ascending
  std::vector<bool> kept;            // per grid point
  std::size_t dropped = 0;           // members outside the origin component
};

// Keeps the members whose cells connect to the origin (cells touching the
// closed eps-ball seed a face-adjacent flood fill).
Hypercubes build_hypercubes(const std::vector<bool>& mask, const Grid& g, double gamma, double eps = 0.0);

// Level pruning: a failure at level V_i removes every point with V >= V_i.
struct PruneResult {
  std::vector<bool> certified;
  std::vector<bool> pruned_by_level;  // kept cube removed only because of another cube's failure
  double v_cut = 0.0;                 // +inf when nothing failed
};
PruneResult prune_by_level(std::span<const double> v, const std::vector<bool>& kept,
                           const std::vector<CubeStatus>& status);

struct VerifyReport {
  std::vector<std::vector<double>> points;
  std::vector<double> V, Vdot;
  std::vector<bool> member_before;
  std::vector<CubeStatus> status;
  std::vector<bool> pruned_by_level;
  std::vector<bool> certified;
  std::vector<BoxCheck> failures;  // failing cubes, ascending grid index
  std::vector<std::size_t> failure_index;

  double eps_used = 0.0;
  double eps_requested = 0.0;
  double delta_sat = 0.0;
  double gamma = 0.0;
  double c_max = 0.0;  // max V over certified points (0 when empty)
  double v_cut = 0.0;
  std::size_t boxes_total = 0;
  std::size_t dropped_disconnected = 0;
  double wall_ms = 0.0;

  std::size_t count(CubeStatus s) const;
  std::size_t certified_count() const;
  std::size_t member_count() const;
};

// Samples `samples` points in B_eps \ B_1e-9 and throws VerifyError if any has
// Vdot >= 0.
void check_origin_ball(const LyapCandidate& c, double eps, std::size_t samples = 10000, std::uint64_t seed = 1);

VerifyReport certify(const LyapCandidate& c, const std::vector<bool>& mask, const Grid& g, const VerifyConfig& cfg);

// Files. All reals use 17 significant digits.
std::string report_csv(const VerifyReport& r);
std::string counterexamples_csv(const VerifyReport& r);
std::string summary_json(const VerifyReport& r, const std::string& extra_fields_json = "{}");

// Just enough of a report CSV to redraw figures.
struct ReportData {
  std::size_t n = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> V, Vdot;
  std::vector<bool> member_before, certified;
  std::vector<CubeStatus> status;
};
ReportData parse_report_csv(const std::string& text);

}  // namespace roa
