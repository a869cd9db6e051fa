#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roa/dynamics.hpp"
#include "roa/lyapunov.hpp"
#include "roa/net.hpp"

namespace roa {

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell-centered uniform grid. Point index is row-major with dimension 0
// varying fastest.
struct Grid {
  std::vector<std::vector<double>> points;
  std::vector<double> steps;        // per dimension
  std::vector<std::size_t> shape;   // per dimension
  BoxRegion domain;
  double step = 0.0;                // gamma; equals steps[0] (all equal on square domains)

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return shape.size(); }
  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> idx) const;
  BoxRegion cell(std::size_t flat, double scale = 1.0) const;
};

Grid make_grid(const BoxRegion& domain, std::size_t per_dim);

struct TrainConfig {
  std::size_t hidden = 512;
  double lr = 5e-4;
  std::size_t epochs = 2000;
  std::size_t grid_per_dim = 50;
  double eps_vdot = 1e-3;
  double sigmoid_k = 50.0;
  double beta = 1.2;
  std::uint64_t seed = 0;
  double delta = 0.0;     // origin-analysis radius; 0 selects one grid step
  unsigned workers = 1;

  void validate() const;
};

// Hard discrete estimate: mask[i] iff no j has V_j <= V_i and Vdot_j > -eps_vdot.
std::vector<bool> roa_membership_hard(std::span<const double> v, std::span<const double> vdot, double eps_vdot);
std::size_t cardinality(const std::vector<bool>& mask);

struct SmoothCardinality {
  double loss = 0.0;               // -N + sum_i max_j s(k(V_i - V_j)) s(k(Vdot_j + eps))
  std::vector<double> dV;          // d loss / d V_i
  std::vector<double> dVdot;       // d loss / d Vdot_i
  std::vector<std::size_t> argmax; // maximizing j for every i
  double dk = 0.0;                 // d loss / d k
};

// Smooth surrogate for -card(R_G) on raw level/derivative values; `k` is the
// effective sigmoid sharpness.
SmoothCardinality smooth_cardinality(std::span<const double> v, std::span<const double> vdot, double eps_vdot,
                                     double k);

struct GridValues {
  std::vector<double> V;
  std::vector<double> Vdot;
};

GridValues evaluate_grid(const LyapCandidate& c, const Grid& g, unsigned workers = 1);
double median_abs(std::span<const double> v);
// Index of the upper median of |v| (ties broken by index).
std::size_t median_index(std::span<const double> v);

struct LossResult {
  double loss = 0.0;
  std::size_t hard_cardinality = 0;
  double level_scale = 1.0;
  GridValues values;
  NetParams grad;       // full gradient, including the P_theta path
  DenseMatrix grad_P;   // d loss / d P_theta (free matrix)
};

// Smooth loss and gradient. Sharpness is cfg.sigmoid_k / level_scale; when
// `level_scale` is empty, the median |V| over the grid is used and the
// gradient includes its dependence on theta. A fixed scale is a constant.
LossResult loss_smooth(const LyapCandidate& c, const Grid& g, const TrainConfig& cfg,
                       std::optional<double> level_scale = std::nullopt);

// Adam on a flat parameter vector.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double smooth_loss = 0.0;
  std::size_t hard_cardinality = 0;
  double alpha = 0.0;
  double eps = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  LyapCandidate candidate;     // best hard cardinality seen
  std::size_t best_epoch = 0;
  std::size_t best_cardinality = 0;
  std::vector<TrainLogRow> log;
  bool diverged = false;
  Grid grid;
};

TrainResult train(SystemPtr sys, const TrainConfig& cfg);

// optimize = false: V = x^T P1 x.  optimize = true: V = x^T (L L^T + 1e-6 I) x
// with L trained on the same smooth loss, starting from chol(P1).
TrainResult train_quadratic_baseline(SystemPtr sys, const TrainConfig& cfg, bool optimize);

std::string train_log_csv(const std::vector<TrainLogRow>& log);

// Effective analysis radius: cfg.delta, or one grid step when unset, capped
// at the domain radius.
double origin_delta(const TrainConfig& cfg, const Grid& g, const DynSystem& sys);

}  // namespace roa
