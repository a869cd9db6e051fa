#include "roa/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "roa/parallel.hpp"

namespace roa {

namespace {

constexpr std::size_t kChunk = 64;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::vector<std::size_t> Grid::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  return idx;
}

std::size_t Grid::flat_index(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t d = shape.size(); d-- > 0;) flat = flat * shape[d] + idx[d];
  return flat;
}

BoxRegion Grid::cell(std::size_t flat, double scale) const {
  std::vector<Interval> dims;
  dims.reserve(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    const double c = points[flat][d], half = 0.5 * steps[d] * scale;
    dims.emplace_back(c - half, c + half);
  }
  return BoxRegion(std::move(dims));
}

Grid make_grid(const BoxRegion& domain, std::size_t per_dim) {
  if (per_dim < 2) throw TrainError("make_grid: per_dim must be >= 2");
  Grid g;
  g.domain = domain;
  const std::size_t n = domain.dim();
  g.shape.assign(n, per_dim);
  for (std::size_t d = 0; d < n; ++d) g.steps.push_back(domain[d].width() / static_cast<double>(per_dim));
  g.step = g.steps[0];

  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= per_dim;
  g.points.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    const auto idx = g.multi_index(flat);
    std::vector<double> p(n);
    bool origin = true;
    for (std::size_t d = 0; d < n; ++d) {
      p[d] = domain[d].lo + (static_cast<double>(idx[d]) + 0.5) * g.steps[d];
      if (std::fabs(p[d]) > 1e-12 * g.steps[d]) origin = false;
    }
    if (origin) throw TrainError("make_grid: the origin lands on a grid point; use an even per_dim");
    g.points.push_back(std::move(p));
  }
  return g;
}

void TrainConfig::validate() const {
  if (hidden < 1) throw TrainError("hidden width must be >= 1");
  if (!(lr > 0.0)) throw TrainError("learning rate must be > 0");
  if (grid_per_dim < 2) throw TrainError("grid must have at least 2 points per dimension");
  if (!(eps_vdot > 0.0)) throw TrainError("eps_vdot must be > 0");
  if (!(sigmoid_k > 0.0)) throw TrainError("sigmoid sharpness must be > 0");
  if (!(beta > 1.0)) throw TrainError("beta must be > 1");
  if (delta < 0.0) throw TrainError("delta must be >= 0");
}

std::vector<bool> roa_membership_hard(std::span<const double> v, std::span<const double> vdot, double eps_vdot) {
  if (v.size() != vdot.size()) throw TrainError("membership: V and Vdot sizes differ");
  // The lowest violating level excludes itself and everything at or above it.
  double cut = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j)
    if (!(vdot[j] <= -eps_vdot)) cut = std::min(cut, v[j]);
  std::vector<bool> mask(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mask[i] = v[i] < cut;
  return mask;
}

std::size_t cardinality(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

SmoothCardinality smooth_cardinality(std::span<const double> v, std::span<const double> vdot, double eps_vdot,
                                     double k) {
  const std::size_t n = v.size();
  if (vdot.size() != n) throw TrainError("smooth_cardinality: V and Vdot sizes differ");
  SmoothCardinality out;
  out.dV.assign(n, 0.0);
  out.dVdot.assign(n, 0.0);
  out.argmax.assign(n, 0);

  std::vector<double> b(n);
  for (std::size_t j = 0; j < n; ++j) b[j] = sigmoid(k * (vdot[j] + eps_vdot));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return b[x] > b[y]; });

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1.0, best_a = 0.0;
    std::size_t arg = order.empty() ? 0 : order[0];
    // a_ij <= best  <=>  V_j >= V_i - logit(best)/k; such j cannot win.
    double skip_above = std::numeric_limits<double>::infinity();
    for (std::size_t j : order) {
      if (b[j] <= best) break;
      if (v[j] > skip_above) continue;
      const double a = sigmoid(k * (v[i] - v[j]));
      const double prod = a * b[j];
      if (prod > best) {
        best = prod;
        best_a = a;
        arg = j;
        if (best >= 1.0) break;
        if (best > 0.0) {
          const double margin = std::log(best / (1.0 - best)) / k;
          skip_above = v[i] - margin + 1e-12 * (std::fabs(v[i]) + std::fabs(margin));
        }
      }
    }
    total += best;
    out.argmax[i] = arg;
    const double bj = b[arg];
    const double ga = k * best_a * (1.0 - best_a) * bj;
    out.dV[i] += ga;
    out.dV[arg] -= ga;
    out.dVdot[arg] += k * best_a * bj * (1.0 - bj);
    out.dk += best_a * (1.0 - best_a) * (v[i] - v[arg]) * bj + best_a * bj * (1.0 - bj) * (vdot[arg] + eps_vdot);
  }
  out.loss = -static_cast<double>(n) + total;
  return out;
}

GridValues evaluate_grid(const LyapCandidate& c, const Grid& g, unsigned workers) {
  GridValues out;
  out.V.resize(g.size());
  out.Vdot.resize(g.size());
  for_each_chunk(g.size(), kChunk, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PointValue pv = evaluate(c, g.points[i]);
      out.V[i] = pv.V;
      out.Vdot[i] = pv.Vdot;
    }
  });
  return out;
}

std::size_t median_index(std::span<const double> v) {
  if (v.empty()) throw TrainError("median of an empty set");
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(idx.size() / 2);
  std::nth_element(idx.begin(), mid, idx.end(), [&](std::size_t a, std::size_t b) {
    const double fa = std::fabs(v[a]), fb = std::fabs(v[b]);
    return fa < fb || (fa == fb && a < b);
  });
  return *mid;
}

double median_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::fabs(v[median_index(v)]);
}

LossResult loss_smooth(const LyapCandidate& c, const Grid& g, const TrainConfig& cfg,
                       std::optional<double> level_scale) {
  LossResult r;
  const std::size_t n = c.dim();
  const std::size_t N = g.size();

  std::vector<std::vector<double>> fx(N);
  r.values.V.resize(N);
  r.values.Vdot.resize(N);
  for_each_chunk(N, kChunk, cfg.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      fx[i] = c.sys->eval(g.points[i]);
      const PointValue pv = evaluate(c, g.points[i], fx[i]);
      r.values.V[i] = pv.V;
      r.values.Vdot[i] = pv.Vdot;
    }
  });

  double scale = level_scale ? *level_scale : median_abs(r.values.V);
  const bool scale_is_free = !level_scale && scale > 0.0 && std::isfinite(scale);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  r.level_scale = scale;
  const double k = cfg.sigmoid_k / scale;
  SmoothCardinality sc = smooth_cardinality(r.values.V, r.values.Vdot, cfg.eps_vdot, k);
  if (scale_is_free) {
    // k = K / |V_m| for the median point m; without this term the loss can
    // always improve by shrinking V and Vdot towards zero.
    const std::size_t m = median_index(r.values.V);
    const double dscale = -sc.dk * k / scale;
    sc.dV[m] += dscale * (r.values.V[m] < 0.0 ? -1.0 : 1.0);
  }
  r.loss = sc.loss;
  if (!std::isfinite(r.loss)) {
    std::ostringstream os;
    os << "non-finite smooth loss (level scale " << scale << ", alpha " << c.alpha << ")";
    throw TrainError(os.str());
  }
  r.hard_cardinality = cardinality(roa_membership_hard(r.values.V, r.values.Vdot, cfg.eps_vdot));

  const std::size_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<NetParams> part(chunks, NetParams(c.net.n(), c.net.h()));
  std::vector<DenseMatrix> partP(chunks, DenseMatrix(n, n));
  for_each_chunk(N, kChunk, cfg.workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (sc.dV[i] == 0.0 && sc.dVdot[i] == 0.0) continue;
      accumulate_point_gradient(c, g.points[i], fx[i], sc.dV[i], sc.dVdot[i], part[chunk], partP[chunk]);
    }
  });
  r.grad = NetParams(c.net.n(), c.net.h());
  r.grad_P = DenseMatrix(n, n);
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    r.grad.axpy(1.0, part[ch]);
    r.grad_P = r.grad_P + partP[ch];
  }
  p_theta_backward(c, r.grad_P, r.grad);
  return r;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw TrainError("Adam: parameter/gradient size mismatch");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double origin_delta(const TrainConfig& cfg, const Grid& g, const DynSystem& sys) {
  const double d = cfg.delta > 0.0 ? cfg.delta : g.step;
  return std::min(d, sys.domain_radius());
}

TrainResult train(SystemPtr sys, const TrainConfig& cfg) {
  cfg.validate();
  TrainResult res;
  res.grid = make_grid(sys->domain, cfg.grid_per_dim);
  const OriginContext ctx = make_origin_context(sys, origin_delta(cfg, res.grid, *sys));

  NetParams net = init_params(sys->dim(), cfg.hidden, cfg.seed);
  std::vector<double> flat = net.flatten();
  Adam adam(cfg.lr);
  bool have_best = false;

  for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    LyapCandidate cand;
    try {
      cand = build_candidate(net, ctx, cfg.beta);
    } catch (const LyapunovError&) {
      res.diverged = true;
      break;
    }
    const LossResult lr = loss_smooth(cand, res.grid, cfg);
    if (!have_best || lr.hard_cardinality > res.best_cardinality) {
      res.candidate = cand;
      res.best_cardinality = lr.hard_cardinality;
      res.best_epoch = epoch;
      have_best = true;
    }
    TrainLogRow row{epoch, lr.loss, lr.hard_cardinality, cand.alpha, cand.origin.eps, 0.0};
    if (epoch < cfg.epochs) {
      const std::vector<double> g = lr.grad.flatten();
      adam.step(flat, g);
      net.unflatten(flat);
    }
    row.wall_ms = elapsed_ms(t0);
    res.log.push_back(row);
    if (!net.all_finite()) {
      res.diverged = true;
      break;
    }
  }
  if (!have_best) throw TrainError("training produced no valid candidate");
  return res;
}

TrainResult train_quadratic_baseline(SystemPtr sys, const TrainConfig& cfg, bool optimize) {
  cfg.validate();
  TrainResult res;
  res.grid = make_grid(sys->domain, cfg.grid_per_dim);
  const OriginContext ctx = make_origin_context(sys, origin_delta(cfg, res.grid, *sys));
  const std::size_t n = sys->dim();

  if (!optimize) {
    const auto t0 = std::chrono::steady_clock::now();
    res.candidate = quadratic_candidate(ctx.P1, ctx);
    const LossResult lr = loss_smooth(res.candidate, res.grid, cfg);
    res.best_cardinality = lr.hard_cardinality;
    res.log.push_back({0, lr.loss, lr.hard_cardinality, 0.0, res.candidate.origin.eps, elapsed_ms(t0)});
    return res;
  }

  // Lower-triangular parameters, row-major.
  DenseMatrix L = cholesky_lower(ctx.P1);
  std::vector<double> flat;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) flat.push_back(L(i, j));
  auto assemble = [&](const std::vector<double>& params) {
    DenseMatrix l(n, n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) l(i, j) = params[k++];
    DenseMatrix P = l * l.transpose();
    for (std::size_t i = 0; i < n; ++i) P(i, i) += 1e-6;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) P(i, j) = P(j, i);
    return std::make_pair(l, P);
  };

  Adam adam(cfg.lr);
  bool have_best = false;
  for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [l, P] = assemble(flat);
    LyapCandidate cand = quadratic_candidate(P, ctx, /*require_local_decay=*/false);
    const LossResult lr = loss_smooth(cand, res.grid, cfg);
    // Only quadratics that decay near the origin can be certified.
    if (cand.origin.eps > 0.0 && (!have_best || lr.hard_cardinality > res.best_cardinality)) {
      res.candidate = cand;
      res.best_cardinality = lr.hard_cardinality;
      res.best_epoch = epoch;
      have_best = true;
    }
    TrainLogRow row{epoch, lr.loss, lr.hard_cardinality, 0.0, cand.origin.eps, 0.0};
    if (epoch < cfg.epochs) {
      // d/dL of <G, L L^T> = (G + G^T) L
      const DenseMatrix G = lr.grad_P + lr.grad_P.transpose();
      const DenseMatrix gl = G * l;
      std::vector<double> g;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) g.push_back(gl(i, j));
      adam.step(flat, g);
    }
    row.wall_ms = elapsed_ms(t0);
    res.log.push_back(row);
    if (!std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); })) {
      res.diverged = true;
      break;
    }
  }
  if (!have_best) throw TrainError("optimized quadratic produced no locally decaying candidate");
  return res;
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,smooth_loss,hard_cardinality,alpha,eps,wall_ms\n";
  for (const auto& r : log)
    os << r.epoch << ',' << r.smooth_loss << ',' << r.hard_cardinality << ',' << r.alpha << ',' << r.eps << ','
       << r.wall_ms << '\n';
  return os.str();
}

}  // namespace roa
