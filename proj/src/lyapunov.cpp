#include "roa/lyapunov.hpp"

#include <cmath>
#include <limits>

namespace roa {

OriginContext make_origin_context(SystemPtr sys, double delta) {
  if (!sys) throw LyapunovError("make_origin_context: null system");
  OriginContext ctx;
  ctx.A = sys->linearization();
  ctx.P1 = solve_lyapunov(ctx.A, DenseMatrix::identity(sys->dim()));
  if (!cholesky_pd(ctx.P1)) throw LyapunovError("P1 is not positive definite; linearization is not Hurwitz");
  const EigExtrema e = sym_eig_extrema(ctx.P1);
  ctx.p1_min = e.lambda_min;
  ctx.p1_max = e.lambda_max;
  ctx.delta = delta;
  ctx.C_f = bound_Cf(*sys, delta);
  ctx.C_g = bound_Cg(*sys, delta);
  ctx.sys = std::move(sys);
  return ctx;
}

namespace {

double safe_ratio(double num, double den) {
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

LyapCandidate build_candidate(const NetParams& net, const OriginContext& ctx, double beta) {
  if (!(beta > 1.0)) throw LyapunovError("beta must be > 1");
  const std::size_t n = ctx.sys->dim();
  if (net.n() != n) throw LyapunovError("network input dimension does not match the system");
  if (!net.all_finite()) throw LyapunovError("network parameters are not finite");

  LyapCandidate c;
  c.kind = CandidateKind::Neural;
  c.sys = ctx.sys;
  c.net = net;
  c.P1 = ctx.P1;
  c.p1_min = ctx.p1_min;
  c.beta = beta;
  c.norm_W1 = spectral_norm_full(net.W1);
  c.norm_W2 = spectral_norm_full(net.W2);
  const double w1 = c.norm_W1.sigma, w2 = c.norm_W2.sigma;
  const double alpha_bar = w1 * w1 * w2 * w2 / ctx.p1_min;
  c.alpha = std::max(beta * alpha_bar, kAlphaFloor);

  c.gain = linear_gain(net);
  c.P_theta = c.alpha * ctx.P1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c.P_theta(i, j) -= c.gain[i] * c.gain[j];
  if (!cholesky_pd(c.P_theta)) throw LyapunovError("internal consistency failure: P_theta is not positive definite");

  double phi0 = 0.0;
  for (std::size_t k = 0; k < net.h(); ++k) phi0 += net.W2(0, k) * std::tanh(net.b1[k]);
  c.phi0 = phi0;

  OriginCert& o = c.origin;
  o.delta = ctx.delta;
  o.C_f = ctx.C_f;
  o.C_g = ctx.C_g;
  o.alpha_bar = alpha_bar;
  o.eps_delta = safe_ratio(beta, 2.0 * (ctx.p1_min * (2.0 + w1 * ctx.delta) * w1 * ctx.C_f + ctx.p1_max * beta * ctx.C_g));
  o.eps = std::min(ctx.delta, o.eps_delta);
  if (!(o.eps > 0.0)) throw LyapunovError("origin analysis produced a non-positive radius");
  return c;
}

LyapCandidate build_candidate(const NetParams& net, SystemPtr sys, double beta, double delta) {
  return build_candidate(net, make_origin_context(std::move(sys), delta), beta);
}

bool has_local_decay(const DenseMatrix& P, const DenseMatrix& A) {
  const DenseMatrix Q = -1.0 * (A.transpose() * P + P * A);
  return cholesky_pd(0.5 * (Q + Q.transpose()));
}

LyapCandidate quadratic_candidate(const DenseMatrix& P, const OriginContext& ctx, bool require_local_decay) {
  const std::size_t n = ctx.sys->dim();
  if (P.rows() != n || P.cols() != n) throw LyapunovError("quadratic candidate: P has the wrong shape");
  if (!P.is_symmetric(1e-12) || !cholesky_pd(P)) throw LyapunovError("quadratic candidate: P must be symmetric PD");
  // V = x^T P x  =>  Vdot = -x^T Q x + 2 x^T P g(x),  Q = -(A^T P + P A).
  const DenseMatrix Q = -1.0 * (ctx.A.transpose() * P + P * ctx.A);
  const DenseMatrix Qs = 0.5 * (Q + Q.transpose());
  const bool decays = cholesky_pd(Qs);
  if (!decays && require_local_decay)
    throw LyapunovError("quadratic candidate: A^T P + P A is not negative definite");

  LyapCandidate c;
  c.kind = CandidateKind::Quadratic;
  c.sys = ctx.sys;
  c.net = NetParams(n, 1);
  c.P1 = ctx.P1;
  c.p1_min = ctx.p1_min;
  c.P_theta = P;
  c.gain.assign(n, 0.0);
  c.norm_W1 = spectral_norm_full(c.net.W1);
  c.norm_W2 = spectral_norm_full(c.net.W2);

  OriginCert& o = c.origin;
  o.delta = ctx.delta;
  o.C_f = ctx.C_f;
  o.C_g = ctx.C_g;
  if (decays) {
    o.eps_delta = safe_ratio(sym_eig_extrema(Qs).lambda_min, 2.0 * sym_eig_extrema(P).lambda_max * ctx.C_g);
    o.eps = std::min(ctx.delta, o.eps_delta);
  }
  return c;
}

PointValue evaluate(const LyapCandidate& c, std::span<const double> x, std::span<const double> fx) {
  const std::size_t n = c.dim();
  const NetParams& p = c.net;
  double phi = 0.0, gf = 0.0;
  if (c.kind == CandidateKind::Neural) {
    for (std::size_t k = 0; k < p.h(); ++k) {
      const auto row = p.W1.row(k);
      double z = p.b1[k], q = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z += row[i] * x[i];
        q += row[i] * fx[i];
      }
      const double t = std::tanh(z);
      const double w = p.W2(0, k);
      phi += w * t;
      gf += w * (1.0 - t * t) * q;
    }
  }
  const double e = phi - c.phi0;
  double quad = 0.0, quad_dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double px = 0.0;
    for (std::size_t j = 0; j < n; ++j) px += c.P_theta(i, j) * x[j];
    quad += x[i] * px;
    quad_dot += px * fx[i];
  }
  return {e * e + quad, 2.0 * e * gf + 2.0 * quad_dot};
}

PointValue evaluate(const LyapCandidate& c, std::span<const double> x) {
  const std::vector<double> fx = c.sys->eval(x);
  return evaluate(c, x, fx);
}

double V(const LyapCandidate& c, std::span<const double> x) {
  const std::size_t n = c.dim();
  double phi = c.kind == CandidateKind::Neural ? forward(c.net, x) : 0.0;
  const double e = phi - c.phi0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) quad += x[i] * c.P_theta(i, j) * x[j];
  return e * e + quad;
}

double Vdot(const LyapCandidate& c, std::span<const double> x) { return evaluate(c, x).Vdot; }

Interval Vdot_interval(const LyapCandidate& c, const BoxRegion& box) {
  const std::size_t n = c.dim();
  const std::vector<Interval> F = c.sys->eval(box);
  const NetParams& p = c.net;

  Interval net_term(0.0);
  if (c.kind == CandidateKind::Neural) {
    Interval e(0.0), gf(0.0);
    for (std::size_t k = 0; k < p.h(); ++k) {
      const auto row = p.W1.row(k);
      Interval z(p.b1[k]), q(0.0);
      for (std::size_t i = 0; i < n; ++i) {
        z += row[i] * box[i];
        q += row[i] * F[i];
      }
      const Interval t = tanh(z);
      const Interval d = Interval(1.0) - sqr(t);
      const double w = p.W2(0, k);
      e += w * (t - tanh(Interval(p.b1[k])));
      gf += w * (d * q);
    }
    net_term = 2.0 * (e * gf);
  }
  Interval quad_dot(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Interval px(0.0);
    for (std::size_t j = 0; j < n; ++j) px += c.P_theta(i, j) * box[j];
    quad_dot += px * F[i];
  }
  return net_term + 2.0 * quad_dot;
}

void accumulate_point_gradient(const LyapCandidate& c, std::span<const double> x, std::span<const double> fx,
                               double dV, double dVdot, NetParams& g, DenseMatrix& gP) {
  const std::size_t n = c.dim();
  const NetParams& p = c.net;
  if (c.kind == CandidateKind::Neural) {
    // Forward pass, cached per neuron.
    const std::size_t h = p.h();
    thread_local std::vector<double> t, q, t0;
    t.resize(h);
    q.resize(h);
    t0.resize(h);
    double phi = 0.0, gf = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
      const auto row = p.W1.row(k);
      double z = p.b1[k], qk = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z += row[i] * x[i];
        qk += row[i] * fx[i];
      }
      t[k] = std::tanh(z);
      t0[k] = std::tanh(p.b1[k]);
      q[k] = qk;
      phi += p.W2(0, k) * t[k];
      gf += p.W2(0, k) * (1.0 - t[k] * t[k]) * qk;
    }
    const double e = phi - c.phi0;
    // V = e^2 + ...,  Vdot = 2 e gf + ...
    const double de = 2.0 * e * dV + 2.0 * gf * dVdot;
    const double dgf = 2.0 * e * dVdot;
    for (std::size_t k = 0; k < h; ++k) {
      const double w = p.W2(0, k);
      const double dk = 1.0 - t[k] * t[k];
      // e = sum_k w (t_k - t0_k)
      g.W2(0, k) += de * (t[k] - t0[k]) + dgf * dk * q[k];
      double dt = de * w + dgf * w * q[k] * (-2.0 * t[k]);
      const double dt0 = -de * w;
      const double dq = dgf * w * dk;
      const double dz = dt * dk;
      g.b1[k] += dz + dt0 * (1.0 - t0[k] * t0[k]);
      auto grow = g.W1.row(k);
      for (std::size_t i = 0; i < n; ++i) grow[i] += dz * x[i] + dq * fx[i];
    }
  }
  // x^T P x and 2 x^T P f.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gP(i, j) += dV * x[i] * x[j] + 2.0 * dVdot * x[i] * fx[j];
}

void p_theta_backward(const LyapCandidate& c, const DenseMatrix& gP, NetParams& g) {
  if (c.kind != CandidateKind::Neural) return;
  const std::size_t n = c.dim();
  const NetParams& p = c.net;

  // P = alpha P1 - u^T u.
  std::vector<double> gu(n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) gu[a] -= (gP(a, b) + gP(b, a)) * c.gain[b];

  for (std::size_t k = 0; k < p.h(); ++k) {
    const double tb = std::tanh(p.b1[k]);
    const double d = 1.0 - tb * tb;
    const double w = p.W2(0, k);
    const auto row = p.W1.row(k);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += gu[i] * row[i];
    g.W2(0, k) += s * d;
    g.b1[k] += s * w * (-2.0 * tb * d);
    auto grow = g.W1.row(k);
    for (std::size_t i = 0; i < n; ++i) grow[i] += gu[i] * w * d;
  }

  if (c.alpha <= kAlphaFloor || c.alpha != c.beta * c.origin.alpha_bar) return;  // floor branch: constant alpha
  double galpha = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) galpha += gP(a, b) * c.P1(a, b);
  // alpha = beta s1^2 s2^2 / lambda_min(P1);  d s / d M = u v^T.
  const double s1 = c.norm_W1.sigma, s2 = c.norm_W2.sigma;
  const double scale = galpha * c.beta / c.p1_min;
  const double c1 = scale * 2.0 * s1 * s2 * s2;
  for (std::size_t k = 0; k < p.h(); ++k) {
    auto grow = g.W1.row(k);
    for (std::size_t i = 0; i < n; ++i) grow[i] += c1 * c.norm_W1.u[k] * c.norm_W1.v[i];
  }
  const double c2 = scale * 2.0 * s2 * s1 * s1;
  for (std::size_t k = 0; k < p.h(); ++k) g.W2(0, k) += c2 * c.norm_W2.u[0] * c.norm_W2.v[k];
}

}  // namespace roa
