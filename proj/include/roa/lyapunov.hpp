#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "roa/dynamics.hpp"
#include "roa/interval.hpp"
#include "roa/linalg.hpp"
#include "roa/net.hpp"

namespace roa {

class LyapunovError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kAlphaFloor = 1e-6;

// Quantities that depend only on the system and the analysis radius delta:
// the linearization, P1 (A^T P1 + P1 A = -I) and the Taylor constants.
struct OriginContext {
  SystemPtr sys;
  DenseMatrix A;
  DenseMatrix P1;
  double p1_min = 0.0;
  double p1_max = 0.0;
  double delta = 0.0;
  double C_f = 0.0;
  double C_g = 0.0;
};

OriginContext make_origin_context(SystemPtr sys, double delta);

// Radius of the ball around the origin on which strict decay is proven.
struct OriginCert {
  double delta = 0.0;
  double C_f = 0.0;
  double C_g = 0.0;
  double alpha_bar = 0.0;
  double eps_delta = 0.0;
  double eps = 0.0;
};

enum class CandidateKind { Neural, Quadratic };

// V(x) = (phi(x) - phi(0))^2 + x^T P_theta x.
// Neural:    P_theta = alpha P1 - (W2 D W1)^T (W2 D W1),  alpha = max(beta * alpha_bar, kAlphaFloor).
// Quadratic: network part is identically zero and P_theta is given.
struct LyapCandidate {
  CandidateKind kind = CandidateKind::Neural;
  SystemPtr sys;
  NetParams net;
  DenseMatrix P1;
  double p1_min = 0.0;
  DenseMatrix P_theta;
  double alpha = 0.0;
  double beta = 0.0;
  double phi0 = 0.0;
  std::vector<double> gain;  // W2 D W1
  SpectralNorm norm_W1;
  SpectralNorm norm_W2;
  OriginCert origin;

  std::size_t dim() const { return P_theta.rows(); }
};

LyapCandidate build_candidate(const NetParams& net, const OriginContext& ctx, double beta);
LyapCandidate build_candidate(const NetParams& net, SystemPtr sys, double beta, double delta);

// Pure quadratic certificate V = x^T P x. With `require_local_decay`, rejects P
// unless A^T P + P A is negative definite; otherwise such a P gets eps = 0.
LyapCandidate quadratic_candidate(const DenseMatrix& P, const OriginContext& ctx, bool require_local_decay = true);

// True when A^T P + P A is negative definite.
bool has_local_decay(const DenseMatrix& P, const DenseMatrix& A);

double V(const LyapCandidate& c, std::span<const double> x);
double Vdot(const LyapCandidate& c, std::span<const double> x);

struct PointValue {
  double V;
  double Vdot;
};

// V and Vdot together, given f(x) already evaluated.
PointValue evaluate(const LyapCandidate& c, std::span<const double> x, std::span<const double> fx);
PointValue evaluate(const LyapCandidate& c, std::span<const double> x);

// Sound enclosure of {Vdot(x) : x in box}.
Interval Vdot_interval(const LyapCandidate& c, const BoxRegion& box);

// Adds dV * dV/dtheta + dVdot * dVdot/dtheta (network path only) into `g` and
// the derivative with respect to P_theta (treated as a free matrix) into `gP`.
void accumulate_point_gradient(const LyapCandidate& c, std::span<const double> x, std::span<const double> fx,
                               double dV, double dVdot, NetParams& g, DenseMatrix& gP);

// Pushes a derivative with respect to P_theta back onto the network weights
// through alpha (spectral norms) and the W2 D W1 correction term.
void p_theta_backward(const LyapCandidate& c, const DenseMatrix& gP, NetParams& g);

}  // namespace roa
