#include "doctest.h"

#include <cmath>
#include <random>

#include "roa/lyapunov.hpp"
#include "test_util.hpp"

using namespace roa;
using namespace roa::testing;

namespace {

NetParams random_net(std::size_t n, std::size_t h, std::uint64_t seed, double bias = 0.5) {
  NetParams p = init_params(n, h, seed);
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> u(-bias, bias);
  for (auto& b : p.b1) b = u(rng);
  return p;
}

std::vector<double> ball_point(std::mt19937_64& rng, std::size_t n, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  for (;;) {
    std::vector<double> x(n);
    double s = 0.0;
    for (auto& xi : x) {
      xi = u(rng);
      s += xi * xi;
    }
    if (s <= r * r) return x;
  }
}

SystemPtr decay_2d() {
  return make_system("decay", {"x1", "x2"}, {"-x1", "-x2"}, {Interval(-2, 2), Interval(-2, 2)});
}

}  // namespace

TEST_CASE("degenerate network falls back to the alpha floor") {
  NetParams p = random_net(2, 8, 1);
  for (auto& w : p.W2.data()) w = 0.0;
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const LyapCandidate c = build_candidate(p, vdp, 1.2, 0.1);
  CHECK(c.origin.alpha_bar == 0.0);
  CHECK(c.alpha == kAlphaFloor);
  CHECK(((kAlphaFloor * c.P1) - c.P_theta).max_abs() <= 1e-18);
  CHECK(cholesky_pd(c.P_theta));
  CHECK(c.origin.eps > 0.0);
}

TEST_CASE("P_theta construction") {
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const NetParams p = random_net(2, 32, seed);
    const LyapCandidate c = build_candidate(p, vdp, 2.0, 0.1);
    CHECK(c.P_theta.is_symmetric(0.0));
    CHECK(cholesky_pd(c.P_theta));
    const auto g = linear_gain(p);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(std::fabs(c.P_theta(i, j) - (c.alpha * c.P1(i, j) - g[i] * g[j])) <= 1e-12 * std::max(1.0, c.alpha));
    CHECK(c.alpha >= std::max(2.0 * c.origin.alpha_bar, kAlphaFloor));
    const double lmin = sym_eig_extrema(c.P_theta).lambda_min;
    CHECK(lmin >= (2.0 - 1.0) * c.origin.alpha_bar * c.p1_min - 1e-9);
    CHECK(c.origin.eps == std::min(c.origin.delta, c.origin.eps_delta));
    CHECK(c.origin.eps > 0.0);
  }
  CHECK_THROWS_AS(build_candidate(random_net(2, 4, 0), vdp, 1.0, 0.1), LyapunovError);
  CHECK_THROWS_AS(build_candidate(random_net(3, 4, 0), vdp, 1.2, 0.1), LyapunovError);
}

TEST_CASE("V is positive definite") {
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const LyapCandidate c = build_candidate(random_net(2, 64, 3), vdp, 1.2, 0.12);
  const std::vector<double> origin{0.0, 0.0};
  CHECK(V(c, origin) == 0.0);
  CHECK(Vdot(c, origin) == 0.0);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const auto x = ball_point(rng, 2, 3.0);
    if (x[0] == 0.0 && x[1] == 0.0) continue;
    CHECK(V(c, x) > 0.0);
  }

  const LyapCandidate q = quadratic_candidate(c.P1, make_origin_context(vdp, 0.12));
  const auto x = ball_point(rng, 2, 2.0);
  const double quad = x[0] * (c.P1(0, 0) * x[0] + c.P1(0, 1) * x[1]) + x[1] * (c.P1(1, 0) * x[0] + c.P1(1, 1) * x[1]);
  CHECK(V(q, x) == doctest::Approx(quad).epsilon(1e-15));
}

TEST_CASE("Vdot identities") {
  // quadratic V with P1 on a linear system: Vdot = -|x|^2
  const SystemPtr lin =
      make_system("lin", {"x1", "x2"}, {"-x2", "x1 - x2"}, {Interval(-2, 2), Interval(-2, 2)});
  const OriginContext ctx = make_origin_context(lin, 0.1);
  const LyapCandidate q = quadratic_candidate(ctx.P1, ctx);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto x = ball_point(rng, 2, 2.0);
    CHECK(Vdot(q, x) == doctest::Approx(-(x[0] * x[0] + x[1] * x[1])).epsilon(1e-12));
  }

  // derivative of V along an RK4 trajectory
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const LyapCandidate c = build_candidate(random_net(2, 32, 8), vdp, 1.2, 0.12);
  for (int k = 0; k < 10; ++k) {
    const auto x0 = ball_point(rng, 2, 1.5);
    const double dt = 1e-3;
    const Trajectory tr = integrate_rk4(*vdp, x0, dt, 2 * dt, 0.0);
    REQUIRE(tr.states.size() == 3);
    // second-order one-sided difference in time
    const double fd = (-3 * V(c, tr.states[0]) + 4 * V(c, tr.states[1]) - V(c, tr.states[2])) / (2 * dt);
    CHECK(fd == doctest::Approx(Vdot(c, x0)).epsilon(1e-4).scale(1e-3));
  }
}

TEST_CASE("strict decay on the origin ball") {
  const SystemPtr decay = decay_2d();
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const LyapCandidate c = build_candidate(random_net(2, 16, seed), decay, 1.2, 0.2);
    REQUIRE(c.origin.eps > 0.0);
    for (int k = 0; k < 10000; ++k) {
      const auto x = ball_point(rng, 2, c.origin.eps);
      if (std::hypot(x[0], x[1]) < 1e-9) continue;
      CHECK(Vdot(c, x) < 0.0);
    }
  }
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const LyapCandidate c = build_candidate(random_net(2, 64, 4), vdp, 1.2, 0.12);
  int bad = 0;
  for (int k = 0; k < 100000; ++k) {
    const auto x = ball_point(rng, 2, c.origin.eps);
    if (std::hypot(x[0], x[1]) < 1e-9) continue;
    bad += !(Vdot(c, x) < 0.0);
  }
  CHECK(bad == 0);
}

TEST_CASE("Vdot_interval encloses samples") {
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const LyapCandidate c = build_candidate(random_net(2, 64, 5), vdp, 1.2, 0.12);

  const std::vector<double> pt{0.3, -0.7};
  const Interval pe = Vdot_interval(c, BoxRegion::point(pt));
  CHECK(pe.contains(Vdot(c, pt)));
  CHECK(pe.width() <= 1e-12);

  std::mt19937_64 rng(13);
  const BoxRegion b({Interval(0.1, 0.2), Interval(0.1, 0.2)});
  const Interval e = Vdot_interval(c, b);
  for (int k = 0; k < 1000; ++k) CHECK(e.contains(Vdot(c, random_point_in(rng, b))));

  for (int k = 0; k < 10000; ++k) {
    const BoxRegion box = random_box(rng, 2, 2.5, 0.4);
    const Interval enc = Vdot_interval(c, box);
    const auto x = random_point_in(rng, box);
    CHECK(enc.contains(Vdot(c, x)));
    if (k % 10 == 0) {
      const auto [l, r] = box.bisect(box.widest_dim());
      const Interval h = hull(Vdot_interval(c, l), Vdot_interval(c, r));
      CHECK(h.lo >= enc.lo - 1e-12 * std::max(1.0, enc.mag()));
      CHECK(h.hi <= enc.hi + 1e-12 * std::max(1.0, enc.mag()));
    }
  }
}

TEST_CASE("parameter gradient of V and Vdot") {
  const SystemPtr vdp = builtin_system("vanderpol_reverse");
  const NetParams p = random_net(2, 3, 21);
  const OriginContext ctx = make_origin_context(vdp, 0.12);
  const std::vector<double> x{0.4, -1.1};
  const auto fx = vdp->eval(x);
  for (auto [dv, dvd] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.3, -0.8}}) {
    const LyapCandidate c = build_candidate(p, ctx, 1.2);
    NetParams g(2, 3);
    DenseMatrix gP(2, 2);
    accumulate_point_gradient(c, x, fx, dv, dvd, g, gP);
    p_theta_backward(c, gP, g);
    const auto flat = p.flatten();
    const auto an = g.flatten();
    auto obj = [&](const std::vector<double>& th) {
      NetParams q = p;
      q.unflatten(th);
      const LyapCandidate cq = build_candidate(q, ctx, 1.2);
      return dv * V(cq, x) + dvd * Vdot(cq, x);
    };
    for (std::size_t k = 0; k < flat.size(); ++k) {
      const double h = 1e-5;
      auto a = flat, b = flat, a2 = flat, b2 = flat;
      a[k] += h;
      b[k] -= h;
      a2[k] += 2 * h;
      b2[k] -= 2 * h;
      const double fd = (8 * (obj(a) - obj(b)) - (obj(a2) - obj(b2))) / (12 * h);
      CHECK(std::fabs(fd - an[k]) <= 1e-6 * std::max(1.0, std::fabs(an[k])));
    }
  }
}
