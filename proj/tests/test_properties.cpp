// Randomized invariants that cut across modules.
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "roa/model_io.hpp"
#include "roa/verify.hpp"
#include "test_util.hpp"

using namespace roa;
using namespace roa::testing;

namespace {

// One short training run shared by the tests below.
const TrainResult& trained() {
  static const TrainResult r = [] {
    TrainConfig cfg;
    cfg.hidden = 24;
    cfg.grid_per_dim = 20;
    cfg.epochs = 40;
    cfg.lr = 5e-3;
    cfg.seed = 1;
    return train(builtin_system("vanderpol_reverse"), cfg);
  }();
  return r;
}

const VerifyReport& report() {
  static const VerifyReport r = [] {
    const TrainResult& t = trained();
    const GridValues gv = evaluate_grid(t.candidate, t.grid);
    return certify(t.candidate, roa_membership_hard(gv.V, gv.Vdot, 1e-3), t.grid, default_verify_config(t.grid));
  }();
  return r;
}

}  // namespace

TEST_CASE("expression enclosures and derivatives on random trees") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const Expr e = random_expr(rng, 3, 4);
    const BoxRegion b = random_box(rng, 3, 1.5, 0.5);
    const Interval enc = eval_interval(e, b);
    const Expr d = differentiate(e, trial % 3);
    for (int k = 0; k < 20; ++k) {
      auto x = random_point_in(rng, b);
      const double v = eval_point(e, x);
      if (!std::isfinite(v)) continue;
      CHECK(enc.contains(v));
      const double h = 1e-6 * std::max(1.0, std::fabs(x[trial % 3]));
      auto xp = x, xm = x;
      xp[trial % 3] += h;
      xm[trial % 3] -= h;
      const double fd = (eval_point(e, xp) - eval_point(e, xm)) / (2 * h);
      const double an = eval_point(d, x);
      CHECK(std::fabs(fd - an) <= 1e-4 * std::max(1.0, std::fabs(an)));
    }
  }
}

TEST_CASE("hard membership is a sublevel set of V") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 60;
    std::uniform_real_distribution<double> uv(0.0, 3.0), ud(-1.0, 0.2);
    std::vector<double> v(n), vd(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = uv(rng);
      vd[i] = ud(rng);
    }
    const auto m = roa_membership_hard(v, vd, 1e-3);
    for (std::size_t i = 0; i < n; ++i) {
      if (!m[i]) continue;
      CHECK(vd[i] <= -1e-3);
      for (std::size_t j = 0; j < n; ++j)
        if (v[j] <= v[i]) CHECK(m[j]);
    }
  }
  const TrainResult& t = trained();
  const GridValues gv = evaluate_grid(t.candidate, t.grid);
  const auto m = roa_membership_hard(gv.V, gv.Vdot, 1e-3);
  double vmax_in = -1.0, vmin_out = 1e300;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i])
      vmax_in = std::max(vmax_in, gv.V[i]);
    else
      vmin_out = std::min(vmin_out, gv.V[i]);
  CHECK(vmax_in < vmin_out);
}

TEST_CASE("certified set is level-monotone and a subset of the members") {
  const VerifyReport& r = report();
  REQUIRE(r.certified_count() > 0);
  for (std::size_t i = 0; i < r.V.size(); ++i) {
    if (r.certified[i]) CHECK(r.member_before[i]);
    if (!r.certified[i] || r.status[i] == CubeStatus::Disconnected) continue;
    for (std::size_t j = 0; j < r.V.size(); ++j)
      if (r.V[j] <= r.V[i] && r.status[j] != CubeStatus::NotMember && r.status[j] != CubeStatus::Disconnected)
        CHECK(r.certified[j]);
  }
  for (std::size_t i = 0; i < r.V.size(); ++i)
    if (is_failure(r.status[i])) CHECK_FALSE(r.certified[i]);
}

TEST_CASE("no sampled point of the certified union has Vdot >= 0") {
  const TrainResult& t = trained();
  const VerifyReport& r = report();
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < r.certified.size(); ++i)
    if (r.certified[i]) cells.push_back(i);
  REQUIRE(!cells.empty());
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::size_t bad = 0, tested = 0;
  for (int k = 0; k < 100000; ++k) {
    const auto x = random_point_in(rng, t.grid.cell(cells[pick(rng)]));
    if (std::hypot(x[0], x[1]) < r.eps_used) continue;
    ++tested;
    bad += !(Vdot(t.candidate, x) < 0.0);
  }
  CHECK(tested > 90000);
  CHECK(bad == 0);
}

TEST_CASE("trajectories from the certified union converge") {
  const TrainResult& t = trained();
  const VerifyReport& r = report();
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < r.certified.size(); ++i)
    if (r.certified[i]) cells.push_back(i);
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  for (int k = 0; k < 100; ++k) {
    const auto x = random_point_in(rng, t.grid.cell(cells[pick(rng)]));
    const Trajectory tr = integrate_rk4(*t.candidate.sys, x, 0.01, 200.0, 1e-3);
    CHECK(tr.status == TrajectoryStatus::Converged);
  }
}

TEST_CASE("refining delta never turns a verified cube into a counterexample") {
  const TrainResult& t = trained();
  const VerifyReport& r = report();
  VerifyConfig fine = default_verify_config(t.grid, 1e-7);
  for (std::size_t i = 0; i < r.status.size(); ++i) {
    if (r.status[i] != CubeStatus::Verified) continue;
    const BoxCheck b = check_box(t.candidate, t.grid.cell(i), fine);
    CHECK(b.status != CubeStatus::Counterexample);
  }
}

TEST_CASE("outputs are reproducible") {
  const TrainResult& t = trained();
  const GridValues gv = evaluate_grid(t.candidate, t.grid);
  const auto mask = roa_membership_hard(gv.V, gv.Vdot, 1e-3);
  VerifyConfig cfg = default_verify_config(t.grid);
  cfg.workers = 4;
  const VerifyReport again = certify(t.candidate, mask, t.grid, cfg);
  CHECK(report_csv(again) == report_csv(report()));
  CHECK(counterexamples_csv(again) == counterexamples_csv(report()));

  // a saved and reloaded model yields the same report bytes
  ModelMeta meta;
  meta.train.hidden = 24;
  meta.train.grid_per_dim = 20;
  const LoadedModel m = model_from_json(model_to_json(t.candidate, meta));
  CHECK(report_csv(certify(m.candidate, mask, m.grid, default_verify_config(m.grid))) == report_csv(report()));
}
