#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "roa/verify.hpp"
#include "test_util.hpp"

using namespace roa;
using namespace roa::testing;

namespace {

// Vdot(x) = |x|^2 - r0^2, with exact interval enclosures; counts evaluations.
class RiggedVdot final : public VdotModel {
 public:
  explicit RiggedVdot(double r0) : r0_(r0) {}
  double point(std::span<const double> x) const override {
    ++calls;
    double s = 0.0;
    for (double v : x) s += v * v;
    return s - r0_ * r0_;
  }
  Interval enclosure(const BoxRegion& b) const override {
    ++calls;
    return b.norm2() - Interval(r0_ * r0_);
  }
  mutable std::size_t calls = 0;

 private:
  double r0_;
};

SystemPtr linear_system() {
  return make_system("lin", {"x1", "x2"}, {"-x2", "x1 - x2"}, {Interval(-2, 2), Interval(-2, 2)});
}

struct Fixture {
  SystemPtr sys = linear_system();
  Grid g = make_grid(sys->domain, 20);
  OriginContext ctx = make_origin_context(sys, g.step);
  LyapCandidate c = quadratic_candidate(ctx.P1, ctx);
};

std::vector<bool> mask_where(const Grid& g, const std::function<bool(const std::vector<double>&)>& pred) {
  std::vector<bool> m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = pred(g.points[i]);
  return m;
}

}  // namespace

TEST_CASE("status names round trip") {
  for (auto s : {CubeStatus::NotMember, CubeStatus::Disconnected, CubeStatus::Verified, CubeStatus::Counterexample,
                 CubeStatus::DeltaCounterexample, CubeStatus::BudgetExhausted})
    CHECK(cube_status_from_string(to_string(s)) == s);
  CHECK(std::string(to_string(CubeStatus::DeltaCounterexample)) == "delta_counterexample");
  CHECK_THROWS(cube_status_from_string("maybe"));
}

TEST_CASE("check_box on exact negativity") {
  Fixture f;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    BoxRegion b = random_box(rng, 2, 1.8, 0.3);
    if (b.norm2().lo == 0.0) continue;  // skip boxes touching the origin
    const BoxCheck r = check_box(f.c, b, default_verify_config(f.g));
    CHECK(r.status == CubeStatus::Verified);
  }
  // box containing the origin: the ball is carved out
  const BoxRegion around({Interval(-0.1, 0.1), Interval(-0.1, 0.1)});
  CHECK(check_box(f.c, around, default_verify_config(f.g)).status == CubeStatus::Verified);
}

TEST_CASE("check_box finds a planted counterexample") {
  const RiggedVdot m(0.1);
  const BoxRegion b({Interval(0.05, 0.15), Interval(0.05, 0.15)});
  const double delta = 1e-6;
  const BoxCheck r = check_box(m, b, 1e-4, delta, 1000000);
  REQUIRE(is_failure(r.status));
  CHECK(r.status != CubeStatus::BudgetExhausted);
  CHECK(std::hypot(r.point[0], r.point[1]) >= 0.1 - delta);
  CHECK(b.contains(r.point));

  // entirely inside the excluded ball: no evaluation at all
  const RiggedVdot inside(1.0);
  const BoxRegion tiny({Interval(0.001, 0.002), Interval(-0.002, -0.001)});
  const BoxCheck t = check_box(inside, tiny, 0.01, delta, 100);
  CHECK(t.status == CubeStatus::Verified);
  CHECK(inside.calls == 0);

  // budget
  const RiggedVdot hard(0.1);
  const BoxCheck bud = check_box(hard, BoxRegion({Interval(0.0, 0.1), Interval(0.0, 0.1)}), 1e-4, 1e-12, 5);
  CHECK(bud.status == CubeStatus::BudgetExhausted);
}

TEST_CASE("hypercube construction") {
  const Grid full = make_grid(BoxRegion({Interval(-3, 3), Interval(-3, 3)}), 50);
  const Hypercubes all = build_hypercubes(std::vector<bool>(full.size(), true), full, full.step);
  CHECK(all.indices.size() == 2500);
  CHECK(all.dropped == 0);
  double area = 0.0;
  for (std::size_t i : all.indices) {
    const BoxRegion cell = full.cell(i);
    area += cell[0].width() * cell[1].width();
    CHECK(cell.max_width() == doctest::Approx(0.12));
  }
  CHECK(area == doctest::Approx(36.0));

  const Grid g = make_grid(BoxRegion({Interval(-1, 1), Interval(-1, 1)}), 10);
  const auto four = mask_where(g, [](const auto& p) { return std::fabs(p[0]) < 0.2 && std::fabs(p[1]) < 0.2; });
  const Hypercubes h4 = build_hypercubes(four, g, g.step);
  CHECK(h4.indices.size() == 4);
  bool origin_in = false;
  for (std::size_t i : h4.indices) origin_in = origin_in || g.cell(i).contains({0.0, 0.0});
  CHECK(origin_in);

  // an island in the corner is dropped
  auto islands = four;
  islands[g.size() - 1] = true;
  islands[g.size() - 2] = true;
  const Hypercubes hi = build_hypercubes(islands, g, g.step);
  CHECK(hi.indices.size() == 4);
  CHECK(hi.dropped == 2);
  CHECK_FALSE(hi.kept[g.size() - 1]);

  // a member set not touching the origin is all dropped
  std::vector<bool> far(g.size(), false);
  far[0] = true;
  CHECK(build_hypercubes(far, g, g.step).indices.empty());
  CHECK_THROWS_AS(build_hypercubes(std::vector<bool>(g.size(), false), g, g.step), VerifyError);
  CHECK_THROWS_AS(build_hypercubes(std::vector<bool>(3, true), g, g.step), VerifyError);
}

TEST_CASE("level pruning") {
  const std::vector<double> v{0.5, 2.0, 1.0, 3.0, 1.0};
  const std::vector<bool> kept(5, true);
  std::vector<CubeStatus> st(5, CubeStatus::Verified);

  PruneResult p = prune_by_level(v, kept, st);
  CHECK(p.certified == kept);
  CHECK(std::isinf(p.v_cut));

  st[3] = CubeStatus::Counterexample;  // maximal V
  p = prune_by_level(v, kept, st);
  CHECK(p.certified == std::vector<bool>{true, true, true, false, true});
  CHECK(std::count(p.pruned_by_level.begin(), p.pruned_by_level.end(), true) == 0);

  st[3] = CubeStatus::Verified;
  st[0] = CubeStatus::DeltaCounterexample;  // minimal V
  p = prune_by_level(v, kept, st);
  CHECK(std::count(p.certified.begin(), p.certified.end(), true) == 0);
  CHECK(p.v_cut == 0.5);

  st[0] = CubeStatus::Verified;
  st[2] = CubeStatus::BudgetExhausted;  // ties go too
  p = prune_by_level(v, kept, st);
  CHECK(p.certified == std::vector<bool>{true, false, false, false, false});
  CHECK(p.pruned_by_level == std::vector<bool>{false, true, false, true, true});
}

TEST_CASE("certify a linear system") {
  Fixture f;
  const GridValues gv = evaluate_grid(f.c, f.g);
  const auto mask = roa_membership_hard(gv.V, gv.Vdot, 1e-3);
  REQUIRE(cardinality(mask) == f.g.size());
  const VerifyConfig cfg = default_verify_config(f.g);
  const VerifyReport r = certify(f.c, mask, f.g, cfg);
  CHECK(r.certified == mask);
  CHECK(r.count(CubeStatus::Verified) == f.g.size());
  CHECK(std::count(r.pruned_by_level.begin(), r.pruned_by_level.end(), true) == 0);
  CHECK(r.failures.empty());
  CHECK(r.eps_used == std::min(1e-4, f.c.origin.eps));
  CHECK(r.c_max == *std::max_element(r.V.begin(), r.V.end()));

  // empty mask is fine and certifies nothing
  const VerifyReport e = certify(f.c, std::vector<bool>(f.g.size(), false), f.g, cfg);
  CHECK(e.certified_count() == 0);
  CHECK(e.c_max == 0.0);

  // workers do not change anything
  VerifyConfig cfg3 = cfg;
  cfg3.workers = 3;
  CHECK(report_csv(certify(f.c, mask, f.g, cfg3)) == report_csv(r));

  const std::string csv = report_csv(r);
  CHECK(csv.rfind("grid_index,x1,x2,V,Vdot,member_before,status,pruned_by_level,certified\n", 0) == 0);
  const ReportData d = parse_report_csv(csv);
  CHECK(d.points == r.points);
  CHECK(d.V == r.V);
  CHECK(d.certified == r.certified);
  CHECK(d.status == r.status);
  const auto j = summary_json(r, "{\"kind\":\"quadratic\"}");
  CHECK(j.find("\"certified\": 400") != std::string::npos);
  CHECK(j.find("\"kind\": \"quadratic\"") != std::string::npos);
}

TEST_CASE("config validation") {
  VerifyConfig c;
  CHECK_THROWS_AS(c.validate(), VerifyError);
  c.delta_sat = 1e-7;
  c.gamma = 0.1;
  CHECK_NOTHROW(c.validate());
  c.max_boxes = 0;
  CHECK_THROWS_AS(c.validate(), VerifyError);
}
