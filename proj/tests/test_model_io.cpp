#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "roa/model_io.hpp"
#include "roa/verify.hpp"

using namespace roa;
using nlohmann::json;

namespace {

TrainResult small_run() {
  TrainConfig cfg;
  cfg.hidden = 6;
  cfg.grid_per_dim = 8;
  cfg.epochs = 3;
  cfg.seed = 4;
  return train(builtin_system("vanderpol_reverse"), cfg);
}

ModelMeta meta_for(const TrainResult& r) {
  ModelMeta m;
  m.kind = "neural";
  m.train.hidden = 6;
  m.train.grid_per_dim = 8;
  m.train.epochs = 3;
  m.train.seed = 4;
  m.best_epoch = r.best_epoch;
  m.best_cardinality = r.best_cardinality;
  return m;
}

}  // namespace

TEST_CASE("neural model round trip is bit exact") {
  const TrainResult r = small_run();
  const std::string text = model_to_json(r.candidate, meta_for(r));
  const LoadedModel m = model_from_json(text);
  CHECK(m.candidate.net.flatten() == r.candidate.net.flatten());
  CHECK(m.candidate.P_theta == r.candidate.P_theta);
  CHECK(m.candidate.alpha == r.candidate.alpha);
  CHECK(m.candidate.origin.eps == r.candidate.origin.eps);
  CHECK(m.meta.train.seed == 4);
  CHECK(m.meta.best_cardinality == r.best_cardinality);
  CHECK(m.grid.points == r.grid.points);
  CHECK(model_to_json(m.candidate, m.meta) == text);

  // identical values on every grid point
  const GridValues a = evaluate_grid(r.candidate, r.grid), b = evaluate_grid(m.candidate, m.grid);
  CHECK(a.V == b.V);
  CHECK(a.Vdot == b.Vdot);
}

TEST_CASE("quadratic model round trip") {
  TrainConfig cfg;
  cfg.grid_per_dim = 10;
  cfg.epochs = 5;
  for (bool optimize : {false, true}) {
    const TrainResult r = train_quadratic_baseline(builtin_system("quartic_interaction"), cfg, optimize);
    ModelMeta meta;
    meta.kind = optimize ? "optimized" : "quadratic";
    meta.train = cfg;
    const LoadedModel m = model_from_json(model_to_json(r.candidate, meta));
    CHECK(m.candidate.kind == CandidateKind::Quadratic);
    CHECK(m.candidate.P_theta == r.candidate.P_theta);
    CHECK(m.meta.kind == meta.kind);
  }
}

TEST_CASE("corrupt and mismatched files") {
  const TrainResult r = small_run();
  const json base = json::parse(model_to_json(r.candidate, meta_for(r)));

  CHECK_THROWS_AS(model_from_json("not json"), ModelError);
  CHECK_THROWS_AS(model_from_json("{}"), ModelError);

  json j = base;
  j["P_theta"][0][0] = j["P_theta"][0][0].get<double>() * 1.01;
  CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("corrupt model file"), ModelError);

  j = base;
  j["alpha"] = j["alpha"].get<double>() + 1.0;
  CHECK_THROWS_AS(model_from_json(j.dump()), ModelError);

  j = base;
  j["b1"].erase(0);
  CHECK_THROWS_AS(model_from_json(j.dump()), ModelError);

  j = base;
  j["kind"] = "cubic";
  CHECK_THROWS_AS(model_from_json(j.dump()), ModelError);

  j = base;
  j["system"] = builtin_system_config("quartic_interaction");
  j["n"] = 3;
  CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("mismatch"), ModelError);
}

TEST_CASE("text file helpers") {
  const auto path = (std::filesystem::temp_directory_path() / "roacert_io_test.txt").string();
  write_text_file(path, "abc\n1.5\n");
  CHECK(read_text_file(path) == "abc\n1.5\n");
  std::remove(path.c_str());
  CHECK_THROWS(read_text_file(path));
}
