#include "roa/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace roa {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json matrix_json(const DenseMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

DenseMatrix matrix_from(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw ModelError(std::string(what) + ": wrong number of rows");
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) throw ModelError(std::string(what) + ": wrong number of columns");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

bool close(double a, double b, double scale) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, scale); }

}  // namespace

std::string model_to_json(const LyapCandidate& c, const ModelMeta& meta) {
  ordered_json j;
  j["format"] = "roacert-model";
  j["version"] = 1;
  j["kind"] = meta.kind;
  j["n"] = c.net.n();
  j["h"] = c.net.h();
  j["W1"] = matrix_json(c.net.W1);
  j["b1"] = c.net.b1;
  j["W2"] = matrix_json(c.net.W2).at(0);
  j["P_theta"] = matrix_json(c.P_theta);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["epsilon"] = c.origin.eps;
  j["origin"] = {{"delta", c.origin.delta},         {"C_f", c.origin.C_f},
                 {"C_g", c.origin.C_g},             {"alpha_bar", c.origin.alpha_bar},
                 {"eps_delta", c.origin.eps_delta}, {"eps", c.origin.eps}};
  const TrainConfig& t = meta.train;
  j["training"] = {{"seed", t.seed},
                   {"epochs", t.epochs},
                   {"lr", t.lr},
                   {"hidden", t.hidden},
                   {"grid_per_dim", t.grid_per_dim},
                   {"eps_vdot", t.eps_vdot},
                   {"sigmoid_k", t.sigmoid_k},
                   {"beta", t.beta},
                   {"delta", t.delta},
                   {"best_epoch", meta.best_epoch},
                   {"best_cardinality", meta.best_cardinality}};
  j["system"] = system_to_config(*c.sys);
  return j.dump(1) + "\n";
}

LoadedModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("corrupt model file: ") + e.what());
  }
  LoadedModel out;
  try {
    if (j.value("format", "") != "roacert-model") throw ModelError("corrupt model file: not a roacert model");
    const auto n = j.at("n").get<std::size_t>();
    const auto h = j.at("h").get<std::size_t>();
    SystemPtr sys;
    try {
      sys = load_system(j.at("system").get<std::string>());
    } catch (const std::exception& e) {
      throw ModelError(std::string("model file has an invalid system: ") + e.what());
    }
    if (sys->dim() != n) throw ModelError("model/system mismatch: model n differs from the system dimension");

    const json& tr = j.at("training");
    ModelMeta& m = out.meta;
    m.kind = j.at("kind").get<std::string>();
    m.train.seed = tr.at("seed").get<std::uint64_t>();
    m.train.epochs = tr.at("epochs").get<std::size_t>();
    m.train.lr = tr.at("lr").get<double>();
    m.train.hidden = tr.at("hidden").get<std::size_t>();
    m.train.grid_per_dim = tr.at("grid_per_dim").get<std::size_t>();
    m.train.eps_vdot = tr.at("eps_vdot").get<double>();
    m.train.sigmoid_k = tr.at("sigmoid_k").get<double>();
    m.train.beta = tr.at("beta").get<double>();
    m.train.delta = tr.at("delta").get<double>();
    m.best_epoch = tr.value("best_epoch", std::size_t{0});
    m.best_cardinality = tr.value("best_cardinality", std::size_t{0});

    NetParams net(n, h);
    net.W1 = matrix_from(j.at("W1"), h, n, "W1");
    net.b1 = j.at("b1").get<std::vector<double>>();
    if (net.b1.size() != h) throw ModelError("b1 has the wrong length");
    const auto w2 = j.at("W2").get<std::vector<double>>();
    if (w2.size() != h) throw ModelError("W2 has the wrong length");
    net.W2 = DenseMatrix(1, h, w2);
    const DenseMatrix P = matrix_from(j.at("P_theta"), n, n, "P_theta");

    out.grid = make_grid(sys->domain, m.train.grid_per_dim);
    const OriginContext ctx = make_origin_context(sys, origin_delta(m.train, out.grid, *sys));
    if (m.kind == "neural") {
      out.candidate = build_candidate(net, ctx, j.at("beta").get<double>());
    } else if (m.kind == "quadratic" || m.kind == "optimized") {
      out.candidate = quadratic_candidate(P, ctx);
    } else {
      throw ModelError("unknown model kind '" + m.kind + "'");
    }

    const LyapCandidate& c = out.candidate;
    const double scale = P.max_abs();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        if (!close(c.P_theta(r, s), P(r, s), scale))
          throw ModelError("corrupt model file: stored P_theta does not match the network parameters");
    if (!close(c.alpha, j.at("alpha").get<double>(), c.alpha))
      throw ModelError("corrupt model file: stored alpha does not match the network parameters");
    if (!close(c.origin.eps, j.at("epsilon").get<double>(), c.origin.eps))
      throw ModelError("corrupt model file: stored epsilon does not match the recomputed value");
  } catch (const json::exception& e) {
    throw ModelError(std::string("corrupt model file: ") + e.what());
  } catch (const LyapunovError& e) {
    throw ModelError(std::string("model file does not describe a valid candidate: ") + e.what());
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace roa
