#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "roa/lyapunov.hpp"
#include "roa/train.hpp"

namespace roa {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "neural", "quadratic" or "optimized".
struct ModelMeta {
  std::string kind = "neural";
  TrainConfig train;
  std::size_t best_epoch = 0;
  std::size_t best_cardinality = 0;
};

struct LoadedModel {
  LyapCandidate candidate;
  ModelMeta meta;
  Grid grid;  // training grid, rebuilt from the embedded system and grid size
};

// JSON document with the network, P_theta, alpha, eps, the training settings
// and the full system config. Reals are written in shortest round-trip form,
// so every double reloads bit for bit.
std::string model_to_json(const LyapCandidate& c, const ModelMeta& meta);

// Rebuilds the candidate from the stored parameters and checks the stored
// P_theta / alpha against the rebuilt ones.
LoadedModel model_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace roa
