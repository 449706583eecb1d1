#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cmsnn/network.hpp"
#include "cmsnn/train.hpp"

namespace cmsnn {

inline constexpr const char* kVersion = "0.1.0";

struct DataConfig {
  int train_size = 5000;
  int val_size = 1000;
  int test_size = 1000;
  std::uint64_t train_seed = 42;
  std::uint64_t val_seed = 41;
  std::uint64_t test_seed = 40;
  bool balanced = true;
};

struct EvalConfig {
  double alpha = 0.1;
  int n_chips = 30;
  bool freeze_encodings = false;
  int bonferroni_m = 0;  // 0 = all pairwise comparisons within the group
};

// One model to instantiate inside a width group.
struct ModelSpec {
  std::string id;    // unique across groups, e.g. "w128-cm-g16"
  std::string name;  // short name inside the group, e.g. "cm-g16"
  ModelFamily family = ModelFamily::mlp;
  int hidden = 0;
  int genes = 0;  // cm only
};

// Everything a full experiment needs: the dataset, the groups of models
// (one group per hidden width), the training protocol, and the simulated
// deployment. Parsed from a sectioned key=value file; unknown sections or
// keys are hard errors.
struct ExperimentConfig {
  std::string name = "paper";
  std::vector<int> hidden_widths = {32, 128};
  std::vector<std::string> families = {"mlp", "mlp-hw-aware", "cm"};
  std::map<int, std::vector<int>> genes = {{32, {4, 8, 16}}, {128, {4, 16, 64}}};
  std::uint64_t master_seed = 1;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;

  std::vector<ModelSpec> model_specs(int width) const;
  std::vector<int> model_widths(int hidden) const { return {4, hidden, 3}; }

  static ExperimentConfig smoke();
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical serialization: fixed section and key order, 17 significant
// digits. parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

std::uint64_t config_hash(const ExperimentConfig& cfg);

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

}  // namespace cmsnn
