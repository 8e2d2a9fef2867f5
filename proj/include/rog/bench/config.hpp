#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rog/training/trainer.hpp"
#include "rog/volumes/synth.hpp"

namespace rog::bench {

// "8/255" -> 8. Plain integers are accepted as numerators; "0" is the clean
// sentinel.
int parse_eps_255(const std::string& s);
std::string format_eps_255(int numerator);

struct SyntheticDataset {
  int cases = 20;
  std::uint64_t seed = 1;
  volumes::SynthConfig synth;
};

struct ModelSettings {
  int base_width = 16;
  int length = 2;
  Index3 patch{32, 32, 32};
  Index3 initial_factors{2, 2, 2};
  bool auto_configure = false;
  long long voxel_budget = 1600000;  // auto_configure only
  std::uint64_t init_seed = 0;
};

struct AttackSettings {
  int eps_255 = 8;
  int iterations = 5;
  int queries = 2500;
  int restarts = 1;
  bool early_exit = false;
  bool foreground_only = false;
  std::uint64_t seed = 0;
};

enum class SweepKind { kEpsilon, kIterations, kQueries };

struct SweepSettings {
  SweepKind kind = SweepKind::kEpsilon;
  std::vector<std::string> attacks{"PGD", "APGD-CE"};
  std::vector<int> eps_grid_255{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  std::vector<int> iteration_grid{5};
  std::vector<int> query_grid{500, 1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5000};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> models{"clean", "free"};
};

struct ExperimentConfig {
  std::filesystem::path task_manifest;  // empty when the synthetic dataset is used
  std::optional<SyntheticDataset> synthetic;
  double split_fraction = 0.8;
  std::uint64_t split_seed = 0;
  ModelSettings model;
  training::TrainConfig train;
  bool free_from_scratch = false;
  AttackSettings attack;
  SweepSettings sweep;
  std::filesystem::path base_dir;  // directory of the config file

  void validate() const;
};

// Throws invalid-config on malformed input or unknown keys.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

const char* to_string(SweepKind k);

}  // namespace rog::bench
