#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "rog/bench/config.hpp"
#include "rog/model/network.hpp"
#include "rog/volumes/manifest.hpp"

namespace rog::bench {

enum class Mode { kPreprocess, kTrain, kTrainFree, kAttack, kSweep, kReport };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Environment switch for bit-reproducible runs: pins the scalar kernels.
inline constexpr const char* kDeterministicEnv = "ROG_DETERMINISTIC";
bool deterministic_requested();

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  bool deterministic = false;
  std::ostream* log = nullptr;
};

// Artifact layout under the output directory.
namespace layout {
std::filesystem::path preprocessed_manifest(const std::filesystem::path& out);
std::filesystem::path checkpoint(const std::filesystem::path& out, bool free);
std::filesystem::path train_log(const std::filesystem::path& out, bool free);
std::filesystem::path ensemble_csv(const std::filesystem::path& out);
std::filesystem::path sweep_csv(const std::filesystem::path& out, const std::string& model, SweepKind kind);
std::filesystem::path report_dir(const std::filesystem::path& out);
}  // namespace layout

struct Dataset {
  volumes::Manifest manifest;
  std::vector<volumes::Case> train;
  std::vector<volumes::Case> val;
};

// Loads the preprocessed dataset; not-found when preprocess has not run.
Dataset load_preprocessed(const std::filesystem::path& out);

model::LatticeConfig model_config(const ExperimentConfig& cfg, const Dataset& data);

void run_preprocess(const RunContext& ctx);
void run_train(const RunContext& ctx, bool free);
void run_attack(const RunContext& ctx);
void run_sweep(const RunContext& ctx);
void run_report(const RunContext& ctx);

// Dispatches and writes run_<mode>.json (config hash, seeds, kernels).
void run_mode(Mode mode, const RunContext& ctx);

}  // namespace rog::bench
