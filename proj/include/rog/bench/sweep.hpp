#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rog/attacks/attack.hpp"
#include "rog/bench/config.hpp"
#include "rog/metrics/report_io.hpp"
#include "rog/model/network.hpp"

namespace rog::bench {

inline constexpr const char* kCleanRow = "Clean";

struct SweepPoint {
  std::string attack;
  int eps_255 = 8;
  int iterations = 5;
  int queries = 2500;
  std::uint64_t seed = 0;
};

// Perturbation-radius and box checks over every attack output.
struct ThreatAudit {
  std::size_t outputs = 0;
  std::size_t radius_violations = 0;
  std::size_t box_violations = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max(|delta|_inf - eps)

  void add(const attacks::AttackResult& r, const Tensor& x0, double eps);
  void merge(const ThreatAudit& o);
  bool ok() const { return radius_violations == 0 && box_violations == 0; }
};

struct SweepTable {
  std::vector<metrics::CaseRow> rows;  // clean rows first, then grid rows
  ThreatAudit audit;
  double clean_mean_dice = 0.0;
};

std::vector<SweepPoint> plan_sweep(const SweepSettings& sweep, const AttackSettings& attack);

// Runs one named attack ("PGD", "APGD-CE", "APGD-DLR", "FAB-T", "Square").
attacks::AttackResult run_named_attack(const std::string& name, const attacks::SegmentationModel& model,
                                       const Tensor& x0, const volumes::LabelMask& y, const volumes::TaskSpec& task,
                                       const attacks::AttackConfig& cfg);

// Attack-space clean Dice (no post-processing) per case.
std::vector<metrics::DiceReport> clean_reports(const model::RogNet& net, std::span<const volumes::Case> cases);

// One clean row per case (eps 0) then one row per (point, case). The task's
// clean reference Dice defaults to the mean clean Dice over the cases.
SweepTable run_attack_sweep(const model::RogNet& net, std::span<const volumes::Case> cases, volumes::TaskSpec task,
                            const std::vector<SweepPoint>& points, const AttackSettings& base,
                            std::ostream* progress = nullptr);

struct EnsembleTable {
  std::vector<metrics::CaseRow> rows;  // per case: clean, then the four attacks
  metrics::RobustSummary summary;
  ThreatAudit audit;
  double clean_mean_dice = 0.0;
};

EnsembleTable run_ensemble(const model::RogNet& net, std::span<const volumes::Case> cases, volumes::TaskSpec task,
                           const AttackSettings& settings, std::ostream* progress = nullptr);

}  // namespace rog::bench
