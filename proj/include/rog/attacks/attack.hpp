#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rog/attacks/losses.hpp"
#include "rog/attacks/target.hpp"
#include "rog/metrics/dice.hpp"

namespace rog::attacks {

struct AttackConfig {
  double eps = 8.0 / 255.0;  // L-inf radius in attack space
  int iterations = 5;
  int queries = 2500;
  int restarts = 1;
  LossKind loss = LossKind::kCrossEntropy;
  LossOptions loss_options;
  std::uint64_t seed = 0;
  double fab_alpha_max = 0.1;
  double fab_beta = 0.9;
  double square_p_init = 0.2;

  void validate() const;
};

struct AttackResult {
  std::string attack;
  Tensor adversarial;
  Tensor delta;
  metrics::DiceReport dice;
  bool success = false;
  int evaluations = 0;
  // Gradient attacks: best loss after each iteration. Square: loss after
  // each accepted proposal.
  std::vector<double> loss_trace;
};

// Projection onto the eps-ball around x0 intersected with [0, 1].
void project(Tensor& x, const Tensor& x0, double eps);

AttackResult pgd_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                        const volumes::TaskSpec& task, const AttackConfig& cfg);

// Iterations after which the step size may be halved.
std::vector<int> apgd_checkpoints(int n_iter);

AttackResult apgd_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                         const volumes::TaskSpec& task, const AttackConfig& cfg);

// Smallest L-inf step delta with g + <grad, delta> = 0.
Tensor linf_hyperplane_step(const Tensor& grad, double g);

AttackResult fab_t_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                          const volumes::TaskSpec& task, const AttackConfig& cfg);

// Cube fraction at query q of n, following the halving milestones.
double square_fraction(double p_init, int q, int n);

AttackResult square_attack(const SegmentationModel& model, const Tensor& x0, const volumes::LabelMask& y,
                           const volumes::TaskSpec& task, const AttackConfig& cfg);

}  // namespace rog::attacks
