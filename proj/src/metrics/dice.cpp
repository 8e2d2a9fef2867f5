#include "rog/metrics/dice.hpp"

#include <algorithm>
#include <limits>

#include "rog/core/error.hpp"

namespace rog::metrics {

double dice(const LabelMask& pred, const LabelMask& gt, int class_id) {
  require(pred.shape == gt.shape && pred.size() == gt.size(), ErrorKind::kInvalidArgument,
          "Dice needs masks of identical shape");
  require(class_id >= 1, ErrorKind::kInvalidArgument, "Dice is defined for foreground classes only");
  const auto cls = static_cast<std::uint8_t>(class_id);
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred.labels[i] == cls;
    const bool g = gt.labels[i] == cls;
    a += p;
    b += g;
    both += p && g;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

DiceReport dice_report(const LabelMask& pred, const LabelMask& gt) {
  require(pred.shape == gt.shape, ErrorKind::kInvalidArgument, "Dice needs masks of identical shape");
  const int classes = gt.num_classes;
  std::vector<std::size_t> a(static_cast<std::size_t>(classes), 0), b(a), both(a);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto p = pred.labels[i], g = gt.labels[i];
    if (p < classes) ++a[p];
    ++b[g];
    if (p == g) ++both[g];
  }
  DiceReport r;
  double sum = 0.0;
  for (int k = 1; k < classes; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double d = (a[kk] + b[kk] == 0) ? 1.0 : 2.0 * double(both[kk]) / double(a[kk] + b[kk]);
    r.per_class[k] = d;
    sum += d;
  }
  r.mean = classes > 1 ? sum / (classes - 1) : 1.0;
  return r;
}

bool attack_success(double dice_mean, const TaskSpec& task) {
  require(task.clean_mean_dice.has_value(), ErrorKind::kMissingReference,
          "attack success needs the clean mean Dice of the task");
  return dice_mean < *task.clean_mean_dice / 2.0;
}

RobustSummary aggregate_robust(const std::vector<std::map<std::string, DiceReport>>& results,
                               const TaskSpec& task) {
  require(!results.empty(), ErrorKind::kInvalidArgument, "no results to aggregate");
  std::vector<std::string> attacks;
  for (const auto& [name, _] : results.front()) attacks.push_back(name);
  require(!attacks.empty(), ErrorKind::kInvalidArgument, "cases carry no attack results");

  RobustSummary s;
  std::size_t robust = 0;
  for (const auto& per_case : results) {
    require(per_case.size() == attacks.size(), ErrorKind::kInvalidArgument, "ragged attack results");
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& name : attacks) {
      const auto it = per_case.find(name);
      require(it != per_case.end(), ErrorKind::kInvalidArgument, "case is missing attack " + name);
      s.per_attack_dice[name] += it->second.mean;
      worst = std::min(worst, it->second.mean);
    }
    s.worst_case_per_case.push_back(worst);
    if (!attack_success(worst, task)) ++robust;
  }
  for (auto& [_, v] : s.per_attack_dice) v /= static_cast<double>(results.size());
  s.robust_accuracy = static_cast<double>(robust) / static_cast<double>(results.size());
  return s;
}

double auc_dice_epsilon(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 2, ErrorKind::kInvalidArgument, "AUC needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i)
    require(points[i].first > points[i - 1].first, ErrorKind::kInvalidArgument, "eps must be strictly increasing");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += 0.5 * (points[i].second + points[i - 1].second) * (points[i].first - points[i - 1].first);
  return area / (points.back().first - points.front().first);
}

}  // namespace rog::metrics
