#include "rog/bench/sweep.hpp"

#include <algorithm>

#include "rog/attacks/autoattack.hpp"
#include "rog/core/error.hpp"
#include "rog/inference/predict.hpp"
#include "rog/volumes/preprocess.hpp"

namespace rog::bench {

using attacks::AttackConfig;
using attacks::AttackResult;
using volumes::Case;

void ThreatAudit::add(const AttackResult& r, const Tensor& x0, double eps) {
  ++outputs;
  double linf = 0.0;
  bool in_box = true;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    linf = std::max(linf, std::abs(static_cast<double>(r.adversarial[i]) - x0[i]));
    in_box = in_box && r.adversarial[i] >= 0.0f && r.adversarial[i] <= 1.0f;
  }
  max_excess = std::max(max_excess, linf - eps);
  if (linf > eps + 1e-6) ++radius_violations;
  if (!in_box) ++box_violations;
}

void ThreatAudit::merge(const ThreatAudit& o) {
  outputs += o.outputs;
  radius_violations += o.radius_violations;
  box_violations += o.box_violations;
  max_excess = std::max(max_excess, o.max_excess);
}

std::vector<SweepPoint> plan_sweep(const SweepSettings& sweep, const AttackSettings& attack) {
  std::vector<SweepPoint> points;
  for (const auto& name : sweep.attacks)
    for (std::uint64_t seed : sweep.seeds) {
      switch (sweep.kind) {
        case SweepKind::kEpsilon:
          for (int e : sweep.eps_grid_255) points.push_back({name, e, attack.iterations, attack.queries, seed});
          break;
        case SweepKind::kIterations:
          for (int it : sweep.iteration_grid) points.push_back({name, attack.eps_255, it, attack.queries, seed});
          break;
        case SweepKind::kQueries:
          for (int q : sweep.query_grid) points.push_back({name, attack.eps_255, attack.iterations, q, seed});
          break;
      }
    }
  return points;
}

AttackResult run_named_attack(const std::string& name, const attacks::SegmentationModel& model, const Tensor& x0,
                              const volumes::LabelMask& y, const volumes::TaskSpec& task, const AttackConfig& cfg) {
  AttackConfig c = cfg;
  if (name == "PGD") return attacks::pgd_attack(model, x0, y, task, c);
  if (name == "APGD-CE") {
    c.loss = attacks::LossKind::kCrossEntropy;
    return attacks::apgd_attack(model, x0, y, task, c);
  }
  if (name == "APGD-DLR") {
    c.loss = attacks::LossKind::kDlr;
    return attacks::apgd_attack(model, x0, y, task, c);
  }
  if (name == "FAB-T") return attacks::fab_t_attack(model, x0, y, task, c);
  if (name == "Square") return attacks::square_attack(model, x0, y, task, c);
  throw Error(ErrorKind::kInvalidConfig, "unknown attack: " + name);
}

namespace {

struct Prepared {
  Tensor x0;
  attacks::NetworkTarget target;
};

Prepared prepare(const model::RogNet& net, const Case& c) {
  auto [unit, map] = volumes::to_attack_space(c.image);
  attacks::NetworkTarget target(net, std::move(map), c.image.shape());
  return {std::move(unit.data), std::move(target)};
}

metrics::CaseRow row_of(const std::string& case_id, const std::string& attack, int eps, int iterations, int queries,
                        std::uint64_t seed, const metrics::DiceReport& d, bool success) {
  metrics::CaseRow r;
  r.case_id = case_id;
  r.attack = attack;
  r.eps_255 = eps;
  r.iterations = iterations;
  r.queries = queries;
  r.seed = static_cast<int>(seed);
  r.dice = d;
  r.success = success;
  return r;
}

AttackConfig attack_config(const AttackSettings& s, int eps, int iterations, int queries, std::uint64_t seed) {
  AttackConfig c;
  c.eps = eps / 255.0;
  c.iterations = iterations;
  c.queries = queries;
  c.restarts = s.restarts;
  c.seed = seed;
  c.loss_options.foreground_only = s.foreground_only;
  return c;
}

double mean_of(const std::vector<metrics::DiceReport>& r) {
  double t = 0.0;
  for (const auto& d : r) t += d.mean;
  return r.empty() ? 0.0 : t / static_cast<double>(r.size());
}

bool success_of(double d, const volumes::TaskSpec& task) {
  return task.clean_mean_dice.has_value() && metrics::attack_success(d, task);
}

}  // namespace

std::vector<metrics::DiceReport> clean_reports(const model::RogNet& net, std::span<const Case> cases) {
  std::vector<metrics::DiceReport> out;
  for (const Case& c : cases) {
    Prepared p = prepare(net, c);
    auto pred = inference::argmax_labels(p.target.logits(p.x0));
    pred.num_classes = c.mask.num_classes;
    out.push_back(metrics::dice_report(pred, c.mask));
  }
  return out;
}

SweepTable run_attack_sweep(const model::RogNet& net, std::span<const Case> cases, volumes::TaskSpec task,
                            const std::vector<SweepPoint>& points, const AttackSettings& base, std::ostream* progress) {
  require(!cases.empty(), ErrorKind::kInvalidArgument, "no cases to attack");
  SweepTable t;
  const auto clean = clean_reports(net, cases);
  t.clean_mean_dice = mean_of(clean);
  if (!task.clean_mean_dice) task.clean_mean_dice = t.clean_mean_dice;
  for (std::size_t i = 0; i < cases.size(); ++i)
    t.rows.push_back(row_of(cases[i].id, kCleanRow, 0, 0, 0, 0, clean[i], success_of(clean[i].mean, task)));

  for (const SweepPoint& pt : points) {
    const AttackConfig cfg = attack_config(base, pt.eps_255, pt.iterations, pt.queries, pt.seed);
    double total = 0.0;
    for (const Case& c : cases) {
      Prepared p = prepare(net, c);
      const AttackResult r = run_named_attack(pt.attack, p.target, p.x0, c.mask, task, cfg);
      t.audit.add(r, p.x0, cfg.eps);
      total += r.dice.mean;
      t.rows.push_back(row_of(c.id, pt.attack, pt.eps_255, pt.iterations, pt.queries, pt.seed, r.dice, r.success));
    }
    if (progress)
      *progress << pt.attack << " eps=" << format_eps_255(pt.eps_255) << " it=" << pt.iterations
                << " q=" << pt.queries << " seed=" << pt.seed << " mean_dice=" << metrics::format_real(total / cases.size())
                << '\n';
  }
  return t;
}

EnsembleTable run_ensemble(const model::RogNet& net, std::span<const Case> cases, volumes::TaskSpec task,
                           const AttackSettings& s, std::ostream* progress) {
  require(!cases.empty(), ErrorKind::kInvalidArgument, "no cases to attack");
  EnsembleTable t;
  const auto clean = clean_reports(net, cases);
  t.clean_mean_dice = mean_of(clean);
  if (!task.clean_mean_dice) task.clean_mean_dice = t.clean_mean_dice;
  const AttackConfig cfg = attack_config(s, s.eps_255, s.iterations, s.queries, s.seed);

  std::vector<std::map<std::string, metrics::DiceReport>> per_case;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& c = cases[i];
    Prepared p = prepare(net, c);
    t.rows.push_back(row_of(c.id, kCleanRow, 0, 0, 0, 0, clean[i], success_of(clean[i].mean, task)));
    const auto ens = attacks::run_autoattack(p.target, p.x0, c.mask, task, cfg, s.early_exit);
    std::map<std::string, metrics::DiceReport> m;
    for (const auto& r : ens.attacks) {
      t.audit.add(r, p.x0, cfg.eps);
      const bool gradient = r.attack != "Square";
      t.rows.push_back(row_of(c.id, r.attack, s.eps_255, gradient ? s.iterations : 0, gradient ? 0 : s.queries,
                              s.seed, r.dice, r.success));
      m[r.attack] = r.dice;
    }
    per_case.push_back(std::move(m));
    if (progress) {
      *progress << c.id << " clean=" << metrics::format_real(clean[i].mean);
      for (const auto& r : ens.attacks) *progress << ' ' << r.attack << '=' << metrics::format_real(r.dice.mean);
      *progress << '\n';
    }
  }
  if (!s.early_exit) t.summary = metrics::aggregate_robust(per_case, task);
  return t;
}

}  // namespace rog::bench
