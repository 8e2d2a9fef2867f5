#include "rog/training/trainer.hpp"

#include <algorithm>
#include <random>

#include "rog/core/error.hpp"
#include "rog/inference/predict.hpp"
#include "rog/metrics/dice.hpp"
#include "rog/metrics/report_io.hpp"
#include "rog/training/objective.hpp"
#include "rog/training/optimizer.hpp"
#include "rog/volumes/preprocess.hpp"

namespace rog::training {

using volumes::Case;

void TrainConfig::validate() const {
  require(learning_rate >= 0.0, ErrorKind::kInvalidConfig, "learning_rate must be non-negative");
  require(weight_decay >= 0.0, ErrorKind::kInvalidConfig, "weight_decay must be non-negative");
  require(plateau_factor > 0.0 && plateau_factor < 1.0, ErrorKind::kInvalidConfig, "plateau_factor must lie in (0, 1)");
  require(plateau_patience >= 1, ErrorKind::kInvalidConfig, "plateau_patience must be positive");
  require(epochs >= 1, ErrorKind::kInvalidConfig, "epochs must be positive");
  require(batch_size >= 1, ErrorKind::kInvalidConfig, "batch_size must be positive");
  require(batches_per_epoch >= 0, ErrorKind::kInvalidConfig, "batches_per_epoch must be non-negative");
  require(fg_patch_prob >= 0.0 && fg_patch_prob <= 1.0, ErrorKind::kInvalidConfig, "fg_patch_prob must lie in [0, 1]");
  require(free_at.replays >= 1, ErrorKind::kInvalidConfig, "free_at.replays must be positive");
  require(free_at.eps >= 0.0 && free_at.eps <= 1.0, ErrorKind::kInvalidConfig, "free_at.eps must lie in [0, 1]");
  augment.validate();
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool can_postprocess(const volumes::TaskSpec& task) {
  for (int k = 1; k < task.num_classes(); ++k)
    if (task.class_roles[static_cast<std::size_t>(k)] == volumes::ClassRole::kTumor &&
        (static_cast<std::size_t>(k) >= task.avg_object_voxels.size() || task.avg_object_voxels[k] <= 0.0))
      return false;
  return true;
}

struct Sample {
  Tensor x;
  volumes::LabelMask y;
  std::vector<double> scale;  // attack-space to model-space factor per channel
  Tensor unit;                // x in attack space
  Tensor delta;
};

double validation_loss(const model::RogNet& net, std::span<const Case> val, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const PatchPair p = sample_patch(val[i], net.config().patch_size, 0.5, mix(seed, i));
    total += combined_loss(net.forward(p.image.data), p.mask).total();
  }
  return total / static_cast<double>(val.size());
}

// Mean patch Dice of the validation cases after a PGD-style attack on the
// combined loss: uniform start in the eps-ball, 5 steps of eps/4.
double robust_dice(const model::RogNet& net, std::span<const Case> val, double eps, std::uint64_t seed) {
  constexpr int kSteps = 5;
  const float feps = static_cast<float>(eps), eta = feps / 4.0f;
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const PatchPair p = sample_patch(val[i], net.config().patch_size, 0.5, mix(seed, i));
    const volumes::AffineMap map = volumes::to_attack_space(val[i].image).second;
    Tensor unit = map.to_unit(p.image.data);
    for (float& v : unit.values()) v = std::clamp(v, 0.0f, 1.0f);
    std::mt19937_64 rng(mix(seed ^ 0x5eed, i));
    std::uniform_real_distribution<float> u(-feps, feps);
    Tensor delta(unit.shape());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = std::clamp(unit[k] + u(rng), 0.0f, 1.0f) - unit[k];
    auto perturbed = [&] {
      Tensor x = p.image.data;
      const std::size_t plane = x.plane();
      for (int c = 0; c < x.channels(); ++c) {
        const float k = static_cast<float>(map.scale(c));
        for (std::size_t v = 0; v < plane; ++v) x[c * plane + v] += k * delta[c * plane + v];
      }
      return x;
    };
    for (int step = 0; step < kSteps; ++step) {
      model::Tape tape;
      const Tensor logits = net.forward(perturbed(), &tape);
      Tensor g;
      combined_loss(logits, p.mask, &g);
      const Tensor gx = net.backward(g, tape, nullptr, true);
      for (std::size_t k = 0; k < delta.size(); ++k) {
        const float st = gx[k] > 0.0f ? eta : (gx[k] < 0.0f ? -eta : 0.0f);
        const float d = std::clamp(delta[k] + st, -feps, feps);
        delta[k] = std::clamp(unit[k] + d, 0.0f, 1.0f) - unit[k];
      }
    }
    total += metrics::dice_report(inference::argmax_labels(net.forward(perturbed())), p.mask).mean;
  }
  return total / static_cast<double>(val.size());
}

TrainResult run(model::RogNet& net, std::span<const Case> train, std::span<const Case> val,
                const volumes::TaskSpec& task, const TrainConfig& cfg, int replays, double eps, int epochs,
                const TrainHooks& hooks) {
  cfg.validate();
  require(!train.empty(), ErrorKind::kInvalidArgument, "empty training set");
  require(task.num_classes() == net.config().num_classes, ErrorKind::kInvalidArgument,
          "task and model disagree on classes");
  const bool adversarial = eps > 0.0;

  std::vector<volumes::AffineMap> maps;
  if (adversarial)
    for (const Case& c : train) maps.push_back(volumes::to_attack_space(c.image).second);

  Adam opt(net.params(), cfg.learning_rate, cfg.weight_decay);
  PlateauScheduler sched(cfg.plateau_factor, cfg.plateau_patience);
  const int batches = cfg.batches_per_epoch > 0
                          ? cfg.batches_per_epoch
                          : std::max<int>(1, static_cast<int>((train.size() + cfg.batch_size - 1) / cfg.batch_size));
  const Index3 patch = net.config().patch_size;
  const std::uint64_t val_seed = mix(cfg.seed, 0x7a1);

  TrainResult result;
  std::vector<Tensor> best_params;
  double best_score = 0.0;
  const float feps = static_cast<float>(eps);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss_sum = 0.0;
    long loss_n = 0;
    for (int b = 0; b < batches; ++b) {
      const std::uint64_t bseed = mix(mix(cfg.seed, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(b));
      std::mt19937_64 rng(bseed);
      std::vector<Sample> batch;
      for (int i = 0; i < cfg.batch_size; ++i) {
        const auto ci = std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng);
        const std::uint64_t s_patch = rng(), s_aug = rng();
        PatchPair p = augment(sample_patch(train[ci], patch, cfg.fg_patch_prob, s_patch), s_aug, cfg.augment);
        Sample s{std::move(p.image.data), std::move(p.mask), {}, {}, {}};
        if (adversarial) {
          s.scale = maps[ci].range;
          s.unit = maps[ci].to_unit(s.x);
          for (float& v : s.unit.values()) v = std::clamp(v, 0.0f, 1.0f);
          s.delta = Tensor(s.x.shape());
        }
        batch.push_back(std::move(s));
      }

      for (int r = 0; r < replays; ++r) {
        model::Grads grads = net.params().zeros_like();
        for (Sample& s : batch) {
          Tensor input = s.x;
          if (adversarial) {
            const std::size_t plane = input.plane();
            for (int c = 0; c < input.channels(); ++c) {
              const float k = static_cast<float>(s.scale[static_cast<std::size_t>(c)]);
              for (std::size_t v = 0; v < plane; ++v) {
                const std::size_t i = c * plane + v;
                input[i] += k * s.delta[i];
              }
            }
          }
          model::Tape tape;
          const Tensor logits = net.forward(input, &tape);
          Tensor g;
          loss_sum += combined_loss(logits, s.y, &g).total();
          ++loss_n;
          g *= 1.0f / static_cast<float>(batch.size());
          const Tensor gx = net.backward(g, tape, &grads, adversarial);
          if (adversarial) {
            for (std::size_t i = 0; i < s.delta.size(); ++i) {
              const float step = gx[i] > 0.0f ? feps : (gx[i] < 0.0f ? -feps : 0.0f);
              const float d = std::clamp(s.delta[i] + step, -feps, feps);
              s.delta[i] = std::clamp(s.unit[i] + d, 0.0f, 1.0f) - s.unit[i];
            }
            if (hooks.on_perturbation) hooks.on_perturbation(s.delta);
          }
        }
        opt.step(net.params(), grads);
      }
    }

    EpochLog row;
    row.epoch = epoch + 1;
    row.lr = opt.learning_rate();
    row.train_loss = loss_sum / static_cast<double>(std::max<long>(1, loss_n));
    if (!val.empty()) {
      row.val_loss = validation_loss(net, val, val_seed);
      row.val_dice = evaluate_dice(net, val, task);
      if (adversarial && cfg.free_at.select == Selection::kRobustDice)
        row.val_robust_dice = robust_dice(net, val, eps, mix(val_seed, 0xad5));
    } else {
      row.val_loss = row.train_loss;
    }
    sched.step(row.val_loss, opt);
    const double score = row.val_robust_dice >= 0.0 ? row.val_robust_dice : row.val_dice;
    if (result.best_epoch < 0 || score > best_score) {
      best_score = score;
      result.best_epoch = row.epoch;
      result.best_val_dice = row.val_dice;
      if (cfg.restore_best) {
        best_params.clear();
        for (int id = 0; id < net.params().size(); ++id) best_params.push_back(net.params().value(id));
      }
      if (!hooks.best_checkpoint.empty()) model::save_checkpoint(hooks.best_checkpoint, net);
    }
    result.log.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  if (cfg.restore_best && !best_params.empty())
    for (int id = 0; id < net.params().size(); ++id) net.params().value(id) = best_params[static_cast<std::size_t>(id)];
  result.optimizer_steps = opt.steps();
  return result;
}

}  // namespace

double evaluate_dice(const model::RogNet& net, std::span<const Case> cases, const volumes::TaskSpec& task) {
  require(!cases.empty(), ErrorKind::kInvalidArgument, "no cases to evaluate");
  inference::PredictOptions opts;
  opts.postprocess = can_postprocess(task);
  double total = 0.0;
  for (const Case& c : cases) {
    const auto pred = inference::predict_case(net, c.image, task, opts);
    total += metrics::dice_report(pred, c.mask).mean;
  }
  return total / static_cast<double>(cases.size());
}

TrainResult train_standard(model::RogNet& net, std::span<const Case> train, std::span<const Case> val,
                           const volumes::TaskSpec& task, const TrainConfig& cfg, const TrainHooks& hooks) {
  return run(net, train, val, task, cfg, 1, 0.0, cfg.epochs, hooks);
}

TrainResult train_free_adv(model::RogNet& net, std::span<const Case> train, std::span<const Case> val,
                           const volumes::TaskSpec& task, const TrainConfig& cfg, const TrainHooks& hooks) {
  require(cfg.free_at.enabled, ErrorKind::kInvalidConfig, "free adversarial training is not enabled");
  const int m = cfg.free_at.replays;
  return run(net, train, val, task, cfg, m, cfg.free_at.eps, std::max(1, cfg.epochs / m), hooks);
}

void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,lr,train_loss,val_loss,val_dice\n";
  for (const auto& r : log)
    os << r.epoch << ',' << metrics::format_real(r.lr) << ',' << metrics::format_real(r.train_loss) << ','
       << metrics::format_real(r.val_loss) << ',' << metrics::format_real(r.val_dice) << '\n';
}

}  // namespace rog::training
