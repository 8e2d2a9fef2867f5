#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rog/core/error.hpp"
#include "rog/training/augment.hpp"
#include "rog/training/objective.hpp"
#include "rog/training/optimizer.hpp"
#include "rog/training/sampling.hpp"
#include "rog/training/trainer.hpp"
#include "rog/volumes/synth.hpp"

using namespace rog;
using namespace rog::training;
using volumes::Case;
using volumes::LabelMask;

namespace {

Case ramp_case(const Index3& s, int classes = 2) {
  Case c;
  c.id = "ramp";
  c.image = volumes::Volume(Tensor(1, s), {1, 1, 1});
  c.mask = LabelMask(s, classes);
  for (std::size_t i = 0; i < c.image.data.size(); ++i) c.image.data[i] = static_cast<float>(i);
  return c;
}

std::vector<Case> synth_cases(int n, const Index3& shape, volumes::TaskSpec* task) {
  volumes::SynthConfig sc;
  sc.shape = shape;
  sc.tumor_radius_min = 1.5;
  sc.tumor_radius_max = 2.5;
  std::vector<Case> out;
  for (int i = 0; i < n; ++i) {
    auto [img, mask, t] = volumes::synth_case(100 + static_cast<std::uint64_t>(i), sc);
    out.push_back({"c" + std::to_string(i), std::move(img), std::move(mask)});
    if (task) *task = t;
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.batches_per_epoch = 2;
  cfg.augment = AugmentPolicy::none();
  cfg.restore_best = false;
  return cfg;
}

std::vector<Tensor> snapshot(const model::RogNet& net) {
  std::vector<Tensor> out;
  for (int id = 0; id < net.params().size(); ++id) out.push_back(net.params().value(id));
  return out;
}

bool same_params(const model::RogNet& a, const model::RogNet& b) {
  for (int id = 0; id < a.params().size(); ++id)
    if (a.params().value(id).storage() != b.params().value(id).storage()) return false;
  return true;
}

std::set<int> inventory(const LabelMask& m) { return {m.labels.begin(), m.labels.end()}; }

// Upper 1% point of chi-square with k degrees of freedom (Wilson-Hilferty).
double chi2_crit_99(double k) {
  const double z = 2.3263478740408408;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

TEST_CASE("foreground-forced patches contain the single foreground voxel") {
  Case c = ramp_case({12, 10, 9});
  c.mask.at(7, 2, 5) = 1;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Index3 centre{};
    const PatchPair p = sample_patch(c, {4, 4, 4}, 1.0, seed, &centre);
    CHECK(centre == Index3{7, 2, 5});
    CHECK(p.mask.count(1) == 1);
    CHECK(p.image.shape() == Index3{4, 4, 4});
  }
}

TEST_CASE("background-only sampling draws centres uniformly") {
  const Case c = ramp_case({8, 8, 8});
  std::vector<int> counts(512, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Index3 centre{};
    sample_patch(c, {4, 4, 4}, 0.0, static_cast<std::uint64_t>(i), &centre);
    ++counts[static_cast<std::size_t>((centre[0] * 8 + centre[1]) * 8 + centre[2])];
  }
  const double expected = draws / 512.0;
  double chi2 = 0.0;
  for (int n : counts) chi2 += (n - expected) * (n - expected) / expected;
  CHECK(chi2 < chi2_crit_99(511.0));
}

TEST_CASE("sampling is deterministic and pads small volumes") {
  const Case c = ramp_case({6, 5, 7});
  const PatchPair a = sample_patch(c, {8, 8, 8}, 0.5, 3);
  const PatchPair b = sample_patch(c, {8, 8, 8}, 0.5, 3);
  CHECK(a.image.shape() == Index3{8, 8, 8});
  CHECK(a.mask.shape == Index3{8, 8, 8});
  CHECK(a.image.data.storage() == b.image.data.storage());
  // Edge padding repeats border values.
  const PatchPair o = crop(c, {-2, 0, 0}, {8, 5, 7});
  CHECK(o.image.data.at(0, 0, 1, 1) == c.image.data.at(0, 0, 1, 1));
  CHECK(o.image.data.at(0, 1, 1, 1) == c.image.data.at(0, 0, 1, 1));
  CHECK(o.image.data.at(0, 7, 1, 1) == c.image.data.at(0, 5, 1, 1));
  CHECK(o.image.data.at(0, 3, 1, 1) == c.image.data.at(0, 1, 1, 1));
}

TEST_CASE("augmentation identities") {
  volumes::TaskSpec task;
  auto cases = synth_cases(1, {16, 16, 16}, &task);
  const PatchPair in{cases[0].image, cases[0].mask};

  const PatchPair same = augment(in, 7, AugmentPolicy::none());
  CHECK(same.image.data.storage() == in.image.data.storage());
  CHECK(same.mask.labels == in.mask.labels);

  AugmentPolicy mirror = AugmentPolicy::none();
  mirror.mirror = true;
  mirror.mirror_prob = 1.0;
  const PatchPair once = augment(in, 5, mirror);
  CHECK(once.mask.labels != in.mask.labels);
  const PatchPair twice = augment(once, 5, mirror);
  CHECK(twice.image.data.storage() == in.image.data.storage());
  CHECK(twice.mask.labels == in.mask.labels);

  AugmentPolicy gamma = AugmentPolicy::none();
  gamma.gamma = true;
  gamma.gamma_prob = 1.0;
  gamma.gamma_min = gamma.gamma_max = 1.0;
  const PatchPair g = augment(in, 9, gamma);
  for (std::size_t i = 0; i < in.image.data.size(); ++i)
    REQUIRE(g.image.data[i] == doctest::Approx(in.image.data[i]).epsilon(1e-5).scale(1.0));
  CHECK(g.mask.labels == in.mask.labels);
}

TEST_CASE("augmentation never adds classes and is deterministic") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  AugmentPolicy all;
  all.spatial_prob = 1.0;
  all.gamma_prob = 1.0;
  for (const Case& c : cases) {
    const PatchPair in{c.image, c.mask};
    const auto before = inventory(c.mask);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const PatchPair out = augment(in, seed, all);
      const auto after = inventory(out.mask);
      for (int k : after) CHECK(before.count(k) == 1);
      CHECK(out.image.shape() == in.image.shape());
      CHECK(augment(in, seed, all).image.data.storage() == out.image.data.storage());
    }
  }
}

TEST_CASE("combined loss examples") {
  // Uniform logits, two classes, half the 2x2x2 grid foreground.
  LabelMask y({2, 2, 2}, 2);
  for (int i = 0; i < 4; ++i) y.labels[static_cast<std::size_t>(i)] = 1;
  const Tensor flat(2, Index3{2, 2, 2}, 0.0f);
  const LossTerms t = combined_loss(flat, y);
  CHECK(t.ce == doctest::Approx(std::log(2.0)));
  CHECK(t.dice == doctest::Approx(1.0 - 2.0 * 2.0 / (4.0 + 4.0 + kDiceSmooth)));

  Tensor perfect(2, Index3{2, 2, 2});
  for (std::size_t v = 0; v < 8; ++v) {
    perfect.channel(y.labels[v])[v] = 40.0f;
  }
  CHECK(combined_loss(perfect, y).total() < 1e-5);
  CHECK_THROWS_AS(combined_loss(Tensor(2, Index3{2, 2, 1}), y), Error);
}

TEST_CASE("combined loss range, symmetry and gradient") {
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> k(-300, 300);
  std::uniform_int_distribution<int> dk(-256, 256);
  for (int c : {2, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      Tensor z(c, Index3{4, 4, 4});
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<float>(k(rng)) / 64.0f;
      LabelMask y({4, 4, 4}, c);
      for (auto& l : y.labels) l = static_cast<std::uint8_t>(rng() % static_cast<unsigned>(c));
      Tensor g;
      const LossTerms t = combined_loss(z, y, &g);
      CHECK(t.dice >= 0.0);
      CHECK(t.dice <= 1.0);
      CHECK(t.total() >= 0.0);
      Tensor dir(z.shape());
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = static_cast<float>(dk(rng)) / 256.0f;
      const double err = oracle::directional_check([&](const Tensor& v) { return combined_loss(v, y).total(); }, z,
                                                   g, dir, 1.0 / 1024);
      CHECK(err <= 1e-3);

      std::vector<std::size_t> perm(64);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Tensor zp(z.shape());
      LabelMask yp = y;
      for (std::size_t v = 0; v < 64; ++v) {
        for (int ch = 0; ch < c; ++ch) zp.channel(ch)[v] = z.channel(ch)[perm[v]];
        yp.labels[v] = y.labels[perm[v]];
      }
      CHECK(combined_loss(zp, yp).total() == doctest::Approx(t.total()).epsilon(1e-12));
    }
  }
}

TEST_CASE("plateau scheduler halves once after patience bad epochs") {
  auto cfg = model::make_config(1, 2, {8, 8, 8}, {1, 1, 1}, 2);
  const model::RogNet net(cfg);
  Adam opt(net.params(), 1e-3, 0.0);
  PlateauScheduler s(0.5, 3);
  int reductions = 0;
  for (int e = 0; e < 4; ++e) reductions += s.step(1.0, opt);
  CHECK(reductions == 1);
  CHECK(opt.learning_rate() == doctest::Approx(5e-4));
  PlateauScheduler s2(0.5, 3);
  Adam opt2(net.params(), 1e-3, 0.0);
  for (int e = 0; e < 10; ++e) CHECK_FALSE(s2.step(1.0 - 0.01 * e, opt2));
  CHECK(opt2.learning_rate() == 1e-3);
}

TEST_CASE("adam with zero rate and decay leaves parameters unchanged") {
  auto cfg = model::make_config(1, 2, {8, 8, 8}, {1, 1, 1}, 2);
  model::RogNet net(cfg);
  const auto before = snapshot(net);
  Adam opt(net.params(), 0.0, 0.0);
  model::Grads g = net.params().zeros_like();
  for (auto& t : g)
    for (float& v : t.values()) v = 1.0f;
  opt.step(net.params(), g);
  CHECK(opt.steps() == 1);
  for (int id = 0; id < net.params().size(); ++id)
    CHECK(net.params().value(id).storage() == before[static_cast<std::size_t>(id)].storage());
  // A positive rate moves every parameter with a nonzero gradient.
  Adam live(net.params(), 1e-2, 0.0);
  live.step(net.params(), g);
  CHECK(net.params().value(0)[0] == doctest::Approx(before[0][0] - 1e-2).epsilon(1e-4));
}

TEST_CASE("training validation and degenerate configurations") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  model::RogNet net(mcfg);
  TrainConfig cfg = small_config();
  CHECK_THROWS_AS(train_standard(net, std::span<const Case>{}, cases, task, cfg), Error);
  cfg.plateau_factor = 1.0;
  CHECK_THROWS_AS(train_standard(net, cases, cases, task, cfg), Error);
  cfg = small_config();
  CHECK_THROWS_AS(train_free_adv(net, cases, cases, task, cfg), Error);

  cfg.learning_rate = 0.0;
  cfg.weight_decay = 0.0;
  const model::RogNet before(net);
  train_standard(net, std::span<const Case>(cases).first(2), std::span<const Case>(cases).last(1), task, cfg);
  CHECK(same_params(before, net));
}

TEST_CASE("single replay at zero radius reproduces standard training") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  const std::span<const Case> tr = std::span<const Case>(cases).first(2), va = std::span<const Case>(cases).last(1);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  TrainConfig cfg = small_config();
  cfg.augment = AugmentPolicy();
  model::RogNet a(mcfg), b(mcfg), c(mcfg);
  const TrainResult ra = train_standard(a, tr, va, task, cfg);
  cfg.free_at = {true, 0.0, 1};
  const TrainResult rb = train_free_adv(b, tr, va, task, cfg);
  CHECK(same_params(a, b));
  CHECK(ra.optimizer_steps == rb.optimizer_steps);
  REQUIRE(ra.log.size() == rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].train_loss == rb.log[i].train_loss);
  // With one replay delta is never seen by a forward pass.
  cfg.free_at = {true, 8.0 / 255, 1, Selection::kCleanDice};
  train_free_adv(c, tr, va, task, cfg);
  CHECK(same_params(a, c));
  model::RogNet d(mcfg), e(mcfg);
  cfg.epochs = 4;
  cfg.free_at = {true, 0.0, 2};
  train_free_adv(d, tr, va, task, cfg);
  cfg.free_at = {true, 8.0 / 255, 2};
  train_free_adv(e, tr, va, task, cfg);
  CHECK_FALSE(same_params(d, e));
}

TEST_CASE("free adversarial training keeps the step budget and the perturbation bound") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  const std::span<const Case> tr = std::span<const Case>(cases).first(2), va = std::span<const Case>(cases).last(1);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  TrainConfig cfg = small_config();
  cfg.epochs = 4;
  model::RogNet a(mcfg), b(mcfg);
  const TrainResult ra = train_standard(a, tr, va, task, cfg);
  cfg.free_at = {true, 8.0 / 255, 2};
  double worst = 0.0;
  long updates = 0;
  TrainHooks hooks;
  hooks.on_perturbation = [&](const Tensor& d) {
    ++updates;
    for (float v : d.values()) worst = std::max(worst, double(std::abs(v)));
  };
  const TrainResult rb = train_free_adv(b, tr, va, task, cfg, hooks);
  CHECK(ra.optimizer_steps == rb.optimizer_steps);
  CHECK(ra.optimizer_steps == 4 * 2);
  CHECK(rb.log.size() == 2);
  CHECK(updates == 2 * 2 * 2 * 2);
  CHECK(worst > 0.0);
  CHECK(worst <= 8.0 / 255 + 1e-7);
}

TEST_CASE("free adversarial training selects its checkpoint by the configured criterion") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  const std::span<const Case> tr = std::span<const Case>(cases).first(2), va = std::span<const Case>(cases).last(1);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  TrainConfig cfg = small_config();
  cfg.epochs = 8;
  cfg.free_at = {true, 8.0 / 255, 2, Selection::kRobustDice};
  model::RogNet a(mcfg), b(mcfg);
  const TrainResult ra = train_free_adv(a, tr, va, task, cfg);
  REQUIRE(ra.log.size() == 4);
  double best = -1.0;
  int arg = -1;
  for (const auto& e : ra.log) {
    CHECK(e.val_robust_dice >= 0.0);
    CHECK(e.val_robust_dice <= 1.0);
    if (e.val_robust_dice > best) {
      best = e.val_robust_dice;
      arg = e.epoch;
    }
  }
  CHECK(ra.best_epoch == arg);

  cfg.free_at.select = Selection::kCleanDice;
  const TrainResult rb = train_free_adv(b, tr, va, task, cfg);
  int clean_arg = -1;
  best = -1.0;
  for (const auto& e : rb.log) {
    CHECK(e.val_robust_dice < 0.0);
    if (e.val_dice > best) {
      best = e.val_dice;
      clean_arg = e.epoch;
    }
  }
  CHECK(rb.best_epoch == clean_arg);
  // Selection does not touch the trajectory.
  REQUIRE(ra.log.size() == rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].train_loss == rb.log[i].train_loss);
}

TEST_CASE("one epoch lowers the loss on a fixed patch for some seed") {
  volumes::TaskSpec task;
  auto cases = synth_cases(2, {16, 16, 16}, &task);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  const PatchPair probe = sample_patch(cases[0], {16, 16, 16}, 0.5, 1);
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    mcfg.init_seed = seed;
    model::RogNet net(mcfg);
    const double before = combined_loss(net.forward(probe.image.data), probe.mask).total();
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.batches_per_epoch = 10;
    cfg.seed = seed;
    cfg.learning_rate = 3e-3;
    train_standard(net, cases, {}, task, cfg);
    const double after = combined_loss(net.forward(probe.image.data), probe.mask).total();
    improved += after < before;
  }
  CHECK(improved >= 1);
}

TEST_CASE("log, best checkpoint and reload") {
  volumes::TaskSpec task;
  auto cases = synth_cases(3, {16, 16, 16}, &task);
  task.avg_object_voxels = {0.0, 500.0, 20.0};
  const std::span<const Case> tr = std::span<const Case>(cases).first(2), va = std::span<const Case>(cases).last(1);
  auto mcfg = model::make_config(1, task.num_classes(), {16, 16, 16}, {1, 1, 1}, 4);
  model::RogNet net(mcfg);
  TrainConfig cfg = small_config();
  cfg.epochs = 3;
  cfg.restore_best = true;
  const auto path = std::filesystem::temp_directory_path() / "rog_train_best.ckpt";
  TrainHooks hooks;
  hooks.best_checkpoint = path;
  int seen = 0;
  hooks.on_epoch = [&](const EpochLog& e) { CHECK(e.epoch == ++seen); };
  const TrainResult r = train_standard(net, tr, va, task, cfg, hooks);
  CHECK(seen == 3);
  REQUIRE(r.log.size() == 3);
  for (const auto& e : r.log) {
    CHECK(e.lr == cfg.learning_rate);
    CHECK(std::isfinite(e.train_loss));
    CHECK(e.val_dice >= 0.0);
    CHECK(e.val_dice <= 1.0);
    CHECK(e.val_dice <= r.best_val_dice);
  }
  CHECK(r.log[static_cast<std::size_t>(r.best_epoch - 1)].val_dice == r.best_val_dice);
  const model::RogNet back = model::load_checkpoint(path);
  CHECK(same_params(back, net));
  CHECK(evaluate_dice(back, va, task) == evaluate_dice(net, va, task));
  CHECK(evaluate_dice(net, va, task) == r.best_val_dice);
  std::filesystem::remove(path);

  std::ostringstream os;
  write_log_csv(os, r.log);
  std::string header;
  std::istringstream is(os.str());
  std::getline(is, header);
  CHECK(header == "epoch,lr,train_loss,val_loss,val_dice");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 3);
}
