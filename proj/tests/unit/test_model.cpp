#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "rog/core/error.hpp"
#include "rog/model/network.hpp"

using namespace rog;
using namespace rog::model;

namespace {

Tensor random_input(const LatticeConfig& cfg, unsigned seed, float scale = 1.0f) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n(0.0f, scale);
  Tensor x(cfg.in_channels, cfg.patch_size);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = n(rng);
  return x;
}

Tensor random_direction(std::size_t n, const std::vector<int>& shape, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor d(shape);
  for (std::size_t i = 0; i < n; ++i) d[i] = u(rng);
  return d;
}

double mean_logit(const RogNet& net, const Tensor& x) {
  const Tensor y = net.forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i];
  return s / static_cast<double>(y.size());
}

volumes::TaskSpec three_class_task() {
  volumes::TaskSpec t;
  t.class_roles = {volumes::ClassRole::kBackground, volumes::ClassRole::kOrgan, volumes::ClassRole::kTumor};
  return t;
}

}  // namespace

TEST_CASE("triangular node counts") {
  CHECK(triangular_nodes(2, 4) == std::vector<int>{5, 4, 3, 2});
  CHECK(triangular_nodes(1, 4) == std::vector<int>{4, 3, 2, 1});
  const auto cfg = make_config(1, 3, {32, 32, 32}, {1, 1, 1}, 4);
  CHECK(lattice_nodes(cfg).size() == 14);
}

TEST_CASE("lattice edges connect adjacent scales or same-scale predecessors") {
  const auto cfg = make_config(1, 3, {32, 32, 32}, {1, 1, 1}, 4);
  const auto nodes = lattice_nodes(cfg);
  REQUIRE(!nodes.empty());
  CHECK(nodes[0].inputs.empty());
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    CHECK(!nodes[i].inputs.empty());
    for (const auto& e : nodes[i].inputs) {
      CHECK(e.source < static_cast<int>(i));
      const auto& src = nodes[static_cast<std::size_t>(e.source)];
      switch (e.kind) {
        case EdgeKind::kSameScale: CHECK(src.scale == nodes[i].scale); CHECK(src.column == nodes[i].column - 1); break;
        case EdgeKind::kFromFiner: CHECK(src.scale == nodes[i].scale - 1); break;
        case EdgeKind::kFromCoarser: CHECK(src.scale == nodes[i].scale + 1); break;
      }
    }
  }
}

TEST_CASE("config invariants") {
  auto cfg = make_config(1, 3, {32, 32, 32}, {4, 4, 4}, 4);
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(make_config(1, 3, {32, 32, 48}, {4, 4, 4}, 4), Error);
  CHECK_THROWS_AS(make_config(1, 3, {64, 64, 64}, {8, 1, 1}, 4), Error);
  cfg.nodes_per_scale = {5, 5, 3, 2};
  CHECK_THROWS_AS(cfg.validate(), Error);
  // The coarsest map stays at or above 1/32 of the patch.
  const auto deep = make_config(1, 3, {128, 128, 64}, {4, 4, 2}, 4);
  const Index3 coarse = deep.scale_shape(deep.num_scales - 1);
  for (int a = 0; a < 3; ++a) CHECK(coarse[a] * 32 >= deep.patch_size[a]);
  CHECK(coarse == Index3{4, 4, 4});
}

TEST_CASE("auto configuration from average shape") {
  volumes::DatasetStats s;
  const auto task = three_class_task();
  s.avg_shape = {160, 160, 160};
  auto c = auto_configure(s, task, 1600000);
  CHECK(c.patch_size == Index3{128, 128, 96});
  CHECK(c.initial_factors == Index3{4, 4, 2});
  s.avg_shape = {96, 96, 96};
  c = auto_configure(s, task, 1LL << 40);
  CHECK(c.patch_size == Index3{96, 96, 96});
  CHECK(c.initial_factors == Index3{2, 2, 2});
  s.avg_shape = {40, 200, 200};
  c = auto_configure(s, task, 1LL << 40);
  CHECK(c.patch_size == Index3{32, 128, 128});
  CHECK(c.initial_factors == Index3{1, 4, 4});
  s.avg_shape = {10, 10, 10};
  c = auto_configure(s, task, 1LL << 40);
  CHECK(c.patch_size == Index3{32, 32, 32});
  CHECK(c.initial_factors == Index3{1, 1, 1});
  CHECK_THROWS_AS(auto_configure(s, task, 0), Error);
}

TEST_CASE("parameter counts") {
  ParamSet ps;
  std::mt19937_64 rng(0);
  Conv3d pw(ps, "pw", 2, 3, 1, {1, 1, 1}, false, rng);
  CHECK(ps.scalar_count() == 6);
  ParamSet ps2;
  DepthwiseConv3d dw(ps2, "dw", 5, rng);
  CHECK(ps2.scalar_count() == 27 * 5);

  const auto ref = make_config(1, 3, {128, 128, 128}, {4, 4, 4}, 48);
  const RogNet a(ref), b(ref);
  CHECK(a.count_params() == b.count_params());
  CHECK(a.count_params() >= 1800000);
  CHECK(a.count_params() <= 3400000);
}

TEST_CASE("swish activation") {
  Tensor x(std::vector<int>{1, 1, 1, 9});
  for (int i = 0; i < 9; ++i) x[static_cast<std::size_t>(i)] = -4.0f + static_cast<float>(i);
  const Tensor y = swish_forward(x, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y[i] == doctest::Approx(x[i] / (1.0 + std::exp(-double(x[i])))).epsilon(1e-6));
}

TEST_CASE("forward shape, finiteness and determinism") {
  for (Index3 f : {Index3{1, 1, 1}, Index3{2, 2, 1}}) {
    const auto cfg = make_config(1, 3, {16, 16, 32}, f, 4);
    const RogNet net(cfg);
    const Tensor zero(1, cfg.patch_size);
    const Tensor y = net.forward(zero);
    CHECK(y.shape() == std::vector<int>{3, 16, 16, 32});
    for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(std::isfinite(y[i]));
    const Tensor x = random_input(cfg, 5);
    CHECK(net.forward(x).storage() == net.forward(x).storage());
  }
  const auto cfg = make_config(1, 3, {16, 16, 16}, {1, 1, 1}, 4);
  const RogNet net(cfg);
  CHECK_THROWS_AS(net.forward(Tensor(1, Index3{16, 16, 8})), Error);
}

TEST_CASE("input gradient matches central differences on 8^3 patches") {
  auto cfg = make_config(1, 3, {8, 8, 8}, {1, 1, 1}, 4);
  const RogNet net(cfg);
  for (unsigned trial = 0; trial < 3; ++trial) {
    const Tensor x = random_input(cfg, 10 + trial);
    Tape tape;
    const Tensor y = net.forward(x, &tape);
    Tensor gy(y.shape(), 1.0f / static_cast<float>(y.size()));
    const Tensor gx = net.backward(gy, tape, nullptr, true);
    CHECK(tape.empty());
    const Tensor d = random_direction(x.size(), x.shape(), 20 + trial);
    const double err = oracle::directional_check([&](const Tensor& v) { return mean_logit(net, v); }, x, gx, d, 1e-2);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("parameter gradient matches central differences") {
  auto cfg = make_config(1, 3, {32, 32, 32}, {1, 1, 1}, 4);
  RogNet net(cfg);
  const Tensor x = random_input(cfg, 3);
  Tape tape;
  const Tensor y = net.forward(x, &tape);
  // Weighted sum so the loss depends on every logit differently.
  const Tensor w = random_direction(y.size(), y.shape(), 4);
  Grads g = net.params().zeros_like();
  net.backward(w, tape, &g, false);
  auto loss = [&](const RogNet& n) {
    const Tensor out = n.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += double(w[i]) * out[i];
    return s;
  };
  // Float32 evaluation of a loss of magnitude ~1e3 leaves ~1e-2 of absolute
  // noise in the stencil; small per-tensor derivatives are compared against it.
  const double kNoiseFloor = 20.0;
  {
    std::vector<Tensor> base, dirs;
    for (int id = 0; id < net.params().size(); ++id) {
      base.push_back(net.params().value(id));
      dirs.push_back(random_direction(base.back().size(), base.back().shape(), 500 + static_cast<unsigned>(id)));
    }
    auto along = [&](double t) {
      for (int id = 0; id < net.params().size(); ++id) {
        Tensor& p = net.params().value(id);
        for (std::size_t i = 0; i < p.size(); ++i)
          p[i] = static_cast<float>(base[static_cast<std::size_t>(id)][i] + t * dirs[static_cast<std::size_t>(id)][i]);
      }
      const double r = loss(net);
      for (int id = 0; id < net.params().size(); ++id) net.params().value(id) = base[static_cast<std::size_t>(id)];
      return r;
    };
    const double h = 1e-3;
    const double num = (along(-2 * h) - 8 * along(-h) + 8 * along(h) - along(2 * h)) / (12 * h);
    double an = 0.0;
    for (std::size_t id = 0; id < g.size(); ++id)
      for (std::size_t i = 0; i < g[id].size(); ++i) an += double(g[id][i]) * dirs[id][i];
    CHECK(std::abs(num - an) / std::max(std::abs(num), std::abs(an)) <= 1e-3);
  }
  int checked = 0;
  for (int id = 0; id < net.params().size(); id += 7) {
    Tensor& p = net.params().value(id);
    const Tensor base = p;
    const Tensor d = random_direction(p.size(), p.shape(), 100 + static_cast<unsigned>(id));
    const double err = oracle::directional_check(
        [&](const Tensor& v) {
          p = v;
          const double r = loss(net);
          p = base;
          return r;
        },
        base, g[static_cast<std::size_t>(id)], d, 1e-2, kNoiseFloor);
    INFO(net.params().name(id));
    CHECK(err <= 1e-3);
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("checkpoint round trip") {
  auto cfg = make_config(2, 4, {16, 16, 16}, {2, 1, 1}, 4);
  cfg.init_seed = 9;
  const RogNet net(cfg);
  const auto path = std::filesystem::temp_directory_path() / "rog_model_test.ckpt";
  save_checkpoint(path, net);
  const RogNet back = load_checkpoint(path);
  CHECK(to_json(back.config()) == to_json(cfg));
  CHECK(back.count_params() == net.count_params());
  const Tensor x = random_input(cfg, 1);
  CHECK(back.forward(x).storage() == net.forward(x).storage());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
