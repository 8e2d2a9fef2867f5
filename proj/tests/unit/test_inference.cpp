#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "rog/core/error.hpp"
#include "rog/inference/components.hpp"
#include "rog/inference/predict.hpp"
#include "rog/inference/tiling.hpp"

using namespace rog;
using namespace rog::inference;
using volumes::LabelMask;

namespace {

std::vector<int> axis_offsets(const TilePlan& p, int a) {
  std::vector<int> v;
  for (const auto& o : p.offsets) v.push_back(o[static_cast<std::size_t>(a)]);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool covers_everything(const TilePlan& p) {
  const Index3 s = p.volume_shape;
  std::vector<int> hit(voxel_count(s), 0);
  for (const auto& o : p.offsets)
    for (int z = o[0]; z < std::min(s[0], o[0] + p.patch_size[0]); ++z)
      for (int y = o[1]; y < std::min(s[1], o[1] + p.patch_size[1]); ++y)
        for (int x = o[2]; x < std::min(s[2], o[2] + p.patch_size[2]); ++x)
          hit[(static_cast<std::size_t>(z) * s[1] + y) * s[2] + x] = 1;
  return std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; });
}

Tensor one_hot_map(int channels, const Index3& s, int cls) {
  Tensor t(channels, s);
  std::fill(t.channel(cls), t.channel(cls) + t.plane(), 1.0f);
  return t;
}

volumes::TaskSpec organ_tumor_task() {
  volumes::TaskSpec t;
  t.class_roles = {volumes::ClassRole::kBackground, volumes::ClassRole::kOrgan, volumes::ClassRole::kTumor};
  t.avg_object_voxels = {0.0, 400.0, 50.0};
  return t;
}

}  // namespace

TEST_CASE("tile plans") {
  const TilePlan a = plan_tiles({64, 64, 64}, {32, 32, 32}, 0.0);
  CHECK(a.offsets.size() == 8);
  for (int ax = 0; ax < 3; ++ax) CHECK(axis_offsets(a, ax) == std::vector<int>{0, 32});
  const TilePlan b = plan_tiles({48, 48, 48}, {32, 32, 32}, 0.0);
  for (int ax = 0; ax < 3; ++ax) CHECK(axis_offsets(b, ax) == std::vector<int>{0, 16});
  CHECK(covers_everything(b));
  const TilePlan c = plan_tiles({32, 32, 32}, {32, 32, 32});
  CHECK(c.offsets == std::vector<Index3>{{0, 0, 0}});
  const TilePlan d = plan_tiles({20, 70, 33}, {32, 32, 32}, 0.5);
  CHECK(axis_offsets(d, 1) == std::vector<int>{0, 16, 32, 38});
  CHECK(d.padded_shape == Index3{32, 70, 33});
  CHECK_THROWS_AS(plan_tiles({0, 4, 4}, {2, 2, 2}), Error);
}

TEST_CASE("tile plans cover every voxel and are sorted") {
  std::mt19937 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Index3 vs{1 + int(rng() % 40), 1 + int(rng() % 40), 1 + int(rng() % 40)};
    const Index3 ps{1 + int(rng() % 16), 1 + int(rng() % 16), 1 + int(rng() % 16)};
    const double ov = (rng() % 4) * 0.25;
    const TilePlan p = plan_tiles(vs, ps, ov);
    CHECK(covers_everything(p));
    CHECK(std::is_sorted(p.offsets.begin(), p.offsets.end()));
    CHECK(std::adjacent_find(p.offsets.begin(), p.offsets.end()) == p.offsets.end());
  }
}

TEST_CASE("fusion weights follow the inverse distance rule") {
  const Index3 p{5, 5, 5};
  const Tensor w = fusion_weights(p);
  const double r = 0.5 * std::sqrt(75.0);
  CHECK(w.at(0, 2, 2, 2) == doctest::Approx(1.0));
  CHECK(w.at(0, 0, 0, 0) == doctest::Approx(1.0 / (1.0 + std::sqrt(12.0) / r)));
  CHECK(w.at(0, 2, 2, 4) == doctest::Approx(1.0 / (1.0 + 2.0 / r)));
}

TEST_CASE("fusion of one and two patches") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  Tensor probs(3, Index3{4, 4, 4});
  for (std::size_t v = 0; v < probs.plane(); ++v) {
    float s = 0.0f;
    for (int c = 0; c < 3; ++c) s += (probs.channel(c)[v] = u(rng));
    for (int c = 0; c < 3; ++c) probs.channel(c)[v] /= s;
  }
  const Tensor single = fuse_predictions({probs}, {{0, 0, 0}}, {4, 4, 4});
  for (std::size_t i = 0; i < probs.size(); ++i) CHECK(single[i] == doctest::Approx(probs[i]).epsilon(1e-6));

  // Patches of 5 along x at offsets 0 and 2 in a 7-wide volume.
  const Index3 ps{5, 5, 5};
  const Tensor a = one_hot_map(2, ps, 0), b = one_hot_map(2, ps, 1);
  const Tensor f = fuse_predictions({a, b}, {{0, 0, 0}, {0, 0, 2}}, {5, 5, 7});
  // x = 3 is equidistant from both centres.
  CHECK(f.at(0, 1, 3, 3) == doctest::Approx(0.5));
  CHECK(f.at(1, 1, 3, 3) == doctest::Approx(0.5));
  // x = 2 is the centre of the first patch; the other centre is 2 away.
  const double r = 0.5 * std::sqrt(75.0);
  const double ratio = 1.0 + 2.0 / r;
  CHECK(f.at(0, 2, 2, 2) / f.at(1, 2, 2, 2) == doctest::Approx(ratio).epsilon(1e-5));
  CHECK(f.at(0, 2, 2, 0) == doctest::Approx(1.0));
  CHECK(f.at(1, 2, 2, 6) == doctest::Approx(1.0));

  CHECK_THROWS_AS(fuse_predictions({a}, {{0, 0, 0}}, {5, 5, 7}), Error);
}

TEST_CASE("fused maps are distributions and ignore patch order") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  const TilePlan plan = plan_tiles({11, 9, 14}, {6, 6, 6}, 0.5);
  std::vector<Tensor> maps;
  for (std::size_t i = 0; i < plan.offsets.size(); ++i) {
    Tensor t(3, plan.patch_size);
    for (std::size_t v = 0; v < t.plane(); ++v) {
      float s = 0.0f;
      for (int c = 0; c < 3; ++c) s += (t.channel(c)[v] = u(rng));
      for (int c = 0; c < 3; ++c) t.channel(c)[v] /= s;
    }
    maps.push_back(std::move(t));
  }
  const Tensor f = fuse_predictions(maps, plan);
  CHECK(f.spatial() == Index3{11, 9, 14});
  for (std::size_t v = 0; v < f.plane(); ++v) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      CHECK(f.channel(c)[v] >= 0.0f);
      s += f.channel(c)[v];
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
  std::vector<std::size_t> perm(maps.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Tensor> pm;
  std::vector<Index3> po;
  for (std::size_t i : perm) {
    pm.push_back(maps[i]);
    po.push_back(plan.offsets[i]);
  }
  const Tensor g = fuse_predictions(pm, po, plan.volume_shape);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(double(f[i]) - g[i]) <= 1e-6);

  // Shares are the per-voxel normalised weights.
  const auto shares = fusion_shares(plan);
  REQUIRE(shares.size() == plan.offsets.size());
  std::vector<double> total(voxel_count(plan.volume_shape), 0.0);
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const Index3 o = plan.offsets[i];
    for (int z = 0; z < plan.patch_size[0]; ++z)
      for (int y = 0; y < plan.patch_size[1]; ++y)
        for (int x = 0; x < plan.patch_size[2]; ++x) {
          if (o[0] + z >= 11 || o[1] + y >= 9 || o[2] + x >= 14) continue;
          total[(static_cast<std::size_t>(o[0] + z) * 9 + o[1] + y) * 14 + o[2] + x] += shares[i].at(0, z, y, x);
        }
  }
  for (double t : total) CHECK(t == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("patch extraction pads at the edges and scatter is its adjoint") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const TilePlan plan = plan_tiles({3, 7, 5}, {4, 4, 4}, 0.5);
  Tensor x(2, plan.volume_shape);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = u(rng);
  for (const Index3& o : plan.offsets) {
    const Tensor p = extract_patch(x, plan, o);
    CHECK(p.shape() == std::vector<int>{2, 4, 4, 4});
    Tensor q(p.shape());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = u(rng);
    Tensor acc(x.shape());
    scatter_patch(acc, q, plan, o);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) lhs += double(p[i]) * q[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += double(x[i]) * acc[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
  // z has 3 voxels, the patch 4: the last row repeats the border.
  const Tensor p0 = extract_patch(x, plan, {0, 0, 0});
  CHECK(p0.at(1, 3, 2, 1) == x.at(1, 2, 2, 1));
}

TEST_CASE("largest component agrees with a flood-fill oracle") {
  std::mt19937 rng(13);
  const Index3 s{6, 6, 6};
  for (int t = 0; t < 1000; ++t) {
    const double density = 0.1 + 0.4 * (t % 5) / 4.0;
    std::bernoulli_distribution b(density);
    std::vector<std::uint8_t> m(216);
    for (auto& v : m) v = b(rng);
    CHECK(largest_component(m, s) == oracle::largest(m, s));
    std::vector<std::size_t> sizes;
    const auto ids = label_components(m, s, Connectivity::k6, &sizes);
    const auto comps = oracle::components(m, s, false);
    REQUIRE(sizes.size() == comps.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
      CHECK(sizes[k] == comps[k].size());
      for (std::size_t v : comps[k]) CHECK(ids[v] == static_cast<int>(k) + 1);
    }
  }
}

TEST_CASE("largest component examples") {
  const Index3 s{6, 6, 6};
  std::vector<std::uint8_t> empty(216, 0);
  CHECK(largest_component(empty, s) == empty);
  std::vector<std::uint8_t> m(216, 0);
  auto at = [&](int z, int y, int x) -> std::uint8_t& { return m[static_cast<std::size_t>((z * 6 + y) * 6 + x)]; };
  for (int x = 0; x < 5; ++x) at(0, 0, x) = at(0, 1, x) = 1;  // 10 voxels
  CHECK(largest_component(m, s) == m);
  for (int x = 0; x < 3; ++x) at(3, 3, x) = at(5, 5, x) = 1;  // two of 3
  const auto kept = largest_component(m, s);
  CHECK(std::count(kept.begin(), kept.end(), 1) == 10);
  CHECK(kept[0] == 1);
  // Diagonal neighbours join under 26-connectivity only.
  std::vector<std::uint8_t> d(216, 0);
  d[0] = 1;
  d[(1 * 6 + 1) * 6 + 1] = 1;
  d[(4 * 6 + 4) * 6 + 4] = 1;
  const auto d26 = largest_component(d, s), d6 = largest_component(d, s, Connectivity::k6);
  CHECK(std::count(d26.begin(), d26.end(), 1) == 2);
  CHECK(std::count(d6.begin(), d6.end(), 1) == 1);
  // Equal sizes: the first seeded in raster order wins.
  std::vector<std::uint8_t> tie(216, 0);
  tie[(5 * 6 + 5) * 6 + 5] = 1;
  tie[(2 * 6 + 0) * 6 + 0] = 1;
  CHECK(largest_component(tie, s)[(2 * 6 + 0) * 6 + 0] == 1);
  CHECK(largest_component(tie, s)[(5 * 6 + 5) * 6 + 5] == 0);
}

TEST_CASE("small tumor components fuse into their surroundings") {
  const auto task = organ_tumor_task();
  LabelMask m({8, 8, 8}, 3, 1);
  m.at(4, 4, 4) = 2;  // 1-voxel speck, threshold 0.1 * 50 = 5
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) m.at(z, y, x) = 2;  // 27-voxel tumor
  const LabelMask out = fuse_small_components(m, task);
  CHECK(out.at(4, 4, 4) == 1);
  CHECK(out.count(2) == 27);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (i != (4u * 8 + 4) * 8 + 4) CHECK(out.labels[i] == m.labels[i]);

  const LabelMask same = fuse_small_components(m, task, 0.0);
  CHECK(same.labels == m.labels);

  // Organs keep their largest component; stray organ voxels become background.
  LabelMask o({8, 8, 8}, 3, 0);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) o.at(z, y, x) = 1;
  o.at(7, 7, 7) = 1;
  const LabelMask oo = fuse_small_components(o, task);
  CHECK(oo.count(1) == 64);
  CHECK(oo.at(7, 7, 7) == 0);

  volumes::TaskSpec missing = task;
  missing.avg_object_voxels.clear();
  try {
    fuse_small_components(m, missing);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingReference);
  }
}

TEST_CASE("argmax ties go to the lower class") {
  Tensor s(3, Index3{1, 1, 3});
  s.at(0, 0, 0, 0) = 0.2f; s.at(1, 0, 0, 0) = 0.4f; s.at(2, 0, 0, 0) = 0.4f;
  s.at(0, 0, 0, 1) = 0.5f; s.at(1, 0, 0, 1) = 0.5f; s.at(2, 0, 0, 1) = 0.0f;
  s.at(0, 0, 0, 2) = 0.1f; s.at(1, 0, 0, 2) = 0.2f; s.at(2, 0, 0, 2) = 0.7f;
  CHECK(argmax_labels(s).labels == std::vector<std::uint8_t>{1, 0, 2});
  const Tensor p = softmax(s);
  for (int v = 0; v < 3; ++v) {
    double t = 0.0;
    for (int c = 0; c < 3; ++c) t += p.at(c, 0, 0, v);
    CHECK(t == doctest::Approx(1.0));
  }
}

TEST_CASE("prediction of a uniform model and determinism") {
  auto cfg = model::make_config(1, 3, {8, 8, 8}, {1, 1, 1}, 4);
  model::RogNet flat(cfg);
  for (int id = 0; id < flat.params().size(); ++id) flat.params().value(id).storage().assign(flat.params().value(id).size(), 0.0f);
  std::mt19937 rng(3);
  std::normal_distribution<float> n;
  volumes::Volume img(Tensor(1, Index3{6, 13, 9}), {1, 1, 1});
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = n(rng);
  const auto task = organ_tumor_task();
  const LabelMask out = predict_case(flat, img, task);
  CHECK(out.shape == Index3{6, 13, 9});
  CHECK(out.count(0) == out.size());

  const model::RogNet net(cfg);
  const LabelMask a = predict_case(net, img, task);
  const LabelMask b = predict_case(net, img, task);
  CHECK(a.labels == b.labels);
  const Tensor pr = predict_probabilities(net, img.data);
  for (std::size_t v = 0; v < pr.plane(); ++v) {
    double t = 0.0;
    for (int c = 0; c < 3; ++c) t += pr.channel(c)[v];
    CHECK(std::abs(t - 1.0) <= 1e-6);
  }
  PredictOptions raw;
  raw.postprocess = false;
  CHECK(predict_case(net, img, task, raw).labels == argmax_labels(pr).labels);
}
