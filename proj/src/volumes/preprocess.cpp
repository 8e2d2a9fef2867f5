#include "rog/volumes/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"

namespace rog::volumes {

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::kInvalidArgument, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Index3 resampled_shape(const Index3& shape, const Vec3& spacing, const Vec3& target) {
  Index3 out{};
  for (int a = 0; a < 3; ++a)
    out[a] = std::max(1, static_cast<int>(std::lround(shape[a] * spacing[a] / target[a])));
  return out;
}

namespace {

struct AxisSample {
  int i0, i1;
  float w1;
};

// Maps output index o to input coordinate with voxel centres aligned.
std::vector<AxisSample> axis_samples(int n_in, int n_out) {
  std::vector<AxisSample> s(static_cast<std::size_t>(n_out));
  const double ratio = static_cast<double>(n_in) / n_out;
  for (int o = 0; o < n_out; ++o) {
    double c = (o + 0.5) * ratio - 0.5;
    c = std::clamp(c, 0.0, static_cast<double>(n_in - 1));
    const int i0 = static_cast<int>(std::floor(c));
    const int i1 = std::min(i0 + 1, n_in - 1);
    s[static_cast<std::size_t>(o)] = {i0, i1, static_cast<float>(c - i0)};
  }
  return s;
}

int nearest(const AxisSample& s) { return s.w1 >= 0.5f ? s.i1 : s.i0; }

}  // namespace

std::pair<Volume, std::optional<LabelMask>> resample(const Volume& v, const LabelMask* mask,
                                                     const Vec3& target_spacing) {
  for (double t : target_spacing)
    require(t > 0.0 && std::isfinite(t), ErrorKind::kInvalidArgument, "target spacing must be positive");
  for (double s : v.spacing)
    require(s > 0.0, ErrorKind::kInvalidArgument, "source spacing must be positive");
  const Index3 in = v.shape();
  const Index3 out = resampled_shape(in, v.spacing, target_spacing);
  if (mask) require(mask->shape == in, ErrorKind::kInvalidArgument, "mask/volume shape mismatch");

  const auto sz = axis_samples(in[0], out[0]);
  const auto sy = axis_samples(in[1], out[1]);
  const auto sx = axis_samples(in[2], out[2]);

  Tensor data(v.channels(), out);
  for (int c = 0; c < v.channels(); ++c) {
    for (int z = 0; z < out[0]; ++z) {
      const auto& a = sz[static_cast<std::size_t>(z)];
      for (int y = 0; y < out[1]; ++y) {
        const auto& b = sy[static_cast<std::size_t>(y)];
        for (int x = 0; x < out[2]; ++x) {
          const auto& e = sx[static_cast<std::size_t>(x)];
          auto lerp_x = [&](int zz, int yy) {
            return v.data.at(c, zz, yy, e.i0) * (1.0f - e.w1) + v.data.at(c, zz, yy, e.i1) * e.w1;
          };
          const float p0 = lerp_x(a.i0, b.i0) * (1.0f - b.w1) + lerp_x(a.i0, b.i1) * b.w1;
          const float p1 = lerp_x(a.i1, b.i0) * (1.0f - b.w1) + lerp_x(a.i1, b.i1) * b.w1;
          data.at(c, z, y, x) = p0 * (1.0f - a.w1) + p1 * a.w1;
        }
      }
    }
  }

  std::optional<LabelMask> out_mask;
  if (mask) {
    LabelMask m(out, mask->num_classes);
    for (int z = 0; z < out[0]; ++z)
      for (int y = 0; y < out[1]; ++y)
        for (int x = 0; x < out[2]; ++x)
          m.at(z, y, x) = mask->at(nearest(sz[static_cast<std::size_t>(z)]),
                                   nearest(sy[static_cast<std::size_t>(y)]),
                                   nearest(sx[static_cast<std::size_t>(x)]));
    out_mask = std::move(m);
  }
  return {Volume(std::move(data), target_spacing, v.origin), std::move(out_mask)};
}

namespace {

IntensityStats summarize(std::vector<double> values) {
  IntensityStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.p005 = at(0.5);
  s.p995 = at(99.5);
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DatasetStats compute_dataset_stats(std::span<const LabeledVolume> cases) {
  require(!cases.empty(), ErrorKind::kInvalidArgument, "dataset statistics need at least one case");
  const int channels = cases.front().image->channels();
  DatasetStats out;

  for (int a = 0; a < 3; ++a) {
    std::vector<double> sp;
    for (const auto& c : cases) sp.push_back(c.image->spacing[static_cast<std::size_t>(a)]);
    out.median_spacing[static_cast<std::size_t>(a)] = median(std::move(sp));
  }
  for (const auto& c : cases) {
    const Index3 rs = resampled_shape(c.image->shape(), c.image->spacing, out.median_spacing);
    for (int a = 0; a < 3; ++a) out.avg_shape[static_cast<std::size_t>(a)] += rs[static_cast<std::size_t>(a)];
  }
  for (double& s : out.avg_shape) s /= static_cast<double>(cases.size());

  for (int ch = 0; ch < channels; ++ch) {
    std::vector<double> fg;
    for (const auto& c : cases) {
      require(c.image->channels() == channels, ErrorKind::kInvalidArgument, "inconsistent channel count");
      require(c.mask != nullptr && c.mask->shape == c.image->shape(), ErrorKind::kInvalidArgument,
              "every case needs a mask matching its volume");
      const float* src = c.image->data.channel(ch);
      for (std::size_t i = 0; i < c.mask->size(); ++i)
        if (c.mask->labels[i] != 0) fg.push_back(src[i]);
    }
    require(!fg.empty(), ErrorKind::kEmptyForeground, "no foreground voxels in the training set");
    out.channels.push_back(summarize(std::move(fg)));
  }
  return out;
}

DatasetStats compute_volume_stats(const Volume& v) {
  DatasetStats out;
  out.median_spacing = v.spacing;
  const Index3 s = v.shape();
  out.avg_shape = {static_cast<double>(s[0]), static_cast<double>(s[1]), static_cast<double>(s[2])};
  for (int ch = 0; ch < v.channels(); ++ch) {
    const float* src = v.data.channel(ch);
    out.channels.push_back(summarize(std::vector<double>(src, src + v.data.plane())));
  }
  return out;
}

Volume normalize(const Volume& v, const DatasetStats& s) {
  require(static_cast<int>(s.channels.size()) == v.channels(), ErrorKind::kInvalidArgument,
          "statistics/volume channel mismatch");
  Volume out = v;
  for (int c = 0; c < v.channels(); ++c) {
    const IntensityStats& st = s.channels[static_cast<std::size_t>(c)];
    require(st.std > 0.0 && std::isfinite(st.std), ErrorKind::kDegenerateStats,
            "foreground standard deviation must be positive");
    require(st.p005 <= st.p995, ErrorKind::kDegenerateStats, "percentile bounds out of order");
    float* dst = out.data.channel(c);
    for (std::size_t i = 0; i < v.data.plane(); ++i) {
      const double clipped = std::clamp(static_cast<double>(dst[i]), st.p005, st.p995);
      dst[i] = static_cast<float>((clipped - st.mean) / st.std);
    }
  }
  return out;
}

Tensor AffineMap::to_unit(const Tensor& x) const {
  Tensor a = x;
  for (int c = 0; c < x.channels(); ++c) {
    const double l = lo.at(static_cast<std::size_t>(c));
    const double r = range.at(static_cast<std::size_t>(c));
    float* p = a.channel(c);
    for (std::size_t i = 0; i < x.plane(); ++i)
      p[i] = r > 0.0 ? static_cast<float>((p[i] - l) / r) : 0.5f;
  }
  return a;
}

Tensor AffineMap::from_unit(const Tensor& a) const {
  Tensor x = a;
  for (int c = 0; c < a.channels(); ++c) {
    const double l = lo.at(static_cast<std::size_t>(c));
    const double r = range.at(static_cast<std::size_t>(c));
    float* p = x.channel(c);
    for (std::size_t i = 0; i < a.plane(); ++i) p[i] = static_cast<float>(r > 0.0 ? l + r * p[i] : l);
  }
  return x;
}

std::pair<Volume, AffineMap> to_attack_space(const Volume& v) {
  AffineMap map;
  for (int c = 0; c < v.channels(); ++c) {
    const float* p = v.data.channel(c);
    const auto [mn, mx] = std::minmax_element(p, p + v.data.plane());
    map.lo.push_back(*mn);
    map.range.push_back(static_cast<double>(*mx) - static_cast<double>(*mn));
  }
  Volume out(map.to_unit(v.data), v.spacing, v.origin);
  return {std::move(out), std::move(map)};
}

}  // namespace rog::volumes
