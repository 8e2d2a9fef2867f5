#include "rog/attacks/losses.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"

namespace rog::attacks {

using volumes::LabelMask;

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kDlr: return "dlr";
    case LossKind::kMargin: return "margin";
  }
  return "?";
}

namespace {

void check(const Tensor& logits, const LabelMask& labels) {
  require(logits.rank() == 4, ErrorKind::kInvalidArgument, "logits must be (C, D, H, W)");
  require(logits.spatial() == labels.shape, ErrorKind::kInvalidArgument, "logits and labels differ in shape");
  require(logits.channels() >= 2, ErrorKind::kInvalidArgument, "at least two classes are required");
  require(labels.size() == logits.plane(), ErrorKind::kInvalidArgument, "label buffer size mismatch");
}

// Runs fn(v, y, z[], g[]) on every selected voxel; z holds that voxel's logits
// in double and g receives the per-voxel gradient, which is scaled by 1/count
// and written back. Returns the mean of fn's values.
template <typename Fn>
double reduce(const Tensor& logits, const LabelMask& labels, Tensor* grad, bool fg_only, Fn&& fn) {
  check(logits, labels);
  const int c = logits.channels();
  const std::size_t n = logits.plane();
  if (grad) *grad = Tensor(logits.shape());
  std::size_t count = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (!fg_only || labels.labels[v] != 0) ++count;
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<double> z(static_cast<std::size_t>(c)), g(static_cast<std::size_t>(c));
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const int y = labels.labels[v];
    if (fg_only && y == 0) continue;
    require(y < c, ErrorKind::kInvalidArgument, "label exceeds class count");
    for (int k = 0; k < c; ++k) z[static_cast<std::size_t>(k)] = logits[k * n + v];
    std::fill(g.begin(), g.end(), 0.0);
    total += fn(y, z, g);
    if (grad)
      for (int k = 0; k < c; ++k) (*grad)[k * n + v] = static_cast<float>(g[static_cast<std::size_t>(k)] * inv);
  }
  return total * inv;
}

int best_other(const std::vector<double>& z, int y) {
  int m = -1;
  for (int k = 0; k < static_cast<int>(z.size()); ++k)
    if (k != y && (m < 0 || z[static_cast<std::size_t>(k)] > z[static_cast<std::size_t>(m)])) m = k;
  return m;
}

}  // namespace

double voxel_ce_loss(const Tensor& logits, const LabelMask& labels, Tensor* grad, const LossOptions& opts) {
  return reduce(logits, labels, grad, opts.foreground_only,
                [](int y, const std::vector<double>& z, std::vector<double>& g) {
                  const double m = *std::max_element(z.begin(), z.end());
                  double s = 0.0;
                  for (double zk : z) s += std::exp(zk - m);
                  const double lse = m + std::log(s);
                  for (std::size_t k = 0; k < z.size(); ++k) g[k] = std::exp(z[k] - lse);
                  g[static_cast<std::size_t>(y)] -= 1.0;
                  return lse - z[static_cast<std::size_t>(y)];
                });
}

double voxel_dlr_loss(const Tensor& logits, const LabelMask& labels, Tensor* grad, const LossOptions& opts) {
  return reduce(logits, labels, grad, opts.foreground_only,
                [](int y, const std::vector<double>& z, std::vector<double>& g) {
                  const auto uy = static_cast<std::size_t>(y);
                  const auto m = static_cast<std::size_t>(best_other(z, y));
                  const double num = z[uy] - z[m];
                  if (z.size() == 2) {
                    g[uy] -= 1.0;
                    g[m] += 1.0;
                    return -num;
                  }
                  std::vector<std::size_t> order(z.size());
                  for (std::size_t k = 0; k < z.size(); ++k) order[k] = k;
                  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
                  const std::size_t p1 = order[0], p3 = order[2];
                  const double den = z[p1] - z[p3] + 1e-12;
                  g[uy] -= 1.0 / den;
                  g[m] += 1.0 / den;
                  g[p1] += num / (den * den);
                  g[p3] -= num / (den * den);
                  return -num / den;
                });
}

double voxel_margin_loss(const Tensor& logits, const LabelMask& labels, Tensor* grad, const LossOptions& opts) {
  return reduce(logits, labels, grad, opts.foreground_only,
                [](int y, const std::vector<double>& z, std::vector<double>& g) {
                  const auto uy = static_cast<std::size_t>(y);
                  const auto m = static_cast<std::size_t>(best_other(z, y));
                  g[uy] += 1.0;
                  g[m] -= 1.0;
                  return z[uy] - z[m];
                });
}

double target_margin(const Tensor& logits, const LabelMask& labels, int target, Tensor* grad) {
  check(logits, labels);
  require(target >= 0 && target < logits.channels(), ErrorKind::kInvalidArgument, "target class out of range");
  const std::size_t n = logits.plane();
  if (grad) *grad = Tensor(logits.shape());
  std::size_t count = 0;
  for (std::size_t v = 0; v < n; ++v) count += labels.labels[v] != target;
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const int y = labels.labels[v];
    if (y == target) continue;
    total += static_cast<double>(logits[target * n + v]) - logits[y * n + v];
    if (grad) {
      (*grad)[target * n + v] += static_cast<float>(inv);
      (*grad)[y * n + v] -= static_cast<float>(inv);
    }
  }
  return total * inv;
}

double evaluate_loss(LossKind kind, const Tensor& logits, const LabelMask& labels, Tensor* grad,
                     const LossOptions& opts) {
  switch (kind) {
    case LossKind::kCrossEntropy: return voxel_ce_loss(logits, labels, grad, opts);
    case LossKind::kDlr: return voxel_dlr_loss(logits, labels, grad, opts);
    case LossKind::kMargin: return voxel_margin_loss(logits, labels, grad, opts);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown loss kind");
}

}  // namespace rog::attacks
