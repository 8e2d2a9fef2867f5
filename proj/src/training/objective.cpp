#include "rog/training/objective.hpp"

#include <algorithm>
#include <cmath>

#include "rog/core/error.hpp"

namespace rog::training {

LossTerms combined_loss(const Tensor& logits, const volumes::LabelMask& labels, Tensor* grad) {
  require(logits.rank() == 4 && logits.spatial() == labels.shape, ErrorKind::kInvalidArgument,
          "logits and labels differ in shape");
  const int c = logits.channels();
  require(c >= 2, ErrorKind::kInvalidArgument, "at least two classes are required");
  const std::size_t n = logits.plane();

  std::vector<double> p(static_cast<std::size_t>(c) * n);
  double ce = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const int y = labels.labels[v];
    require(y < c, ErrorKind::kInvalidArgument, "label exceeds class count");
    double m = logits[v];
    for (int k = 1; k < c; ++k) m = std::max(m, static_cast<double>(logits[k * n + v]));
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += std::exp(logits[k * n + v] - m);
    const double lse = m + std::log(s);
    for (int k = 0; k < c; ++k) p[k * n + v] = std::exp(logits[k * n + v] - lse);
    ce += lse - logits[static_cast<std::size_t>(y) * n + v];
  }
  ce /= static_cast<double>(n);

  const int fg = c - 1;
  std::vector<double> inter(static_cast<std::size_t>(c), 0.0), denom(static_cast<std::size_t>(c), 0.0);
  for (int k = 1; k < c; ++k) {
    double i = 0.0, sp = 0.0, sg = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double g = labels.labels[v] == k;
      i += p[k * n + v] * g;
      sp += p[k * n + v];
      sg += g;
    }
    inter[static_cast<std::size_t>(k)] = i;
    denom[static_cast<std::size_t>(k)] = sp + sg + kDiceSmooth;
  }
  double mean_dice = 0.0;
  for (int k = 1; k < c; ++k) mean_dice += 2.0 * inter[static_cast<std::size_t>(k)] / denom[static_cast<std::size_t>(k)];
  mean_dice /= fg;

  LossTerms out{1.0 - mean_dice, ce};
  if (!grad) return out;

  *grad = Tensor(logits.shape());
  std::vector<double> gp(static_cast<std::size_t>(c));
  for (std::size_t v = 0; v < n; ++v) {
    const int y = labels.labels[v];
    gp[0] = 0.0;
    for (int k = 1; k < c; ++k) {
      const double g = y == k;
      const double d = denom[static_cast<std::size_t>(k)];
      gp[static_cast<std::size_t>(k)] = -(2.0 * g / d - 2.0 * inter[static_cast<std::size_t>(k)] / (d * d)) / fg;
    }
    double dot = 0.0;
    for (int k = 0; k < c; ++k) dot += p[k * n + v] * gp[static_cast<std::size_t>(k)];
    for (int k = 0; k < c; ++k) {
      const double pk = p[k * n + v];
      const double dice_part = pk * (gp[static_cast<std::size_t>(k)] - dot);
      const double ce_part = (pk - (y == k ? 1.0 : 0.0)) / static_cast<double>(n);
      (*grad)[k * n + v] = static_cast<float>(dice_part + ce_part);
    }
  }
  return out;
}

}  // namespace rog::training
