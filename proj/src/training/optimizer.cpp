#include "rog/training/optimizer.hpp"

#include <cmath>
#include <limits>

#include "rog/core/error.hpp"

namespace rog::training {

Adam::Adam(const model::ParamSet& params, double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps), m_(params.zeros_like()), v_(params.zeros_like()) {
  require(lr >= 0.0 && weight_decay >= 0.0, ErrorKind::kInvalidConfig, "negative learning rate or weight decay");
}

void Adam::step(model::ParamSet& params, const model::Grads& grads) {
  require(static_cast<int>(grads.size()) == params.size(), ErrorKind::kInvalidArgument, "gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (int id = 0; id < params.size(); ++id) {
    Tensor& w = params.value(id);
    const Tensor& g = grads[static_cast<std::size_t>(id)];
    Tensor& m = m_[static_cast<std::size_t>(id)];
    Tensor& v = v_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]) + wd_ * w[i];
      m[i] = static_cast<float>(b1_ * m[i] + (1.0 - b1_) * gi);
      v[i] = static_cast<float>(b2_ * v[i] + (1.0 - b2_) * gi * gi);
      const double upd = lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] = static_cast<float>(w[i] - upd);
    }
  }
}

PlateauScheduler::PlateauScheduler(double factor, int patience)
    : factor_(factor), patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  require(factor > 0.0 && factor < 1.0, ErrorKind::kInvalidConfig, "plateau factor must lie in (0, 1)");
  require(patience >= 1, ErrorKind::kInvalidConfig, "plateau patience must be positive");
}

bool PlateauScheduler::step(double loss, Adam& opt) {
  if (loss < best_) {
    best_ = loss;
    bad_ = 0;
    return false;
  }
  if (++bad_ < patience_) return false;
  opt.set_learning_rate(opt.learning_rate() * factor_);
  bad_ = 0;
  return true;
}

}  // namespace rog::training
