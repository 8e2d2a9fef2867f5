#pragma once

#include "rog/model/layers.hpp"

namespace rog::training {

// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  Adam(const model::ParamSet& params, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(model::ParamSet& params, const model::Grads& grads);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Multiplies the learning rate by factor once the monitored loss has failed
// to improve for `patience` consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience);

  // Returns true when the rate was reduced.
  bool step(double loss, Adam& opt);

  int bad_epochs() const { return bad_; }

 private:
  double factor_;
  int patience_;
  double best_;
  int bad_ = 0;
};

}  // namespace rog::training
