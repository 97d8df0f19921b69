#pragma once

#include <map>
#include <vector>

#include "grapeqa/autodiff.hpp"

namespace grapeqa {

/// Rectified Adam with one learning rate per parameter group.
///
/// Parameters are rounded to float32 after every step so that a checkpoint
/// reproduces the in-memory model exactly.
class RAdam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  RAdam(std::vector<ad::Parameter*> params, std::map<int, double> group_lr, Options options);
  RAdam(std::vector<ad::Parameter*> params, std::map<int, double> group_lr)
      : RAdam(std::move(params), std::move(group_lr), Options{}) {}

  /// Applies one update from the accumulated gradients scaled by `grad_scale`.
  void step(double grad_scale = 1.0);
  void zero_grad();
  long steps() const { return t_; }

 private:
  struct Slot {
    ad::Parameter* param;
    Tensor m;
    Tensor v;
  };
  std::vector<Slot> slots_;
  std::map<int, double> lr_;
  Options opt_;
  long t_ = 0;
};

}  // namespace grapeqa
