#include "grapeqa/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace grapeqa {

RAdam::RAdam(std::vector<ad::Parameter*> params, std::map<int, double> group_lr, Options options)
    : lr_(std::move(group_lr)), opt_(options) {
  for (auto& [group, lr] : lr_) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
  }
  for (auto* p : params) {
    slots_.push_back({p, Tensor(p->value.rows, p->value.cols), Tensor(p->value.rows, p->value.cols)});
  }
}

void RAdam::zero_grad() {
  for (auto& s : slots_) s.param->zero_grad();
}

void RAdam::step(double grad_scale) {
  ++t_;
  const double b1 = opt_.beta1;
  const double b2 = opt_.beta2;
  const double t = static_cast<double>(t_);
  const double b1t = std::pow(b1, t);
  const double b2t = std::pow(b2, t);
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
  const bool rectify = rho_t > 5.0;
  const double r = rectify ? std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                                       ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                           : 0.0;
  for (auto& s : slots_) {
    auto it = lr_.find(s.param->group);
    if (it == lr_.end()) continue;  // group frozen
    const double lr = it->second;
    auto& w = s.param->value.data;
    const auto& g = s.param->grad.data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] * grad_scale;
      s.m.data[k] = b1 * s.m.data[k] + (1.0 - b1) * gk;
      s.v.data[k] = b2 * s.v.data[k] + (1.0 - b2) * gk * gk;
      const double m_hat = s.m.data[k] / (1.0 - b1t);
      if (rectify) {
        const double v_hat = std::sqrt(s.v.data[k] / (1.0 - b2t));
        w[k] -= lr * r * m_hat / (v_hat + opt_.eps);
      } else {
        w[k] -= lr * m_hat;
      }
    }
    round_to_float(s.param->value);
  }
}

}  // namespace grapeqa
