#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "grapeqa/optimizer.hpp"

using namespace grapeqa;

TEST_CASE("RAdam follows the rectified update, warm-up steps included") {
  ad::Parameter p("w", Tensor(1, 2), 0);
  p.value.data = {0.5, -1.25};
  RAdam opt({&p}, {{0, 0.01}});

  // scalar re-derivation, one coordinate at a time
  const double b1 = 0.9, b2 = 0.999, lr = 0.01, eps = 1e-8;
  const double rho_inf = 2 / (1 - b2) - 1;
  double w[2] = {0.5, -1.25}, m[2] = {0, 0}, v[2] = {0, 0};
  Rng rng(3);
  bool saw_plain = false, saw_rect = false;
  for (int t = 1; t <= 12; ++t) {
    const double g[2] = {rng.normal(), rng.normal()};
    p.grad.data = {2 * g[0], 2 * g[1]};
    opt.step(0.5);
    const double rho = rho_inf - 2 * t * std::pow(b2, t) / (1 - std::pow(b2, t));
    for (int k = 0; k < 2; ++k) {
      m[k] = b1 * m[k] + (1 - b1) * g[k];
      v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
      const double mh = m[k] / (1 - std::pow(b1, t));
      if (rho > 5) {
        const double rt = std::sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho));
        w[k] -= lr * rt * mh / (std::sqrt(v[k] / (1 - std::pow(b2, t))) + eps);
        saw_rect = true;
      } else {
        w[k] -= lr * mh;
        saw_plain = true;
      }
      w[k] = static_cast<float>(w[k]);
    }
    CHECK(p.value.data[0] == doctest::Approx(w[0]).epsilon(1e-7));
    CHECK(p.value.data[1] == doctest::Approx(w[1]).epsilon(1e-7));
  }
  CHECK(saw_plain);
  CHECK(saw_rect);
  CHECK(opt.steps() == 12);
}

TEST_CASE("groups without a learning rate are frozen") {
  ad::Parameter a("a", Tensor(1, 1, 1.0), 0);
  ad::Parameter b("b", Tensor(1, 1, 1.0), 1);
  RAdam opt({&a, &b}, {{0, 0.1}});
  a.grad.data = {1.0};
  b.grad.data = {1.0};
  opt.step();
  CHECK(a.value.data[0] < 1.0);
  CHECK(b.value.data[0] == 1.0);
  opt.zero_grad();
  CHECK(a.grad.data[0] == 0.0);
  CHECK_THROWS_AS(RAdam({&a}, {{0, 0.0}}), std::invalid_argument);
}

TEST_CASE("parameters stay float32-representable") {
  ad::Parameter a("a", Tensor(1, 3, 0.1f), 0);
  RAdam opt({&a}, {{0, 1e-3}});
  for (int i = 0; i < 5; ++i) {
    a.grad.data = {0.3, -0.7, 1e-4};
    opt.step();
  }
  for (double x : a.value.data) CHECK(static_cast<double>(static_cast<float>(x)) == x);
}
