#include "grapeqa/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grapeqa::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

Tape& same_tape(Var a, Var b) {
  require(a.tape != nullptr && a.tape == b.tape, "operands live on different tapes");
  return *a.tape;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

const Tensor& Var::value() const { return tape->value(index); }

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), Tensor{}, nullptr, nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  auto it = param_leaves_.find(&p);
  if (it != param_leaves_.end()) return {this, it->second};
  nodes_.push_back({p.value, Tensor{}, nullptr, &p});
  param_leaves_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, Backward backward) {
  nodes_.push_back({std::move(value), Tensor{}, std::move(backward), nullptr});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t i) {
  auto& n = nodes_[i];
  if (n.grad.data.empty() && n.value.size() != 0) n.grad = Tensor(n.value.rows, n.value.cols);
  n.grad.rows = n.value.rows;
  n.grad.cols = n.value.cols;
  return n.grad;
}

void Tape::backward(Var loss) {
  require(loss.tape == this, "loss belongs to another tape");
  const auto& lv = nodes_[loss.index].value;
  require(lv.rows == 1 && lv.cols == 1, "backward requires a scalar loss, got " + lv.shape_string());
  grad(loss.index).data[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.data.empty()) continue;
    if (n.backward) {
      n.backward(*this, i);
    } else if (n.param != nullptr) {
      auto& pg = n.param->grad;
      if (pg.data.empty()) pg = Tensor(n.value.rows, n.value.cols);
      for (std::size_t k = 0; k < pg.data.size(); ++k) pg.data[k] += n.grad.data[k];
    }
  }
  clear();
}

void Tape::clear() {
  nodes_.clear();
  param_leaves_.clear();
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols == B.rows, "matmul shape mismatch " + A.shape_string() + " x " + B.shape_string());
  Tensor C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double* c = &C.data[i * C.cols];
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double av = A.data[i * A.cols + k];
      if (av == 0.0) continue;
      const double* bk = &B.data[k * B.cols];
      for (std::size_t j = 0; j < B.cols; ++j) c[j] += av * bk[j];
    }
  }
  const std::size_t ai = a.index, bi = b.index;
  return t.push(std::move(C), [ai, bi](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    const Tensor& A = tp.value(ai);
    const Tensor& B = tp.value(bi);
    Tensor& gA = tp.grad(ai);
    for (std::size_t i = 0; i < A.rows; ++i) {
      const double* g = &G.data[i * G.cols];
      for (std::size_t k = 0; k < A.cols; ++k) {
        const double* bk = &B.data[k * B.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < B.cols; ++j) acc += g[j] * bk[j];
        gA.data[i * A.cols + k] += acc;
      }
    }
    Tensor& gB = tp.grad(bi);
    for (std::size_t i = 0; i < A.rows; ++i) {
      const double* g = &G.data[i * G.cols];
      for (std::size_t k = 0; k < A.cols; ++k) {
        const double av = A.data[i * A.cols + k];
        if (av == 0.0) continue;
        double* gb = &gB.data[k * B.cols];
        for (std::size_t j = 0; j < B.cols; ++j) gb[j] += av * g[j];
      }
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.value().same_shape(b.value()),
          "add shape mismatch " + a.value().shape_string() + " vs " + b.value().shape_string());
  Tensor C = a.value();
  const auto& B = b.value().data;
  for (std::size_t k = 0; k < C.data.size(); ++k) C.data[k] += B[k];
  const std::size_t ai = a.index, bi = b.index;
  return t.push(std::move(C), [ai, bi](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    for (std::size_t idx : {ai, bi}) {
      auto& d = tp.grad(idx).data;
      for (std::size_t k = 0; k < g.size(); ++k) d[k] += g[k];
    }
  });
}

Var add_row(Var x, Var bias) {
  Tape& t = same_tape(x, bias);
  const Tensor& X = x.value();
  require(bias.value().rows == 1 && bias.value().cols == X.cols,
          "bias shape " + bias.value().shape_string() + " does not broadcast over " + X.shape_string());
  Tensor C = X;
  const auto& b = bias.value().data;
  for (std::size_t i = 0; i < C.rows; ++i)
    for (std::size_t j = 0; j < C.cols; ++j) C.data[i * C.cols + j] += b[j];
  const std::size_t xi = x.index, bi = bias.index;
  return t.push(std::move(C), [xi, bi](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    auto& gx = tp.grad(xi).data;
    for (std::size_t k = 0; k < G.data.size(); ++k) gx[k] += G.data[k];
    auto& gb = tp.grad(bi).data;
    for (std::size_t i = 0; i < G.rows; ++i)
      for (std::size_t j = 0; j < G.cols; ++j) gb[j] += G.data[i * G.cols + j];
  });
}

Var linear(Var x, Var w, Var bias) { return add_row(matmul(x, w), bias); }

Var scale(Var x, double s) {
  Tensor C = x.value();
  for (auto& v : C.data) v *= s;
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi, s](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    auto& gx = tp.grad(xi).data;
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] += s * g[k];
  });
}

Var gelu(Var x) {
  Tensor C = x.value();
  for (auto& v : C.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    const auto& X = tp.value(xi).data;
    auto& gx = tp.grad(xi).data;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double v = X[k];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[k] += g[k] * (cdf + v * pdf);
    }
  });
}

Var sigmoid(Var x) {
  Tensor C = x.value();
  for (auto& v : C.data) v = 1.0 / (1.0 + std::exp(-v));
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    const auto& Y = tp.value(self).data;
    auto& gx = tp.grad(xi).data;
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * Y[k] * (1.0 - Y[k]);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (auto p : parts) {
    require(p.tape == &t, "operands live on different tapes");
    require(p.rows() == rows, "concat_cols row mismatch");
    cols += p.cols();
  }
  Tensor C(rows, cols);
  std::vector<std::size_t> idx;
  std::size_t off = 0;
  for (auto p : parts) {
    const Tensor& P = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(&P.data[i * P.cols], P.cols, &C.data[i * cols + off]);
    off += P.cols;
    idx.push_back(p.index);
  }
  return t.push(std::move(C), [idx](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t pi : idx) {
      const std::size_t pc = tp.value(pi).cols;
      auto& gp = tp.grad(pi).data;
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += G.data[i * G.cols + off + j];
      off += pc;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (auto p : parts) {
    require(p.tape == &t, "operands live on different tapes");
    require(p.cols() == cols, "concat_rows column mismatch");
    rows += p.rows();
  }
  Tensor C(rows, cols);
  std::vector<std::size_t> idx;
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& d = p.value().data;
    std::copy(d.begin(), d.end(), C.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += d.size();
    idx.push_back(p.index);
  }
  return t.push(std::move(C), [idx](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    std::size_t off = 0;
    for (std::size_t pi : idx) {
      auto& gp = tp.grad(pi).data;
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += g[off + k];
      off += gp.size();
    }
  });
}

Var gather_rows(Var x, std::vector<std::size_t> rows) {
  const Tensor& X = x.value();
  Tensor C(rows.size(), X.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < X.rows, "gather_rows index out of range");
    std::copy_n(&X.data[rows[i] * X.cols], X.cols, &C.data[i * X.cols]);
  }
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi, rows = std::move(rows)](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    auto& gx = tp.grad(xi).data;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < G.cols; ++j) gx[rows[i] * G.cols + j] += G.data[i * G.cols + j];
  });
}

Var row_dot(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.same_shape(B), "row_dot shape mismatch " + A.shape_string() + " vs " + B.shape_string());
  Tensor C(A.rows, 1);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) acc += A.data[i * A.cols + j] * B.data[i * A.cols + j];
    C.data[i] = acc;
  }
  const std::size_t ai = a.index, bi = b.index;
  return t.push(std::move(C), [ai, bi](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    const Tensor& A = tp.value(ai);
    const Tensor& B = tp.value(bi);
    auto& ga = tp.grad(ai).data;
    auto& gb = tp.grad(bi).data;
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < A.cols; ++j) {
        const std::size_t k = i * A.cols + j;
        ga[k] += g[i] * B.data[k];
        gb[k] += g[i] * A.data[k];
      }
  });
}

Var mul_rows(Var x, Var w) {
  Tape& t = same_tape(x, w);
  const Tensor& X = x.value();
  require(w.value().rows == X.rows && w.value().cols == 1, "mul_rows expects an m x 1 weight column");
  Tensor C = X;
  for (std::size_t i = 0; i < C.rows; ++i)
    for (std::size_t j = 0; j < C.cols; ++j) C.data[i * C.cols + j] *= w.value().data[i];
  const std::size_t xi = x.index, wi = w.index;
  return t.push(std::move(C), [xi, wi](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    const Tensor& X = tp.value(xi);
    const auto& W = tp.value(wi).data;
    auto& gx = tp.grad(xi).data;
    auto& gw = tp.grad(wi).data;
    for (std::size_t i = 0; i < G.rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < G.cols; ++j) {
        const std::size_t k = i * G.cols + j;
        gx[k] += G.data[k] * W[i];
        acc += G.data[k] * X.data[k];
      }
      gw[i] += acc;
    }
  });
}

Var segment_softmax(Var scores, std::vector<std::size_t> segment, std::size_t num_segments) {
  const Tensor& S = scores.value();
  require(S.cols == 1 && segment.size() == S.rows, "segment_softmax expects an m x 1 column");
  std::vector<double> seg_max(num_segments, -INFINITY);
  for (std::size_t i = 0; i < S.rows; ++i) {
    require(segment[i] < num_segments, "segment id out of range");
    seg_max[segment[i]] = std::max(seg_max[segment[i]], S.data[i]);
  }
  Tensor C(S.rows, 1);
  std::vector<double> seg_sum(num_segments, 0.0);
  for (std::size_t i = 0; i < S.rows; ++i) {
    C.data[i] = std::exp(S.data[i] - seg_max[segment[i]]);
    seg_sum[segment[i]] += C.data[i];
  }
  for (std::size_t i = 0; i < S.rows; ++i) C.data[i] /= seg_sum[segment[i]];
  const std::size_t si = scores.index;
  return scores.tape->push(std::move(C), [si, segment = std::move(segment), num_segments](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    const auto& y = tp.value(self).data;
    std::vector<double> inner(num_segments, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) inner[segment[i]] += g[i] * y[i];
    auto& gs = tp.grad(si).data;
    for (std::size_t i = 0; i < y.size(); ++i) gs[i] += y[i] * (g[i] - inner[segment[i]]);
  });
}

Var segment_sum(Var x, std::vector<std::size_t> segment, std::size_t num_segments) {
  const Tensor& X = x.value();
  require(segment.size() == X.rows, "segment_sum needs one segment id per row");
  Tensor C(num_segments, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    require(segment[i] < num_segments, "segment id out of range");
    for (std::size_t j = 0; j < X.cols; ++j) C.data[segment[i] * X.cols + j] += X.data[i * X.cols + j];
  }
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi, segment = std::move(segment)](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad(self);
    auto& gx = tp.grad(xi).data;
    for (std::size_t i = 0; i < segment.size(); ++i)
      for (std::size_t j = 0; j < G.cols; ++j) gx[i * G.cols + j] += G.data[segment[i] * G.cols + j];
  });
}

Var mean_rows(Var x, std::vector<std::size_t> rows) {
  require(!rows.empty(), "mean_rows over no rows");
  const Tensor& X = x.value();
  Tensor C(1, X.cols);
  for (std::size_t r : rows) {
    require(r < X.rows, "mean_rows index out of range");
    for (std::size_t j = 0; j < X.cols; ++j) C.data[j] += X.data[r * X.cols + j];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& v : C.data) v *= inv;
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi, rows = std::move(rows), inv](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).data;
    auto& gx = tp.grad(xi).data;
    for (std::size_t r : rows)
      for (std::size_t j = 0; j < g.size(); ++j) gx[r * g.size() + j] += g[j] * inv;
  });
}

Var sum_all(Var x) {
  double acc = 0.0;
  for (double v : x.value().data) acc += v;
  Tensor C(1, 1, acc);
  const std::size_t xi = x.index;
  return x.tape->push(std::move(C), [xi](Tape& tp, std::size_t self) {
    const double g = tp.grad(self).data[0];
    for (auto& d : tp.grad(xi).data) d += g;
  });
}

Var dot(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.value().same_shape(b.value()), "dot shape mismatch");
  double acc = 0.0;
  const auto& A = a.value().data;
  const auto& B = b.value().data;
  for (std::size_t k = 0; k < A.size(); ++k) acc += A[k] * B[k];
  const std::size_t ai = a.index, bi = b.index;
  return t.push(Tensor(1, 1, acc), [ai, bi](Tape& tp, std::size_t self) {
    const double g = tp.grad(self).data[0];
    const auto& A = tp.value(ai).data;
    const auto& B = tp.value(bi).data;
    auto& ga = tp.grad(ai).data;
    auto& gb = tp.grad(bi).data;
    for (std::size_t k = 0; k < A.size(); ++k) {
      ga[k] += g * B[k];
      gb[k] += g * A[k];
    }
  });
}

Var cross_entropy(Var logits, std::size_t gold) {
  const Tensor& L = logits.value();
  require(L.rows == 1 && gold < L.cols, "cross_entropy expects a 1 x n row and gold < n");
  const double mx = *std::max_element(L.data.begin(), L.data.end());
  double z = 0.0;
  for (double v : L.data) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const std::size_t li = logits.index;
  return logits.tape->push(Tensor(1, 1, lse - L.data[gold]), [li, gold, lse](Tape& tp, std::size_t self) {
    const double g = tp.grad(self).data[0];
    const auto& L = tp.value(li).data;
    auto& gl = tp.grad(li).data;
    for (std::size_t k = 0; k < L.size(); ++k) gl[k] += g * std::exp(L[k] - lse);
    gl[gold] -= g;
  });
}

}  // namespace grapeqa::ad
