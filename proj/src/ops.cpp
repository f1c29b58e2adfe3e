// Copyright 2026 The skilltok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "skilltok/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Pointer to t's gradient buffer, or nullptr if t does not track gradients.
double* grad_ptr(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  t.node()->ensure_grad();
  return t.node()->grad.data();
}

const double* data_ptr(const Tensor& t) { return t.data().data(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

// [B, T, C] view of a rank-2 or rank-3 sequence tensor.
struct SeqDims {
  std::size_t batch, length, channels;
};

SeqDims seq_dims(const Tensor& x, const char* op) {
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
  throw DimensionError(std::string(op) + ": expected [T, C] or [B, T, C], got " +
                       shape_to_string(x.shape()));
}

Shape seq_shape(bool batched, std::size_t b, std::size_t t, std::size_t c) {
  return batched ? Shape{b, t, c} : Shape{t, c};
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  const std::size_t n = x.numel();
  Buffer out(n);
  const double* px = data_ptr(x);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(px[i]);
  return make_op_result(x.shape(), std::move(out), {x}, [x, df](TensorNode& self) {
    double* gx = grad_ptr(x);
    const double* px = data_ptr(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * df(px[i], self.data[i]);
    }
  });
}

}  // namespace

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m{n, n, std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.allowed[i * n + j] = 1;
  return m;
}

AttentionMask AttentionMask::all(std::size_t rows, std::size_t cols) {
  return AttentionMask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.numel());
  const double* pa = data_ptr(a);
  const double* pb = data_ptr(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    accumulate_grad(a, self.grad);
    accumulate_grad(b, self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.numel());
  const double* pa = data_ptr(a);
  const double* pb = data_ptr(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] - pb[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    accumulate_grad(a, self.grad);
    if (double* gb = grad_ptr(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer out(a.numel());
  const double* pa = data_ptr(a);
  const double* pb = data_ptr(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    const double* pa = data_ptr(a);
    const double* pb = data_ptr(b);
    if (double* ga = grad_ptr(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * pb[i];
    }
    if (double* gb = grad_ptr(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * pa[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  Buffer out(a.numel());
  const double* pa = data_ptr(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * factor;
  return make_op_result(a.shape(), std::move(out), {a}, [a, factor](TensorNode& self) {
    double* ga = grad_ptr(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  Buffer out(a.numel());
  const double* pa = data_ptr(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + value;
  return make_op_result(a.shape(), std::move(out), {a},
                        [a](TensorNode& self) { accumulate_grad(a, self.grad); });
}

Tensor add_broadcast(const Tensor& x, const Tensor& y) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (ys.size() > xs.size() || !std::equal(ys.rbegin(), ys.rend(), xs.rbegin())) {
    throw DimensionError("add_broadcast: " + shape_to_string(ys) +
                         " is not a trailing shape of " + shape_to_string(xs));
  }
  const std::size_t inner = y.numel();
  const std::size_t outer = x.numel() / inner;
  Buffer out(x.numel());
  const double* px = data_ptr(x);
  const double* py = data_ptr(y);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = px[o * inner + i] + py[i];
  return make_op_result(xs, std::move(out), {x, y}, [x, y, inner, outer](TensorNode& self) {
    accumulate_grad(x, self.grad);
    if (double* gy = grad_ptr(y)) {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) gy[i] += self.grad[o * inner + i];
    }
  });
}

Tensor matmul(const Tensor& x, const Tensor& w) { return linear(x, w, Tensor()); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (w.rank() != 2 || x.shape().back() != w.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_to_string(x.shape()) +
                         " by " + shape_to_string(w.shape()));
  }
  const std::size_t k = w.dim(0);
  const std::size_t n = w.dim(1);
  const std::size_t m = x.numel() / k;
  if (bias.defined() && bias.numel() != n) {
    throw DimensionError("linear: bias of shape " + shape_to_string(bias.shape()) +
                         " for output width " + std::to_string(n));
  }
  Buffer out(m * n);
  MatMap y(out.data(), m, n);
  y.noalias() = ConstMatMap(data_ptr(x), m, k) * ConstMatMap(data_ptr(w), k, n);
  if (bias.defined()) {
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(data_ptr(bias), n);
  }
  Shape shape = x.shape();
  shape.back() = n;
  std::vector<Tensor> parents{x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op_result(std::move(shape), std::move(out), parents,
                        [x, w, bias, m, k, n](TensorNode& self) {
    ConstMatMap dy(self.grad.data(), m, n);
    if (double* gx = grad_ptr(x)) {
      MatMap(gx, m, k).noalias() += dy * ConstMatMap(data_ptr(w), k, n).transpose();
    }
    if (double* gw = grad_ptr(w)) {
      MatMap(gw, k, n).noalias() += ConstMatMap(data_ptr(x), m, k).transpose() * dy;
    }
    if (bias.defined()) {
      if (double* gb = grad_ptr(bias)) {
        Eigen::Map<Eigen::RowVectorXd>(gb, n) += dy.colwise().sum();
      }
    }
  });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const std::size_t n = x.numel();
  Buffer out(n);
  Buffer th(n);
  const double* px = data_ptr(x);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = px[i];
    th[i] = std::tanh(kC * (v + kA * v * v * v));
    out[i] = 0.5 * v * (1.0 + th[i]);
  }
  return make_op_result(x.shape(), std::move(out), {x},
                        [x, th = std::move(th)](TensorNode& self) {
    double* gx = grad_ptr(x);
    const double* px = data_ptr(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = px[i];
      const double t = th[i];
      const double du = kC * (1.0 + 3.0 * kA * v * v);
      gx[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
  return unary(x, [](double v) { return std::fabs(v); },
               [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c) {
    throw DimensionError("layer_norm: affine parameters do not match width " +
                         std::to_string(c));
  }
  const std::size_t rows = x.numel() / c;
  Buffer out(x.numel());
  Buffer xhat(x.numel());
  Buffer inv_std(rows);
  const double* px = data_ptr(x);
  const double* g = data_ptr(gamma);
  const double* b = data_ptr(beta);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = px + r * c;
    double mu = 0.0;
    for (std::size_t i = 0; i < c; ++i) mu += row[i];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t i = 0; i < c; ++i) {
      const double h = (row[i] - mu) * is;
      xhat[r * c + i] = h;
      out[r * c + i] = h * g[i] + b[i];
    }
  }
  return make_op_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, c, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](TensorNode& self) {
        const double* dy = self.grad.data();
        const double* g = data_ptr(gamma);
        double* gx = grad_ptr(x);
        double* gg = grad_ptr(gamma);
        double* gb = grad_ptr(beta);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* dyr = dy + r * c;
          const double* hr = xhat.data() + r * c;
          if (gg || gb) {
            for (std::size_t i = 0; i < c; ++i) {
              if (gg) gg[i] += dyr[i] * hr[i];
              if (gb) gb[i] += dyr[i];
            }
          }
          if (gx) {
            double mean_dh = 0.0;
            double mean_dh_h = 0.0;
            for (std::size_t i = 0; i < c; ++i) {
              const double dh = dyr[i] * g[i];
              mean_dh += dh;
              mean_dh_h += dh * hr[i];
            }
            mean_dh /= static_cast<double>(c);
            mean_dh_h /= static_cast<double>(c);
            for (std::size_t i = 0; i < c; ++i) {
              const double dh = dyr[i] * g[i];
              gx[r * c + i] += inv_std[r] * (dh - mean_dh - hr[i] * mean_dh_h);
            }
          }
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) {
    throw DimensionError("embedding: table must be [V, D], got " +
                         shape_to_string(table.shape()));
  }
  const std::size_t v = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<int> idx(ids.begin(), ids.end());
  Buffer out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= v) {
      throw RangeError("embedding: index " + std::to_string(idx[r]) +
                       " outside table of " + std::to_string(v) + " rows");
    }
    std::copy_n(data_ptr(table) + idx[r] * d, d, out.begin() + r * d);
  }
  const std::size_t rows = idx.size();
  return make_op_result({rows, d}, std::move(out), {table},
                        [table, d, idx = std::move(idx)](TensorNode& self) {
    double* gt = grad_ptr(table);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t i = 0; i < d; ++i) gt[idx[r] * d + i] += self.grad[r * d + i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_to_string(x.shape()) + " -> " +
                         shape_to_string(shape));
  }
  Buffer out(x.data().begin(), x.data().end());
  return make_op_result(std::move(shape), std::move(out), {x},
                        [x](TensorNode& self) { accumulate_grad(x, self.grad); });
}

Tensor concat_seq(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_seq: no inputs");
  const SeqDims first = seq_dims(parts.front(), "concat_seq");
  const bool batched = parts.front().rank() == 3;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    SeqDims d = seq_dims(p, "concat_seq");
    if (d.batch != first.batch || d.channels != first.channels ||
        p.rank() != parts.front().rank()) {
      throw DimensionError("concat_seq: incompatible part " + shape_to_string(p.shape()));
    }
    total += d.length;
  }
  const std::size_t bsz = first.batch;
  const std::size_t c = first.channels;
  Buffer out(bsz * total * c);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t len = seq_dims(p, "concat_seq").length;
    for (std::size_t b = 0; b < bsz; ++b) {
      std::copy_n(data_ptr(p) + b * len * c, len * c,
                  out.begin() + (b * total + offset) * c);
    }
    offsets.push_back(offset);
    offset += len;
  }
  return make_op_result(seq_shape(batched, bsz, total, c), std::move(out), parts,
                        [parts, offsets, bsz, total, c](TensorNode& self) {
    for (std::size_t k = 0; k < parts.size(); ++k) {
      double* gp = grad_ptr(parts[k]);
      if (!gp) continue;
      const std::size_t len = parts[k].numel() / (bsz * c);
      for (std::size_t b = 0; b < bsz; ++b) {
        const double* src = self.grad.data() + (b * total + offsets[k]) * c;
        double* dst = gp + b * len * c;
        for (std::size_t i = 0; i < len * c; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor slice_seq(const Tensor& x, std::size_t start, std::size_t len) {
  const SeqDims d = seq_dims(x, "slice_seq");
  if (len == 0 || start + len > d.length) {
    throw DimensionError("slice_seq: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") outside length " +
                         std::to_string(d.length));
  }
  Buffer out(d.batch * len * d.channels);
  for (std::size_t b = 0; b < d.batch; ++b) {
    std::copy_n(data_ptr(x) + (b * d.length + start) * d.channels, len * d.channels,
                out.begin() + b * len * d.channels);
  }
  return make_op_result(seq_shape(x.rank() == 3, d.batch, len, d.channels),
                        std::move(out), {x}, [x, d, start, len](TensorNode& self) {
    double* gx = grad_ptr(x);
    for (std::size_t b = 0; b < d.batch; ++b) {
      const double* src = self.grad.data() + b * len * d.channels;
      double* dst = gx + (b * d.length + start) * d.channels;
      for (std::size_t i = 0; i < len * d.channels; ++i) dst[i] += src[i];
    }
  });
}

std::size_t conv_output_length(std::size_t length, std::size_t stride) {
  return (length + stride - 1) / stride;
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t pad_left) {
  const SeqDims d = seq_dims(input, "conv1d");
  if (kernel.rank() != 3 || kernel.dim(1) != d.channels) {
    throw DimensionError("conv1d: kernel " + shape_to_string(kernel.shape()) +
                         " does not match input channels " + std::to_string(d.channels));
  }
  if (stride == 0) throw ArgumentError("conv1d: stride must be positive");
  const std::size_t ksize = kernel.dim(0);
  const std::size_t cin = d.channels;
  const std::size_t cout = kernel.dim(2);
  if (bias.defined() && bias.numel() != cout) {
    throw DimensionError("conv1d: bias width mismatch");
  }
  const std::size_t tout = conv_output_length(d.length, stride);
  const std::size_t rows = d.batch * tout;

  // Tap i gathers input row j*stride - pad_left + i (or zeros) for every
  // output row, then contributes gather_i @ kernel[i].
  auto source_row = [=](std::size_t b, std::size_t j, std::size_t tap) -> long {
    const long t = static_cast<long>(j * stride + tap) - static_cast<long>(pad_left);
    if (t < 0 || t >= static_cast<long>(d.length)) return -1;
    return static_cast<long>(b * d.length) + t;
  };

  Buffer out(rows * cout, 0.0);
  MatMap y(out.data(), rows, cout);
  RowMat gathered(rows, cin);
  for (std::size_t tap = 0; tap < ksize; ++tap) {
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t j = 0; j < tout; ++j) {
        const long src = source_row(b, j, tap);
        if (src < 0) {
          gathered.row(b * tout + j).setZero();
        } else {
          gathered.row(b * tout + j) =
              Eigen::Map<const Eigen::RowVectorXd>(data_ptr(input) + src * cin, cin);
        }
      }
    }
    y.noalias() += gathered * ConstMatMap(data_ptr(kernel) + tap * cin * cout, cin, cout);
  }
  if (bias.defined()) y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(data_ptr(bias), cout);

  std::vector<Tensor> parents{input, kernel};
  if (bias.defined()) parents.push_back(bias);
  return make_op_result(
      seq_shape(input.rank() == 3, d.batch, tout, cout), std::move(out), parents,
      [input, kernel, bias, d, ksize, cin, cout, tout, rows, source_row](TensorNode& self) {
        ConstMatMap dy(self.grad.data(), rows, cout);
        double* gin = grad_ptr(input);
        double* gk = grad_ptr(kernel);
        RowMat gathered(rows, cin);
        RowMat dgathered(rows, cin);
        for (std::size_t tap = 0; tap < ksize; ++tap) {
          ConstMatMap w(data_ptr(kernel) + tap * cin * cout, cin, cout);
          if (gk) {
            for (std::size_t b = 0; b < d.batch; ++b) {
              for (std::size_t j = 0; j < tout; ++j) {
                const long src = source_row(b, j, tap);
                if (src < 0) {
                  gathered.row(b * tout + j).setZero();
                } else {
                  gathered.row(b * tout + j) = Eigen::Map<const Eigen::RowVectorXd>(
                      data_ptr(input) + src * cin, cin);
                }
              }
            }
            MatMap(gk + tap * cin * cout, cin, cout).noalias() += gathered.transpose() * dy;
          }
          if (gin) {
            dgathered.noalias() = dy * w.transpose();
            for (std::size_t b = 0; b < d.batch; ++b) {
              for (std::size_t j = 0; j < tout; ++j) {
                const long src = source_row(b, j, tap);
                if (src < 0) continue;
                Eigen::Map<Eigen::RowVectorXd>(gin + src * cin, cin) +=
                    dgathered.row(b * tout + j);
              }
            }
          }
        }
        if (bias.defined()) {
          if (double* gb = grad_ptr(bias)) {
            Eigen::Map<Eigen::RowVectorXd>(gb, cout) += dy.colwise().sum();
          }
        }
      });
}

Tensor causal_conv1d(const Tensor& input, const Tensor& kernel, std::size_t stride) {
  if (kernel.rank() != 3 || kernel.dim(0) == 0) {
    throw DimensionError("causal_conv1d: kernel must be [K, Cin, Cout]");
  }
  return conv1d(input, kernel, Tensor(), stride, kernel.dim(0) - 1);
}

namespace {

struct AttentionShapes {
  std::size_t batch, tq, tk, dim, heads, head_dim;
};

AttentionShapes check_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                std::size_t heads, const AttentionMask& mask) {
  const SeqDims dq = seq_dims(q, "attention");
  const SeqDims dk = seq_dims(k, "attention");
  const SeqDims dv = seq_dims(v, "attention");
  if (q.rank() != k.rank() || k.rank() != v.rank() || dq.batch != dk.batch ||
      dk.batch != dv.batch || dk.length != dv.length || dq.channels != dk.channels ||
      dk.channels != dv.channels) {
    throw DimensionError("attention: incompatible q/k/v shapes " +
                         shape_to_string(q.shape()) + ", " + shape_to_string(k.shape()) +
                         ", " + shape_to_string(v.shape()));
  }
  if (heads == 0 || dq.channels % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(dq.channels) +
                      " not divisible into " + std::to_string(heads) + " heads");
  }
  if (!mask.empty()) {
    if (mask.rows != dq.length || mask.cols != dk.length) {
      throw DimensionError("attention: mask is " + std::to_string(mask.rows) + "x" +
                           std::to_string(mask.cols) + " for " +
                           std::to_string(dq.length) + "x" + std::to_string(dk.length));
    }
    for (std::size_t i = 0; i < mask.rows; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < mask.cols && !any; ++j) any = mask(i, j);
      if (!any) {
        throw ConfigError("attention: query row " + std::to_string(i) +
                          " has no allowed key positions");
      }
    }
  }
  return {dq.batch, dq.length, dk.length, dq.channels, heads, dq.channels / heads};
}

using StridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using MutStridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

// Head h of sequence b as a [len, head_dim] view into a [B, len, dim] buffer.
StridedMap head_view(const double* base, const AttentionShapes& s, std::size_t b,
                     std::size_t h, std::size_t len) {
  return StridedMap(base + b * len * s.dim + h * s.head_dim, len, s.head_dim,
                    Eigen::OuterStride<>(s.dim));
}

MutStridedMap head_view(double* base, const AttentionShapes& s, std::size_t b,
                        std::size_t h, std::size_t len) {
  return MutStridedMap(base + b * len * s.dim + h * s.head_dim, len, s.head_dim,
                       Eigen::OuterStride<>(s.dim));
}

// probs[(b*H + h)*tq*tk + i*tk + j], zero on masked entries.
void attention_probs(const AttentionShapes& s, const double* q, const double* k,
                     const AttentionMask& mask, Buffer& probs) {
  probs.assign(s.batch * s.heads * s.tq * s.tk, 0.0);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t h = 0; h < s.heads; ++h) {
      double* p = probs.data() + (b * s.heads + h) * s.tq * s.tk;
      MatMap scores(p, s.tq, s.tk);
      scores.noalias() = head_view(q, s, b, h, s.tq) * head_view(k, s, b, h, s.tk).transpose();
      for (std::size_t i = 0; i < s.tq; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < s.tk; ++j) {
          if (mask(i, j)) mx = std::max(mx, p[i * s.tk + j] * inv_sqrt);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < s.tk; ++j) {
          double& e = p[i * s.tk + j];
          e = mask(i, j) ? std::exp(e * inv_sqrt - mx) : 0.0;
          z += e;
        }
        for (std::size_t j = 0; j < s.tk; ++j) p[i * s.tk + j] /= z;
      }
    }
  }
}

}  // namespace

Tensor attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 std::size_t heads, const AttentionMask& mask, double dropout_p,
                 Rng* rng) {
  const AttentionShapes s = check_attention(queries, keys, values, heads, mask);
  Buffer probs;
  attention_probs(s, data_ptr(queries), data_ptr(keys), mask, probs);

  // With dropout, `mixed` holds the weights actually applied to the values.
  Buffer mixed;
  const bool use_dropout = rng != nullptr && dropout_p > 0.0;
  if (use_dropout) {
    mixed = probs;
    const double keep = 1.0 / (1.0 - dropout_p);
    for (double& w : mixed) w = rng->uniform() < dropout_p ? 0.0 : w * keep;
  }
  const Buffer& weights = use_dropout ? mixed : probs;

  Buffer out(s.batch * s.tq * s.dim, 0.0);
  const double* pv = data_ptr(values);
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t h = 0; h < s.heads; ++h) {
      ConstMatMap w(weights.data() + (b * s.heads + h) * s.tq * s.tk, s.tq, s.tk);
      head_view(out.data(), s, b, h, s.tq).noalias() = w * head_view(pv, s, b, h, s.tk);
    }
  }

  return make_op_result(
      queries.shape(), std::move(out), {queries, keys, values},
      [queries, keys, values, s, dropout_p, probs = std::move(probs),
       mixed = std::move(mixed)](TensorNode& self) {
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
        const bool dropped = !mixed.empty();
        const double keep = dropped ? 1.0 / (1.0 - dropout_p) : 1.0;
        const double* q = data_ptr(queries);
        const double* k = data_ptr(keys);
        const double* v = data_ptr(values);
        const double* dy = self.grad.data();
        double* gq = grad_ptr(queries);
        double* gk = grad_ptr(keys);
        double* gv = grad_ptr(values);
        RowMat dw(s.tq, s.tk);
        for (std::size_t b = 0; b < s.batch; ++b) {
          for (std::size_t h = 0; h < s.heads; ++h) {
            const std::size_t base = (b * s.heads + h) * s.tq * s.tk;
            ConstMatMap p(probs.data() + base, s.tq, s.tk);
            StridedMap dyh = head_view(dy, s, b, h, s.tq);
            if (gv) {
              ConstMatMap w(dropped ? mixed.data() + base : probs.data() + base, s.tq, s.tk);
              head_view(gv, s, b, h, s.tk).noalias() += w.transpose() * dyh;
            }
            if (!gq && !gk) continue;
            // Gradient w.r.t. the softmax output, through the dropout mask.
            dw.noalias() = dyh * head_view(v, s, b, h, s.tk).transpose();
            if (dropped) {
              for (std::size_t i = 0; i < s.tq * s.tk; ++i) {
                dw.data()[i] = mixed[base + i] == 0.0 ? 0.0 : dw.data()[i] * keep;
              }
            }
            // Softmax backward: ds = p * (dw - sum_j p_j dw_j), scaled.
            for (std::size_t i = 0; i < s.tq; ++i) {
              const double dot = p.row(i).dot(dw.row(i));
              for (std::size_t j = 0; j < s.tk; ++j) {
                dw(i, j) = p(i, j) * (dw(i, j) - dot) * inv_sqrt;
              }
            }
            if (gq) head_view(gq, s, b, h, s.tq).noalias() += dw * head_view(k, s, b, h, s.tk);
            if (gk) {
              head_view(gk, s, b, h, s.tk).noalias() +=
                  dw.transpose() * head_view(q, s, b, h, s.tq);
            }
          }
        }
      });
}

Tensor masked_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                        const AttentionMask& mask) {
  if (queries.rank() != 2) {
    throw DimensionError("masked_attention: expected [Tq, D] queries");
  }
  return attention(queries, keys, values, 1, mask);
}

std::vector<double> attention_weights(const Tensor& queries, const Tensor& keys,
                                      const AttentionMask& mask) {
  const AttentionShapes s = check_attention(queries, keys, keys, 1, mask);
  Buffer probs;
  attention_probs(s, data_ptr(queries), data_ptr(keys), mask, probs);
  return {probs.begin(), probs.end()};
}

Tensor dropout(const Tensor& x, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  if (p >= 1.0) throw ArgumentError("dropout: probability must be < 1");
  const double keep = 1.0 / (1.0 - p);
  Buffer factor(x.numel());
  Buffer out(x.numel());
  const double* px = data_ptr(x);
  for (std::size_t i = 0; i < out.size(); ++i) {
    factor[i] = rng->uniform() < p ? 0.0 : keep;
    out[i] = px[i] * factor[i];
  }
  return make_op_result(x.shape(), std::move(out), {x},
                        [x, factor = std::move(factor)](TensorNode& self) {
    double* gx = grad_ptr(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * factor[i];
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  const std::size_t k = logits.shape().back();
  const std::size_t rows = logits.numel() / k;
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(rows) + " rows");
  }
  Buffer probs(logits.numel());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw RangeError("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const double* row = data_ptr(logits) + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      probs[r * k + i] = std::exp(row[i] - mx);
      z += probs[r * k + i];
    }
    for (std::size_t i = 0; i < k; ++i) probs[r * k + i] /= z;
    loss -= (row[t] - mx) - std::log(z);
  }
  loss /= static_cast<double>(rows);
  std::vector<int> tgt(targets.begin(), targets.end());
  return make_op_result({1}, {loss}, {logits},
                        [logits, k, rows, probs = std::move(probs),
                         tgt = std::move(tgt)](TensorNode& self) {
    double* gl = grad_ptr(logits);
    const double g = self.grad[0] / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < k; ++i) gl[r * k + i] += g * probs[r * k + i];
      gl[r * k + tgt[r]] -= g;
    }
  });
}

Tensor l1_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "l1_loss");
  const std::size_t n = prediction.numel();
  const double* pp = data_ptr(prediction);
  const double* pt = data_ptr(target);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::fabs(pp[i] - pt[i]);
  return make_op_result({1}, {total / static_cast<double>(n)}, {prediction, target},
                        [prediction, target, n](TensorNode& self) {
    const double g = self.grad[0] / static_cast<double>(n);
    double* gp = grad_ptr(prediction);
    double* gt = grad_ptr(target);
    const double* pp = data_ptr(prediction);
    const double* pt = data_ptr(target);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = pp[i] - pt[i];
      const double s = diff > 0.0 ? g : (diff < 0.0 ? -g : 0.0);
      if (gp) gp[i] += s;
      if (gt) gt[i] -= s;
    }
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_op_result({1}, {total}, {x}, [x](TensorNode& self) {
    double* gx = grad_ptr(x);
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sinusoidal_table(std::size_t length, std::size_t dim) {
  std::vector<double> table(length * dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table[pos * dim + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from({length, dim}, std::move(table));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace skilltok
