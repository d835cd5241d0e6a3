// Copyright 2026 The mrcqt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mrcqt/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mrcqt/error.h"
#include "mrcqt/kernels.h"

namespace mrcqt {
namespace {

constexpr double kNormEps = 1e-6;

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw SizeError(std::string(op) + ": shapes " + ShapeToString(a.shape()) +
                    " and " + ShapeToString(b.shape()) + " differ");
  }
}

void RequireRank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw SizeError(std::string(op) + ": expected rank " +
                    std::to_string(rank) + ", got shape " +
                    ShapeToString(a.shape()));
  }
}

// Accumulates `g` (length n) into the parent's gradient when it wants one.
void AccumulateInto(const std::shared_ptr<TensorNode>& parent,
                    const double* g, double factor = 1.0) {
  if (!parent->requires_grad) return;
  std::vector<double>& pg = parent->EnsureGrad();
  kernels::Axpy(factor, g, pg.data(), pg.size());
}

void CheckConvWeight(const Tensor& x, const Tensor& w, const char* op) {
  RequireRank(x, 3, op);
  RequireRank(w, 3, op);
  if (w.dim(1) != x.dim(0) || w.dim(2) % 2 == 0) {
    throw SizeError(std::string(op) + ": weight " + ShapeToString(w.shape()) +
                    " does not fit input " + ShapeToString(x.shape()));
  }
}

// Splits `shape` around `axis` into outer * axis * inner.
void AxisStrides(const Shape& shape, std::size_t axis, std::size_t& outer,
                 std::size_t& inner) {
  outer = 1;
  inner = 1;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (d < axis) outer *= shape[d];
    if (d > axis) inner *= shape[d];
  }
}

// w: [rows, cols] -> [cols, rows].
std::vector<double> Transpose(const double* w, std::size_t rows,
                              std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = w[r * cols + c];
  }
  return t;
}

// Tap k of w: [out, in, taps] as an [in, out] matrix.
std::vector<double> TapTransposed(const double* w, std::size_t out,
                                  std::size_t in, std::size_t taps,
                                  std::size_t k) {
  std::vector<double> t(in * out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) t[i * out + o] = w[(o * in + i) * taps + k];
  }
  return t;
}

// x: [C, F, T] -> [C, F, T + 2 pad] with reflected time edges.
std::vector<double> PadTime(const double* x, std::size_t rows,
                            std::size_t frames, std::size_t pad) {
  const std::size_t width = frames + 2 * pad;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x + r * frames;
    double* dst = out.data() + r * width;
    std::copy_n(src, frames, dst + pad);
    for (std::size_t t = 0; t < pad; ++t) {
      dst[t] = src[ReflectIndex(static_cast<long long>(t) -
                                    static_cast<long long>(pad),
                                frames)];
      dst[frames + pad + t] =
          src[ReflectIndex(static_cast<long long>(frames + t), frames)];
    }
  }
  return out;
}

Tensor Resample(const Tensor& x, std::size_t axis,
                ResampleDirection direction) {
  if (axis >= x.rank()) throw SizeError("resample: axis out of range");
  auto op = AxisResampler::Get(direction, x.dim(axis));
  std::size_t outer, inner;
  AxisStrides(x.shape(), axis, outer, inner);
  Shape shape = x.shape();
  shape[axis] = op->output_length();
  std::vector<double> out(ShapeSize(shape));
  op->Apply(x.ptr(), out.data(), outer, inner);
  auto xn = x.node();
  return MakeResult(std::move(shape), std::move(out), {x},
                    [xn, op, outer, inner](TensorNode& self) {
                      if (!xn->requires_grad) return;
                      op->AccumulateTranspose(self.grad.data(),
                                              xn->EnsureGrad().data(), outer,
                                              inner);
                    });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::Axpy(1.0, b.ptr(), out.data(), out.size());
  auto an = a.node(), bn = b.node();
  return MakeResult(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
    AccumulateInto(an, self.grad.data());
    AccumulateInto(bn, self.grad.data());
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::Axpy(-1.0, b.ptr(), out.data(), out.size());
  auto an = a.node(), bn = b.node();
  return MakeResult(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
    AccumulateInto(an, self.grad.data());
    AccumulateInto(bn, self.grad.data(), -1.0);
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.size());
  kernels::Mul(a.ptr(), b.ptr(), out.data(), out.size());
  auto an = a.node(), bn = b.node();
  return MakeResult(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
    const std::size_t n = self.grad.size();
    if (an->requires_grad) {
      kernels::MulAcc(self.grad.data(), bn->value.data(),
                      an->EnsureGrad().data(), n);
    }
    if (bn->requires_grad) {
      kernels::MulAcc(self.grad.data(), an->value.data(),
                      bn->EnsureGrad().data(), n);
    }
  });
}

Tensor Scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  kernels::ShiftScale(a.ptr(), 0.0, factor, out.data(), out.size());
  auto an = a.node();
  return MakeResult(a.shape(), std::move(out), {a}, [an, factor](TensorNode& self) {
    AccumulateInto(an, self.grad.data(), factor);
  });
}

Tensor Sum(const Tensor& a) {
  const double total = kernels::Sum(a.ptr(), a.size());
  auto an = a.node();
  return MakeResult({1}, {total}, {a}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    const double g = self.grad[0];
    for (double& v : an->EnsureGrad()) v += g;
  });
}

Tensor Mean(const Tensor& a) {
  return Scale(Sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor Mse(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mse");
  const std::size_t n = a.size();
  std::vector<double> diff(a.data().begin(), a.data().end());
  kernels::Axpy(-1.0, b.ptr(), diff.data(), n);
  const double value = kernels::Dot(diff.data(), diff.data(), n) /
                       static_cast<double>(n);
  auto an = a.node(), bn = b.node();
  return MakeResult({1}, {value}, {a, b},
                    [an, bn, diff = std::move(diff)](TensorNode& self) {
                      const double g =
                          2.0 * self.grad[0] / static_cast<double>(diff.size());
                      AccumulateInto(an, diff.data(), g);
                      AccumulateInto(bn, diff.data(), -g);
                    });
}

Tensor Reshape(const Tensor& a, Shape shape) {
  if (ShapeSize(shape) != a.size()) {
    throw SizeError("reshape: " + ShapeToString(a.shape()) + " to " +
                    ShapeToString(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  auto an = a.node();
  return MakeResult(std::move(shape), std::move(out), {a},
                    [an](TensorNode& self) {
                      AccumulateInto(an, self.grad.data());
                    });
}

Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  RequireRank(weight, 2, "linear");
  if (x.rank() == 0 || x.shape().back() != weight.dim(1)) {
    throw SizeError("linear: input " + ShapeToString(x.shape()) +
                    " does not fit weight " + ShapeToString(weight.shape()));
  }
  const std::size_t in = weight.dim(1), out_dim = weight.dim(0);
  const std::size_t rows = x.size() / in;
  if (bias.defined() && bias.shape() != Shape{out_dim}) {
    throw SizeError("linear: bias shape " + ShapeToString(bias.shape()));
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  std::vector<double> out(rows * out_dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      out[r * out_dim + o] =
          kernels::Dot(weight.ptr() + o * in, x.ptr() + r * in, in) +
          (bias.defined() ? bias.data()[o] : 0.0);
    }
  }
  auto xn = x.node(), wn = weight.node();
  auto bn = bias.defined() ? bias.node() : nullptr;
  std::vector<Tensor> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return MakeResult(std::move(shape), std::move(out), parents,
                    [xn, wn, bn, rows, in, out_dim](TensorNode& self) {
                      const double* g = self.grad.data();
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t o = 0; o < out_dim; ++o) {
                          const double go = g[r * out_dim + o];
                          if (xn->requires_grad) {
                            kernels::Axpy(go, wn->value.data() + o * in,
                                          xn->EnsureGrad().data() + r * in, in);
                          }
                          if (wn->requires_grad) {
                            kernels::Axpy(go, xn->value.data() + r * in,
                                          wn->EnsureGrad().data() + o * in, in);
                          }
                          if (bn && bn->requires_grad) bn->EnsureGrad()[o] += go;
                        }
                      }
                    });
}

Tensor Conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  RequireRank(x, 3, "conv1x1");
  RequireRank(weight, 2, "conv1x1");
  const std::size_t cin = x.dim(0), cout = weight.dim(0);
  if (weight.dim(1) != cin) {
    throw SizeError("conv1x1: weight " + ShapeToString(weight.shape()) +
                    " does not fit input " + ShapeToString(x.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) {
    throw SizeError("conv1x1: bias shape " + ShapeToString(bias.shape()));
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  std::vector<double> out(cout * plane, 0.0);
  if (bias.defined()) {
    for (std::size_t co = 0; co < cout; ++co) {
      std::fill_n(out.data() + co * plane, plane, bias.data()[co]);
    }
  }
  std::vector<const double*> xr(cin);
  std::vector<double*> yr(cout);
  for (std::size_t ci = 0; ci < cin; ++ci) xr[ci] = x.ptr() + ci * plane;
  for (std::size_t co = 0; co < cout; ++co) yr[co] = out.data() + co * plane;
  kernels::GemmRows(weight.ptr(), cin, xr.data(), yr.data(), cout, cin, plane);

  auto xn = x.node(), wn = weight.node();
  auto bn = bias.defined() ? bias.node() : nullptr;
  std::vector<Tensor> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return MakeResult(
      {cout, x.dim(1), x.dim(2)}, std::move(out), parents,
      [xn, wn, bn, cin, cout, plane](TensorNode& self) {
        std::vector<const double*> gr(cout);
        for (std::size_t co = 0; co < cout; ++co) {
          gr[co] = self.grad.data() + co * plane;
        }
        if (wn->requires_grad) {
          std::vector<const double*> xr(cin);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            xr[ci] = xn->value.data() + ci * plane;
          }
          kernels::GemmNt(gr.data(), xr.data(), wn->EnsureGrad().data(), cin,
                          cout, cin, plane);
        }
        if (bn && bn->requires_grad) {
          std::vector<double>& gb = bn->EnsureGrad();
          for (std::size_t co = 0; co < cout; ++co) {
            gb[co] += kernels::Sum(gr[co], plane);
          }
        }
        if (xn->requires_grad) {
          const std::vector<double> wt = Transpose(wn->value.data(), cout, cin);
          std::vector<double*> gx(cin);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            gx[ci] = xn->EnsureGrad().data() + ci * plane;
          }
          kernels::GemmRows(wt.data(), cout, gr.data(), gx.data(), cin, cout,
                            plane);
        }
      });
}

Tensor ConvFreqDilated(const Tensor& x, const Tensor& weight,
                       std::size_t dilation) {
  CheckConvWeight(x, weight, "conv_freq");
  if (dilation == 0) throw ParameterError("conv_freq: dilation must be >= 1");
  const std::size_t cin = x.dim(0), bins = x.dim(1), frames = x.dim(2);
  const std::size_t cout = weight.dim(0), taps = weight.dim(2);
  const long long center = static_cast<long long>(taps / 2);
  // Source bin for each (output bin, tap).
  std::vector<std::size_t> source(bins * taps);
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t k = 0; k < taps; ++k) {
      const long long pos = static_cast<long long>(f) +
                            (static_cast<long long>(k) - center) *
                                static_cast<long long>(dilation);
      source[f * taps + k] = ReflectIndex(pos, bins);
    }
  }
  const std::size_t plane = bins * frames;
  std::vector<double> out(cout * plane, 0.0);
  std::vector<const double*> xr(cin * taps);
  std::vector<double*> yr(cout);
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t k = 0; k < taps; ++k) {
        xr[ci * taps + k] = x.ptr() + ci * plane + source[f * taps + k] * frames;
      }
    }
    for (std::size_t co = 0; co < cout; ++co) {
      yr[co] = out.data() + co * plane + f * frames;
    }
    kernels::GemmRows(weight.ptr(), cin * taps, xr.data(), yr.data(), cout,
                      cin * taps, frames);
  }

  auto xn = x.node(), wn = weight.node();
  return MakeResult(
      {cout, bins, frames}, std::move(out), {x, weight},
      [xn, wn, source = std::move(source), cin, cout, bins, frames, taps,
       plane](TensorNode& self) {
        std::vector<const double*> gr(cout);
        if (wn->requires_grad) {
          std::vector<const double*> xr(cin * taps);
          double* gw = wn->EnsureGrad().data();
          for (std::size_t f = 0; f < bins; ++f) {
            for (std::size_t co = 0; co < cout; ++co) {
              gr[co] = self.grad.data() + co * plane + f * frames;
            }
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t k = 0; k < taps; ++k) {
                xr[ci * taps + k] = xn->value.data() + ci * plane +
                                    source[f * taps + k] * frames;
              }
            }
            kernels::GemmNt(gr.data(), xr.data(), gw, cin * taps, cout,
                            cin * taps, frames);
          }
        }
        if (xn->requires_grad) {
          double* gx = xn->EnsureGrad().data();
          std::vector<double*> gxr(cin);
          // One tap per call: reflected taps may hit the same source row.
          for (std::size_t k = 0; k < taps; ++k) {
            const std::vector<double> wt =
                TapTransposed(wn->value.data(), cout, cin, taps, k);
            for (std::size_t f = 0; f < bins; ++f) {
              for (std::size_t co = 0; co < cout; ++co) {
                gr[co] = self.grad.data() + co * plane + f * frames;
              }
              for (std::size_t ci = 0; ci < cin; ++ci) {
                gxr[ci] = gx + ci * plane + source[f * taps + k] * frames;
              }
              kernels::GemmRows(wt.data(), cout, gr.data(), gxr.data(), cin,
                                cout, frames);
            }
          }
        }
      });
}

Tensor ConvTime(const Tensor& x, const Tensor& weight) {
  CheckConvWeight(x, weight, "conv_time");
  const std::size_t cin = x.dim(0), bins = x.dim(1), frames = x.dim(2);
  const std::size_t cout = weight.dim(0), taps = weight.dim(2);
  const std::size_t pad = taps / 2;
  const std::size_t width = frames + 2 * pad;
  const std::size_t plane = bins * frames;
  const std::vector<double> padded = PadTime(x.ptr(), cin * bins, frames, pad);
  std::vector<double> out(cout * plane, 0.0);
  std::vector<const double*> xr(cin * taps);
  std::vector<double*> yr(cout);
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t k = 0; k < taps; ++k) {
        xr[ci * taps + k] = padded.data() + (ci * bins + f) * width + k;
      }
    }
    for (std::size_t co = 0; co < cout; ++co) {
      yr[co] = out.data() + co * plane + f * frames;
    }
    kernels::GemmRows(weight.ptr(), cin * taps, xr.data(), yr.data(), cout,
                      cin * taps, frames);
  }

  auto xn = x.node(), wn = weight.node();
  return MakeResult(
      {cout, bins, frames}, std::move(out), {x, weight},
      [xn, wn, cin, cout, bins, frames, taps, pad, width,
       plane](TensorNode& self) {
        std::vector<const double*> gr(cout);
        if (wn->requires_grad) {
          const std::vector<double> padded =
              PadTime(xn->value.data(), cin * bins, frames, pad);
          std::vector<const double*> xr(cin * taps);
          double* gw = wn->EnsureGrad().data();
          for (std::size_t f = 0; f < bins; ++f) {
            for (std::size_t co = 0; co < cout; ++co) {
              gr[co] = self.grad.data() + co * plane + f * frames;
            }
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t k = 0; k < taps; ++k) {
                xr[ci * taps + k] = padded.data() + (ci * bins + f) * width + k;
              }
            }
            kernels::GemmNt(gr.data(), xr.data(), gw, cin * taps, cout,
                            cin * taps, frames);
          }
        }
        if (xn->requires_grad) {
          // Accumulate into a padded buffer, then fold the reflected edges.
          std::vector<double> gpad(cin * bins * width, 0.0);
          std::vector<double*> gxr(cin);
          for (std::size_t k = 0; k < taps; ++k) {
            const std::vector<double> wt =
                TapTransposed(wn->value.data(), cout, cin, taps, k);
            for (std::size_t f = 0; f < bins; ++f) {
              for (std::size_t co = 0; co < cout; ++co) {
                gr[co] = self.grad.data() + co * plane + f * frames;
              }
              for (std::size_t ci = 0; ci < cin; ++ci) {
                gxr[ci] = gpad.data() + (ci * bins + f) * width + k;
              }
              kernels::GemmRows(wt.data(), cout, gr.data(), gxr.data(), cin,
                                cout, frames);
            }
          }
          double* gx = xn->EnsureGrad().data();
          for (std::size_t r = 0; r < cin * bins; ++r) {
            const double* src = gpad.data() + r * width;
            double* dst = gx + r * frames;
            kernels::Axpy(1.0, src + pad, dst, frames);
            for (std::size_t t = 0; t < pad; ++t) {
              dst[ReflectIndex(static_cast<long long>(t) -
                                   static_cast<long long>(pad),
                               frames)] += src[t];
              dst[ReflectIndex(static_cast<long long>(frames + pad + t) -
                                   static_cast<long long>(pad),
                               frames)] += src[frames + pad + t];
            }
          }
        }
      });
}

Tensor GroupNormShiftFree(const Tensor& x, std::size_t groups,
                          const Tensor& gain) {
  RequireRank(x, 3, "group_norm");
  const std::size_t channels = x.dim(0);
  if (groups == 0 || channels % groups != 0) {
    throw SizeError("group_norm: " + std::to_string(groups) +
                    " groups do not divide " + std::to_string(channels) +
                    " channels");
  }
  if (gain.shape() != Shape{channels}) {
    throw SizeError("group_norm: gain shape " + ShapeToString(gain.shape()));
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  const std::size_t group_size = (channels / groups) * plane;
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const double* src = x.ptr() + g * group_size;
    const double mean =
        kernels::Sum(src, group_size) / static_cast<double>(group_size);
    const double var = kernels::SumSqDev(src, mean, group_size) /
                       static_cast<double>(group_size);
    inv_std[g] = 1.0 / std::sqrt(var + kNormEps);
    kernels::ShiftScale(src, mean, inv_std[g], normalized.data() + g * group_size,
                        group_size);
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    kernels::ShiftScale(normalized.data() + c * plane, 0.0, gain.data()[c],
                        out.data() + c * plane, plane);
  }
  auto xn = x.node(), gn = gain.node();
  return MakeResult(
      x.shape(), std::move(out), {x, gain},
      [xn, gn, normalized = std::move(normalized), inv_std = std::move(inv_std),
       groups, channels, plane, group_size](TensorNode& self) {
        const double* g = self.grad.data();
        if (gn->requires_grad) {
          std::vector<double>& gg = gn->EnsureGrad();
          for (std::size_t c = 0; c < channels; ++c) {
            gg[c] += kernels::Dot(g + c * plane, normalized.data() + c * plane,
                                  plane);
          }
        }
        if (!xn->requires_grad) return;
        std::vector<double>& gx = xn->EnsureGrad();
        std::vector<double> gnorm(group_size);
        const std::size_t per_group = channels / groups;
        for (std::size_t grp = 0; grp < groups; ++grp) {
          const std::size_t base = grp * group_size;
          for (std::size_t c = 0; c < per_group; ++c) {
            const std::size_t ch = grp * per_group + c;
            kernels::ShiftScale(g + base + c * plane, 0.0, gn->value[ch],
                                gnorm.data() + c * plane, plane);
          }
          const double inv_n = 1.0 / static_cast<double>(group_size);
          const double mean_g = kernels::Sum(gnorm.data(), group_size) * inv_n;
          const double mean_gx =
              kernels::Dot(gnorm.data(), normalized.data() + base, group_size) *
              inv_n;
          // dx = inv_std * (dn - mean(dn) - n * mean(dn * n))
          kernels::Axpy(inv_std[grp], gnorm.data(), gx.data() + base,
                        group_size);
          kernels::Axpy(-inv_std[grp] * mean_gx, normalized.data() + base,
                        gx.data() + base, group_size);
          const double shift = -inv_std[grp] * mean_g;
          double* dst = gx.data() + base;
          for (std::size_t i = 0; i < group_size; ++i) dst[i] += shift;
        }
      });
}

Tensor Gelu(const Tensor& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  std::vector<double> slope(x.requires_grad() && GradModeEnabled() ? n : 0);
  kernels::Gelu(x.ptr(), out.data(), slope.empty() ? nullptr : slope.data(), n);
  auto xn = x.node();
  return MakeResult(x.shape(), std::move(out), {x},
                    [xn, slope = std::move(slope)](TensorNode& self) {
                      if (!xn->requires_grad) return;
                      kernels::MulAcc(self.grad.data(), slope.data(),
                                      xn->EnsureGrad().data(), slope.size());
                    });
}

Tensor FilmScale(const Tensor& x, const Tensor& scale) {
  if (x.rank() == 0 || scale.shape() != Shape{x.dim(0)}) {
    throw SizeError("film_scale: scale " + ShapeToString(scale.shape()) +
                    " does not fit " + ShapeToString(x.shape()));
  }
  const std::size_t channels = x.dim(0);
  const std::size_t plane = x.size() / channels;
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    kernels::ShiftScale(x.ptr() + c * plane, 0.0, 1.0 + scale.data()[c],
                        out.data() + c * plane, plane);
  }
  auto xn = x.node(), sn = scale.node();
  return MakeResult(x.shape(), std::move(out), {x, scale},
                    [xn, sn, channels, plane](TensorNode& self) {
                      const double* g = self.grad.data();
                      for (std::size_t c = 0; c < channels; ++c) {
                        if (xn->requires_grad) {
                          kernels::Axpy(1.0 + sn->value[c], g + c * plane,
                                        xn->EnsureGrad().data() + c * plane,
                                        plane);
                        }
                        if (sn->requires_grad) {
                          sn->EnsureGrad()[c] += kernels::Dot(
                              g + c * plane, xn->value.data() + c * plane,
                              plane);
                        }
                      }
                    });
}

Tensor Concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw SizeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw SizeError("concat: axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) throw SizeError("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && p.dim(d) != first[d]) {
        throw SizeError("concat: shapes " + ShapeToString(first) + " and " +
                        ShapeToString(p.shape()) + " differ off axis " +
                        std::to_string(axis));
      }
    }
    shape[axis] += p.dim(axis);
  }
  std::size_t outer, inner;
  AxisStrides(shape, axis, outer, inner);
  const std::size_t out_block = shape[axis] * inner;
  std::vector<double> out(ShapeSize(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.ptr() + o * block, block,
                  out.data() + o * out_block + offset);
    }
    offset += block;
  }
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return MakeResult(
      std::move(shape), std::move(out), parts,
      [nodes, offsets, outer, out_block](TensorNode& self) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          if (!nodes[i]->requires_grad) continue;
          std::vector<double>& g = nodes[i]->EnsureGrad();
          const std::size_t block = g.size() / outer;
          for (std::size_t o = 0; o < outer; ++o) {
            kernels::Axpy(1.0, self.grad.data() + o * out_block + offsets[i],
                          g.data() + o * block, block);
          }
        }
      });
}

std::vector<Tensor> Split(const Tensor& x, std::size_t axis,
                          const std::vector<std::size_t>& sizes) {
  if (axis >= x.rank()) throw SizeError("split: axis out of range");
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total != x.dim(axis)) {
    throw SizeError("split: sizes sum to " + std::to_string(total) +
                    ", axis has " + std::to_string(x.dim(axis)));
  }
  std::size_t outer, inner;
  AxisStrides(x.shape(), axis, outer, inner);
  const std::size_t in_block = x.dim(axis) * inner;
  std::vector<Tensor> pieces;
  std::size_t offset = 0;
  auto xn = x.node();
  for (std::size_t s : sizes) {
    Shape shape = x.shape();
    shape[axis] = s;
    const std::size_t block = s * inner;
    std::vector<double> out(outer * block);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.ptr() + o * in_block + offset, block,
                  out.data() + o * block);
    }
    pieces.push_back(MakeResult(
        std::move(shape), std::move(out), {x},
        [xn, offset, outer, block, in_block](TensorNode& self) {
          if (!xn->requires_grad) return;
          std::vector<double>& g = xn->EnsureGrad();
          for (std::size_t o = 0; o < outer; ++o) {
            kernels::Axpy(1.0, self.grad.data() + o * block,
                          g.data() + o * in_block + offset, block);
          }
        }));
    offset += block;
  }
  return pieces;
}

Tensor Downsample(const Tensor& x, std::size_t axis) {
  return Resample(x, axis, ResampleDirection::kHalve);
}

Tensor Upsample(const Tensor& x, std::size_t axis) {
  return Resample(x, axis, ResampleDirection::kDouble);
}

}  // namespace mrcqt
