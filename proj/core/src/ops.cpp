// Copyright 2026 The OBIC Authors
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

#include "obic/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "obic/error.hpp"
#include "obic/msssim.hpp"

namespace obic::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void require_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(op) + ": expected NCHW input, got " + shape_string(t.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Geometry of a strided convolution from a C×H×W plane stack to Ho×Wo.
struct Geometry {
  std::size_t c, h, w, k, stride, pad, ho, wo;
  std::size_t rows() const { return c * k * k; }
  std::size_t cols() const { return ho * wo; }
};

void im2col(const double* img, const Geometry& g, double* cols) {
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(g.h), w = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = cols + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oy * g.wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          const double* src = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= w) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col; accumulates into img.
void col2im(const double* cols, const Geometry& g, double* img) {
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(g.h), w = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = cols + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= h) continue;
          const double* src = row + oy * g.wo;
          double* dst = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                     const char* op) {
  if (in + 2 * pad < k) throw ShapeError(std::string(op) + ": input smaller than kernel");
  return (in + 2 * pad - k) / stride + 1;
}

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& spec,
                    const char* op) {
  require_rank4(x, op);
  if (w.rank() != 4 || w.dim(1) != x.dim(1) || w.dim(2) != w.dim(3)) {
    throw ShapeError(std::string(op) + ": weight " + shape_string(w.shape()) +
                     " incompatible with input " + shape_string(x.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != w.dim(0)) throw ShapeError(std::string(op) + ": bias shape");
  const std::size_t n = x.dim(0), co = w.dim(0), k = w.dim(2);
  Geometry geo{x.dim(1), x.dim(2), x.dim(3), k, spec.stride, spec.padding,
               conv_out(x.dim(2), k, spec.stride, spec.padding, op),
               conv_out(x.dim(3), k, spec.stride, spec.padding, op)};
  Tensor out({n, co, geo.ho, geo.wo});
  std::vector<double> cols(geo.rows() * geo.cols());
  CMapMat wm(w.data(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(geo.rows()));
  for (std::size_t i = 0; i < n; ++i) {
    im2col(x.data() + i * geo.c * geo.h * geo.w, geo, cols.data());
    CMapMat cm(cols.data(), static_cast<Eigen::Index>(geo.rows()),
               static_cast<Eigen::Index>(geo.cols()));
    MapMat om(out.data() + i * co * geo.cols(), static_cast<Eigen::Index>(co),
              static_cast<Eigen::Index>(geo.cols()));
    om.noalias() = wm * cm;
    for (std::size_t o = 0; o < co; ++o) om.row(static_cast<Eigen::Index>(o)).array() += b[o];
  }
  return out;
}

// Gradients of conv_forward; any of dx/dw/db may be null.
void conv_backward(const Tensor& x, const Tensor& w, const Tensor& dout, const ConvSpec& spec,
                   Tensor* dx, Tensor* dw, Tensor* db) {
  const std::size_t n = x.dim(0), co = w.dim(0), k = w.dim(2);
  Geometry geo{x.dim(1), x.dim(2), x.dim(3), k, spec.stride, spec.padding, dout.dim(2),
               dout.dim(3)};
  std::vector<double> cols(geo.rows() * geo.cols());
  const auto rows = static_cast<Eigen::Index>(geo.rows());
  const auto ncol = static_cast<Eigen::Index>(geo.cols());
  CMapMat wm(w.data(), static_cast<Eigen::Index>(co), rows);
  for (std::size_t i = 0; i < n; ++i) {
    CMapMat dm(dout.data() + i * co * geo.cols(), static_cast<Eigen::Index>(co), ncol);
    if (db) {
      for (std::size_t o = 0; o < co; ++o) (*db)[o] += dm.row(static_cast<Eigen::Index>(o)).sum();
    }
    if (dw) {
      im2col(x.data() + i * geo.c * geo.h * geo.w, geo, cols.data());
      CMapMat cm(cols.data(), rows, ncol);
      MapMat dwm(dw->data(), static_cast<Eigen::Index>(co), rows);
      dwm.noalias() += dm * cm.transpose();
    }
    if (dx) {
      MapMat cm(cols.data(), rows, ncol);
      cm.noalias() = wm.transpose() * dm;
      col2im(cols.data(), geo, dx->data() + i * geo.c * geo.h * geo.w);
    }
  }
}

Tensor masked_weight(const Tensor& w, const Tensor& mask) {
  Tensor out = w;
  const std::size_t kk = w.dim(2) * w.dim(3);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i % kk];
  return out;
}

template <typename F, typename D>
Var unary(Graph& g, Var x, std::string_view kind, F f, D df) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(xv[i]);
  return g.record(kind, {x}, std::move(out), [x, df](Graph& gr, Var self) {
    const Tensor& xv = gr.value(x);
    const Tensor& yv = gr.value(self);
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i] * df(xv[i], yv[i]);
  });
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

double normal_pdf(double v) {
  return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

Var conv2d(Graph& g, Var x, Var weight, Var bias, ConvSpec spec) {
  Tensor out = conv_forward(g.value(x), g.value(weight), g.value(bias), spec, "conv2d");
  return g.record("conv2d", {x, weight, bias}, std::move(out),
                  [x, weight, bias, spec](Graph& gr, Var self) {
                    conv_backward(gr.value(x), gr.value(weight), gr.grad(self), spec,
                                  gr.needs_grad(x) ? &gr.grad_buffer(x) : nullptr,
                                  gr.needs_grad(weight) ? &gr.grad_buffer(weight) : nullptr,
                                  gr.needs_grad(bias) ? &gr.grad_buffer(bias) : nullptr);
                  });
}

Var masked_conv2d(Graph& g, Var x, Var weight, Var bias, const Tensor& kernel_mask,
                  std::size_t padding) {
  const Tensor& w = g.value(weight);
  if (w.rank() != 4 || kernel_mask.shape() != Shape{w.dim(2), w.dim(3)}) {
    throw ShapeError("masked_conv2d: kernel mask must match weight taps");
  }
  const ConvSpec spec{1, padding};
  Tensor out = conv_forward(g.value(x), masked_weight(w, kernel_mask), g.value(bias), spec,
                            "masked_conv2d");
  return g.record(
      "masked_conv2d", {x, weight, bias}, std::move(out),
      [x, weight, bias, spec, kernel_mask](Graph& gr, Var self) {
        const Tensor wm = masked_weight(gr.value(weight), kernel_mask);
        Tensor dw;
        if (gr.needs_grad(weight)) dw = Tensor(wm.shape());
        conv_backward(gr.value(x), wm, gr.grad(self), spec,
                      gr.needs_grad(x) ? &gr.grad_buffer(x) : nullptr,
                      gr.needs_grad(weight) ? &dw : nullptr,
                      gr.needs_grad(bias) ? &gr.grad_buffer(bias) : nullptr);
        if (gr.needs_grad(weight)) {
          Tensor& gw = gr.grad_buffer(weight);
          const Tensor masked = masked_weight(dw, kernel_mask);
          for (std::size_t i = 0; i < gw.numel(); ++i) gw[i] += masked[i];
        }
      });
}

Var conv_transpose2d(Graph& g, Var x, Var weight, Var bias, ConvTransposeSpec spec) {
  const Tensor& xv = g.value(x);
  const Tensor& w = g.value(weight);
  const Tensor& b = g.value(bias);
  require_rank4(xv, "conv_transpose2d");
  if (w.rank() != 4 || w.dim(0) != xv.dim(1) || w.dim(2) != w.dim(3)) {
    throw ShapeError("conv_transpose2d: weight " + shape_string(w.shape()) +
                     " incompatible with input " + shape_string(xv.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != w.dim(1)) throw ShapeError("conv_transpose2d: bias shape");
  if (spec.output_padding >= spec.stride) {
    throw ShapeError("conv_transpose2d: output_padding must be smaller than stride");
  }
  const std::size_t n = xv.dim(0), ci = xv.dim(1), co = w.dim(1), k = w.dim(2);
  const std::size_t h = xv.dim(2), wd = xv.dim(3);
  if ((h - 1) * spec.stride + k + spec.output_padding < 2 * spec.padding + 1) {
    throw ShapeError("conv_transpose2d: empty output");
  }
  const std::size_t ho = (h - 1) * spec.stride + k + spec.output_padding - 2 * spec.padding;
  const std::size_t wo = (wd - 1) * spec.stride + k + spec.output_padding - 2 * spec.padding;
  const Geometry geo{co, ho, wo, k, spec.stride, spec.padding, h, wd};
  Tensor out({n, co, ho, wo});
  std::vector<double> cols(geo.rows() * geo.cols());
  CMapMat wm(w.data(), static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(geo.rows()));
  for (std::size_t i = 0; i < n; ++i) {
    CMapMat xm(xv.data() + i * ci * h * wd, static_cast<Eigen::Index>(ci),
               static_cast<Eigen::Index>(geo.cols()));
    MapMat cm(cols.data(), static_cast<Eigen::Index>(geo.rows()),
              static_cast<Eigen::Index>(geo.cols()));
    cm.noalias() = wm.transpose() * xm;
    double* o = out.data() + i * co * ho * wo;
    col2im(cols.data(), geo, o);
    for (std::size_t c = 0; c < co; ++c) {
      for (std::size_t p = 0; p < ho * wo; ++p) o[c * ho * wo + p] += b[c];
    }
  }
  return g.record(
      "conv_transpose2d", {x, weight, bias}, std::move(out),
      [x, weight, bias, geo, n, ci](Graph& gr, Var self) {
        const Tensor& xv = gr.value(x);
        const Tensor& w = gr.value(weight);
        const Tensor& dout = gr.grad(self);
        const auto rows = static_cast<Eigen::Index>(geo.rows());
        const auto ncol = static_cast<Eigen::Index>(geo.cols());
        const std::size_t co = geo.c, plane = geo.h * geo.w;
        std::vector<double> cols(geo.rows() * geo.cols());
        CMapMat wm(w.data(), static_cast<Eigen::Index>(ci), rows);
        for (std::size_t i = 0; i < n; ++i) {
          const double* d = dout.data() + i * co * plane;
          if (gr.needs_grad(bias)) {
            Tensor& db = gr.grad_buffer(bias);
            for (std::size_t c = 0; c < co; ++c) {
              double s = 0.0;
              for (std::size_t p = 0; p < plane; ++p) s += d[c * plane + p];
              db[c] += s;
            }
          }
          if (!gr.needs_grad(x) && !gr.needs_grad(weight)) continue;
          im2col(d, geo, cols.data());
          CMapMat cm(cols.data(), rows, ncol);
          if (gr.needs_grad(x)) {
            MapMat dxm(gr.grad_buffer(x).data() + i * ci * geo.cols(),
                       static_cast<Eigen::Index>(ci), ncol);
            dxm.noalias() += wm * cm;
          }
          if (gr.needs_grad(weight)) {
            CMapMat xm(xv.data() + i * ci * geo.cols(), static_cast<Eigen::Index>(ci), ncol);
            MapMat dwm(gr.grad_buffer(weight).data(), static_cast<Eigen::Index>(ci), rows);
            dwm.noalias() += xm * cm.transpose();
          }
        }
      });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  return g.record("add", {a, b}, std::move(out), [a, b](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    for (Var v : {a, b}) {
      if (!gr.needs_grad(v)) continue;
      Tensor& gv = gr.grad_buffer(v);
      for (std::size_t i = 0; i < gv.numel(); ++i) gv[i] += d[i];
    }
  });
}

Var sub(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  return g.record("sub", {a, b}, std::move(out), [a, b](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    if (gr.needs_grad(a)) {
      Tensor& ga = gr.grad_buffer(a);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += d[i];
    }
    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad_buffer(b);
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] -= d[i];
    }
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  return g.record("mul", {a, b}, std::move(out), [a, b](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    const Tensor& av = gr.value(a);
    const Tensor& bv = gr.value(b);
    if (gr.needs_grad(a)) {
      Tensor& ga = gr.grad_buffer(a);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += d[i] * bv[i];
    }
    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad_buffer(b);
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += d[i] * av[i];
    }
  });
}

Var scale(Graph& g, Var a, double s) {
  return unary(
      g, a, "scale", [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Var add_scalar(Graph& g, Var a, double s) {
  return unary(
      g, a, "add_scalar", [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var mul_constant(Graph& g, Var a, const Tensor& c) {
  const Tensor& av = g.value(a);
  require_same(av, c, "mul_constant");
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c[i];
  return g.record("mul_constant", {a}, std::move(out), [a, c](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    Tensor& ga = gr.grad_buffer(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += d[i] * c[i];
  });
}

Var leaky_relu(Graph& g, Var x, double slope) {
  return unary(
      g, x, "leaky_relu", [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Var exp(Graph& g, Var x) {
  return unary(
      g, x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var logistic_cdf(Graph& g, Var x) {
  return unary(
      g, x, "logistic_cdf", [](double v) { return sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Var clamp(Graph& g, Var x, double lo, double hi) {
  return unary(
      g, x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var lower_bound(Graph& g, Var x, double floor) {
  return unary(
      g, x, "lower_bound", [floor](double v) { return std::max(v, floor); },
      [floor](double v, double) { return v > floor ? 1.0 : 0.0; });
}

Var neg_log2(Graph& g, Var p) {
  const Tensor& pv = g.value(p);
  for (double v : pv.values()) {
    if (!(v > 0.0)) throw Error("neg_log2: non-positive probability");
  }
  return unary(
      g, p, "neg_log2", [](double v) { return -std::log2(v); },
      [](double v, double) { return -1.0 / (v * std::numbers::ln2); });
}

Var add_noise(Graph& g, Var x, const Tensor& noise) {
  const Tensor& xv = g.value(x);
  require_same(xv, noise, "add_noise");
  Tensor out = xv;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += noise[i];
  return g.record("add_noise", {x}, std::move(out), [x](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    Tensor& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += d[i];
  });
}

Var avg_pool2(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "avg_pool2");
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor out({n, c, h / 2, w / 2});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h / 2; ++y) {
        for (std::size_t xx = 0; xx < w / 2; ++xx) {
          out.at(i, ch, y, xx) =
              0.25 * (xv.at(i, ch, 2 * y, 2 * xx) + xv.at(i, ch, 2 * y, 2 * xx + 1) +
                      xv.at(i, ch, 2 * y + 1, 2 * xx) + xv.at(i, ch, 2 * y + 1, 2 * xx + 1));
        }
      }
    }
  }
  return g.record("avg_pool2", {x}, std::move(out), [x](Graph& gr, Var self) {
    const Tensor& d = gr.grad(self);
    Tensor& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < d.dim(0); ++i) {
      for (std::size_t ch = 0; ch < d.dim(1); ++ch) {
        for (std::size_t y = 0; y < d.dim(2); ++y) {
          for (std::size_t xx = 0; xx < d.dim(3); ++xx) {
            const double v = 0.25 * d.at(i, ch, y, xx);
            gx.at(i, ch, 2 * y, 2 * xx) += v;
            gx.at(i, ch, 2 * y, 2 * xx + 1) += v;
            gx.at(i, ch, 2 * y + 1, 2 * xx) += v;
            gx.at(i, ch, 2 * y + 1, 2 * xx + 1) += v;
          }
        }
      }
    }
  });
}

Var sum(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  double s = 0.0;
  for (double v : xv.values()) s += v;
  return g.record("sum", {x}, Tensor({1}, std::vector<double>{s}), [x](Graph& gr, Var self) {
    const double d = gr.grad(self)[0];
    Tensor& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += d;
  });
}

Var slice_channels(Graph& g, Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "slice_channels");
  if (begin + count > xv.dim(1)) throw ShapeError("slice_channels: range out of bounds");
  const std::size_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out({n, count, xv.dim(2), xv.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(xv.data() + (i * c + begin) * plane, count * plane,
                out.data() + i * count * plane);
  }
  return g.record("slice_channels", {x}, std::move(out),
                  [x, begin, count, n, c, plane](Graph& gr, Var self) {
                    const Tensor& d = gr.grad(self);
                    Tensor& gx = gr.grad_buffer(x);
                    for (std::size_t i = 0; i < n; ++i) {
                      const double* src = d.data() + i * count * plane;
                      double* dst = gx.data() + (i * c + begin) * plane;
                      for (std::size_t k = 0; k < count * plane; ++k) dst[k] += src[k];
                    }
                  });
}

Var concat_channels(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_rank4(av, "concat_channels");
  require_rank4(bv, "concat_channels");
  if (av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) || av.dim(3) != bv.dim(3)) {
    throw ShapeError("concat_channels: incompatible shapes " + shape_string(av.shape()) + " and " +
                     shape_string(bv.shape()));
  }
  const std::size_t n = av.dim(0), ca = av.dim(1), cb = bv.dim(1), plane = av.dim(2) * av.dim(3);
  Tensor out({n, ca + cb, av.dim(2), av.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data() + i * ca * plane, ca * plane, out.data() + i * (ca + cb) * plane);
    std::copy_n(bv.data() + i * cb * plane, cb * plane,
                out.data() + (i * (ca + cb) + ca) * plane);
  }
  return g.record("concat_channels", {a, b}, std::move(out),
                  [a, b, n, ca, cb, plane](Graph& gr, Var self) {
                    const Tensor& d = gr.grad(self);
                    for (std::size_t i = 0; i < n; ++i) {
                      const double* src = d.data() + i * (ca + cb) * plane;
                      if (gr.needs_grad(a)) {
                        double* dst = gr.grad_buffer(a).data() + i * ca * plane;
                        for (std::size_t k = 0; k < ca * plane; ++k) dst[k] += src[k];
                      }
                      if (gr.needs_grad(b)) {
                        double* dst = gr.grad_buffer(b).data() + i * cb * plane;
                        for (std::size_t k = 0; k < cb * plane; ++k) dst[k] += src[ca * plane + k];
                      }
                    }
                  });
}

Var gaussian_likelihood(Graph& g, Var y, Var mu, Var sigma, double floor) {
  const Tensor& yv = g.value(y);
  const Tensor& mv = g.value(mu);
  const Tensor& sv = g.value(sigma);
  require_same(yv, mv, "gaussian_likelihood");
  require_same(yv, sv, "gaussian_likelihood");
  Tensor out(yv.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    if (!(sv[i] > 0.0)) throw Error("gaussian_likelihood: non-positive scale");
    // Evaluate on the lower side of the mean for accuracy in the tails.
    const double d = std::abs(yv[i] - mv[i]);
    const double p = normal_cdf((0.5 - d) / sv[i]) - normal_cdf((-0.5 - d) / sv[i]);
    out[i] = std::max(p, floor);
  }
  return g.record(
      "gaussian_likelihood", {y, mu, sigma}, std::move(out),
      [y, mu, sigma, floor](Graph& gr, Var self) {
        const Tensor& yv = gr.value(y);
        const Tensor& mv = gr.value(mu);
        const Tensor& sv = gr.value(sigma);
        const Tensor& pv = gr.value(self);
        const Tensor& d = gr.grad(self);
        Tensor* gy = gr.needs_grad(y) ? &gr.grad_buffer(y) : nullptr;
        Tensor* gm = gr.needs_grad(mu) ? &gr.grad_buffer(mu) : nullptr;
        Tensor* gs = gr.needs_grad(sigma) ? &gr.grad_buffer(sigma) : nullptr;
        for (std::size_t i = 0; i < pv.numel(); ++i) {
          if (pv[i] <= floor) continue;
          const double s = sv[i];
          const double a = (yv[i] - mv[i] + 0.5) / s;
          const double b = (yv[i] - mv[i] - 0.5) / s;
          const double pa = normal_pdf(a), pb = normal_pdf(b);
          const double dy = (pa - pb) / s;
          if (gy) (*gy)[i] += d[i] * dy;
          if (gm) (*gm)[i] -= d[i] * dy;
          if (gs) (*gs)[i] -= d[i] * (a * pa - b * pb) / s;
        }
      });
}

Var logistic_likelihood(Graph& g, Var z, Var loc, Var log_scale, double floor) {
  const Tensor& zv = g.value(z);
  const Tensor& lv = g.value(loc);
  const Tensor& sv = g.value(log_scale);
  require_rank4(zv, "logistic_likelihood");
  if (lv.shape() != Shape{zv.dim(1)} || sv.shape() != lv.shape()) {
    throw ShapeError("logistic_likelihood: per-channel parameters must have shape [C]");
  }
  const std::size_t n = zv.dim(0), c = zv.dim(1), plane = zv.dim(2) * zv.dim(3);
  Tensor out(zv.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double s = std::exp(sv[ch]);
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t idx = (i * c + ch) * plane + p;
        const double d = std::abs(zv[idx] - lv[ch]);
        const double prob = sigmoid((0.5 - d) / s) - sigmoid((-0.5 - d) / s);
        out[idx] = std::max(prob, floor);
      }
    }
  }
  return g.record(
      "logistic_likelihood", {z, loc, log_scale}, std::move(out),
      [z, loc, log_scale, floor, n, c, plane](Graph& gr, Var self) {
        const Tensor& zv = gr.value(z);
        const Tensor& lv = gr.value(loc);
        const Tensor& sv = gr.value(log_scale);
        const Tensor& pv = gr.value(self);
        const Tensor& d = gr.grad(self);
        Tensor* gz = gr.needs_grad(z) ? &gr.grad_buffer(z) : nullptr;
        Tensor* gl = gr.needs_grad(loc) ? &gr.grad_buffer(loc) : nullptr;
        Tensor* gs = gr.needs_grad(log_scale) ? &gr.grad_buffer(log_scale) : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double s = std::exp(sv[ch]);
            for (std::size_t p = 0; p < plane; ++p) {
              const std::size_t idx = (i * c + ch) * plane + p;
              if (pv[idx] <= floor) continue;
              const double a = (zv[idx] - lv[ch] + 0.5) / s;
              const double b = (zv[idx] - lv[ch] - 0.5) / s;
              const double sa = sigmoid(a), sb = sigmoid(b);
              const double da = sa * (1.0 - sa), db = sb * (1.0 - sb);
              const double dz = (da - db) / s;
              if (gz) (*gz)[idx] += d[idx] * dz;
              if (gl) (*gl)[ch] -= d[idx] * dz;
              if (gs) (*gs)[ch] -= d[idx] * (a * da - b * db);
            }
          }
        }
      });
}

Var msssim(Graph& g, Var x, Var y) {
  const std::vector<double> vals = msssim_batch(g.value(x), g.value(y));
  Tensor out({vals.size()}, vals);
  return g.record("msssim", {x, y}, std::move(out), [x, y](Graph& gr, Var self) {
    msssim_batch_backward(gr.value(x), gr.value(y), gr.grad(self).values(),
                          gr.needs_grad(x) ? &gr.grad_buffer(x) : nullptr,
                          gr.needs_grad(y) ? &gr.grad_buffer(y) : nullptr);
  });
}

}  // namespace obic::ops
