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

#include "obic/msssim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "obic/error.hpp"

namespace obic {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(std::size_t hh, std::size_t ww) : h(hh), w(ww), v(hh * ww, 0.0) {}
  double& operator()(std::size_t y, std::size_t x) { return v[y * w + x]; }
  double operator()(std::size_t y, std::size_t x) const { return v[y * w + x]; }
};

std::vector<double> gaussian_window(std::size_t size) {
  std::vector<double> g(size);
  const double c = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

std::size_t window_for(std::size_t h, std::size_t w) {
  std::size_t k = std::min<std::size_t>(11, std::min(h, w));
  if (k % 2 == 0) --k;
  return k;
}

// Separable valid filter.
Plane filter(const Plane& in, const std::vector<double>& g) {
  const std::size_t k = g.size();
  Plane tmp(in.h, in.w - k + 1);
  for (std::size_t y = 0; y < in.h; ++y) {
    for (std::size_t x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (std::size_t a = 0; a < k; ++a) s += g[a] * in(y, x + a);
      tmp(y, x) = s;
    }
  }
  Plane out(in.h - k + 1, tmp.w);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (std::size_t a = 0; a < k; ++a) s += g[a] * tmp(y + a, x);
      out(y, x) = s;
    }
  }
  return out;
}

// Adjoint of filter(); result has extent (h + k - 1) × (w + k - 1).
Plane filter_adjoint(const Plane& d, const std::vector<double>& g) {
  const std::size_t k = g.size();
  Plane tmp(d.h + k - 1, d.w);
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      const double v = d(y, x);
      for (std::size_t a = 0; a < k; ++a) tmp(y + a, x) += g[a] * v;
    }
  }
  Plane out(tmp.h, d.w + k - 1);
  for (std::size_t y = 0; y < tmp.h; ++y) {
    for (std::size_t x = 0; x < tmp.w; ++x) {
      const double v = tmp(y, x);
      for (std::size_t a = 0; a < k; ++a) out(y, x + a) += g[a] * v;
    }
  }
  return out;
}

Plane pool(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      out(y, x) = 0.25 * (in(2 * y, 2 * x) + in(2 * y, 2 * x + 1) + in(2 * y + 1, 2 * x) +
                          in(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

struct ScaleStats {
  Plane mx, my, sxx, syy, sxy;
  double cs_mean = 0.0;
  double ssim_mean = 0.0;
};

ScaleStats scale_stats(const Plane& x, const Plane& y, const std::vector<double>& g) {
  ScaleStats s;
  s.mx = filter(x, g);
  s.my = filter(y, g);
  s.sxx = filter(product(x, x), g);
  s.syy = filter(product(y, y), g);
  s.sxy = filter(product(x, y), g);
  double cs_sum = 0.0, ssim_sum = 0.0;
  for (std::size_t i = 0; i < s.mx.v.size(); ++i) {
    const double mx = s.mx.v[i], my = s.my.v[i];
    const double vx = s.sxx.v[i] - mx * mx;
    const double vy = s.syy.v[i] - my * my;
    const double cov = s.sxy.v[i] - mx * my;
    const double cs = (2.0 * cov + kC2) / (vx + vy + kC2);
    const double l = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
    cs_sum += cs;
    ssim_sum += l * cs;
  }
  const double n = static_cast<double>(s.mx.v.size());
  s.cs_mean = cs_sum / n;
  s.ssim_mean = ssim_sum / n;
  return s;
}

// Gradient of (coef · mean(cs)) or (coef · mean(l·cs)) w.r.t. x and y.
void scale_backward(const Plane& x, const Plane& y, const ScaleStats& s, bool full_ssim,
                    double coef, const std::vector<double>& g, Plane& dx, Plane& dy) {
  const std::size_t m = s.mx.v.size();
  const double inv_n = coef / static_cast<double>(m);
  Plane dmx(s.mx.h, s.mx.w), dmy = dmx, dsxx = dmx, dsyy = dmx, dsxy = dmx;
  for (std::size_t i = 0; i < m; ++i) {
    const double mx = s.mx.v[i], my = s.my.v[i];
    const double vx = s.sxx.v[i] - mx * mx;
    const double vy = s.syy.v[i] - my * my;
    const double cov = s.sxy.v[i] - mx * my;
    const double a = 2.0 * cov + kC2;
    const double b = vx + vy + kC2;
    const double cs = a / b;
    const double dcs_dsxx = -a / (b * b);
    const double dcs_dsxy = 2.0 / b;
    const double dcs_dmx = -2.0 * my / b + 2.0 * mx * a / (b * b);
    const double dcs_dmy = -2.0 * mx / b + 2.0 * my * a / (b * b);
    double fmx = dcs_dmx, fmy = dcs_dmy, fsxx = dcs_dsxx, fsyy = dcs_dsxx, fsxy = dcs_dsxy;
    if (full_ssim) {
      const double p = 2.0 * mx * my + kC1;
      const double q = mx * mx + my * my + kC1;
      const double l = p / q;
      const double dl_dmx = 2.0 * my / q - 2.0 * mx * p / (q * q);
      const double dl_dmy = 2.0 * mx / q - 2.0 * my * p / (q * q);
      fmx = l * dcs_dmx + cs * dl_dmx;
      fmy = l * dcs_dmy + cs * dl_dmy;
      fsxx *= l;
      fsyy *= l;
      fsxy *= l;
    }
    dmx.v[i] = fmx * inv_n;
    dmy.v[i] = fmy * inv_n;
    dsxx.v[i] = fsxx * inv_n;
    dsyy.v[i] = fsyy * inv_n;
    dsxy.v[i] = fsxy * inv_n;
  }
  const Plane amx = filter_adjoint(dmx, g);
  const Plane amy = filter_adjoint(dmy, g);
  const Plane asxx = filter_adjoint(dsxx, g);
  const Plane asyy = filter_adjoint(dsyy, g);
  const Plane asxy = filter_adjoint(dsxy, g);
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    dx.v[i] += amx.v[i] + 2.0 * x.v[i] * asxx.v[i] + y.v[i] * asxy.v[i];
    dy.v[i] += amy.v[i] + 2.0 * y.v[i] * asyy.v[i] + x.v[i] * asxy.v[i];
  }
}

struct Layout {
  std::size_t n, c, h, w, scales;
  std::array<double, 5> weights{};
};

Layout check_inputs(const Tensor& x, const Tensor& y) {
  if (x.rank() != 4 || x.shape() != y.shape()) {
    throw ShapeError("msssim: inputs must be equal-shape NCHW, got " + shape_string(x.shape()) +
                     " and " + shape_string(y.shape()));
  }
  Layout L{x.dim(0), x.dim(1), x.dim(2), x.dim(3), 0};
  const std::size_t md = std::min(L.h, L.w);
  if (md < kMsssimMinDim) {
    throw ShapeError("msssim: image too small (min dimension " + std::to_string(md) + " < " +
                     std::to_string(kMsssimMinDim) + ")");
  }
  L.scales = md >= kMsssimFullScaleDim ? 5 : 3;
  double total = 0.0;
  for (std::size_t i = 0; i < L.scales; ++i) total += kWeights[i];
  for (std::size_t i = 0; i < L.scales; ++i) L.weights[i] = kWeights[i] / total;
  if (L.scales == 5) L.weights = kWeights;
  return L;
}

Plane extract(const Tensor& t, const Layout& L, std::size_t n, std::size_t c) {
  Plane p(L.h, L.w);
  const double* src = t.data() + (n * L.c + c) * L.h * L.w;
  std::copy(src, src + L.h * L.w, p.v.begin());
  return p;
}

struct ChannelPass {
  std::vector<Plane> xs, ys;
  std::vector<ScaleStats> stats;
  std::vector<std::vector<double>> windows;
  std::array<double, 5> terms{};
  double value = 0.0;
};

ChannelPass channel_pass(Plane x, Plane y, const Layout& L) {
  ChannelPass cp;
  for (std::size_t s = 0; s < L.scales; ++s) {
    if (s > 0) {
      x = pool(cp.xs.back());
      y = pool(cp.ys.back());
    }
    cp.windows.push_back(gaussian_window(window_for(x.h, x.w)));
    cp.stats.push_back(scale_stats(x, y, cp.windows.back()));
    cp.xs.push_back(std::move(x));
    cp.ys.push_back(std::move(y));
  }
  double v = 1.0;
  for (std::size_t s = 0; s < L.scales; ++s) {
    const double raw = s + 1 == L.scales ? cp.stats[s].ssim_mean : cp.stats[s].cs_mean;
    cp.terms[s] = std::max(raw, 0.0);
    v *= std::pow(cp.terms[s], L.weights[s]);
  }
  cp.value = v;
  return cp;
}

}  // namespace

std::vector<double> msssim_batch(const Tensor& x, const Tensor& y) {
  const Layout L = check_inputs(x, y);
  std::vector<double> out(L.n, 0.0);
  for (std::size_t n = 0; n < L.n; ++n) {
    double acc = 0.0;
    for (std::size_t c = 0; c < L.c; ++c) {
      acc += channel_pass(extract(x, L, n, c), extract(y, L, n, c), L).value;
    }
    out[n] = acc / static_cast<double>(L.c);
  }
  return out;
}

void msssim_batch_backward(const Tensor& x, const Tensor& y, std::span<const double> upstream,
                           Tensor* dx, Tensor* dy) {
  const Layout L = check_inputs(x, y);
  if (upstream.size() != L.n) throw ShapeError("msssim: upstream size mismatch");
  for (std::size_t n = 0; n < L.n; ++n) {
    for (std::size_t c = 0; c < L.c; ++c) {
      const ChannelPass cp = channel_pass(extract(x, L, n, c), extract(y, L, n, c), L);
      const double up = upstream[n] / static_cast<double>(L.c);
      std::vector<Plane> gx, gy;
      for (std::size_t s = 0; s < L.scales; ++s) {
        gx.emplace_back(cp.xs[s].h, cp.xs[s].w);
        gy.emplace_back(cp.xs[s].h, cp.xs[s].w);
      }
      for (std::size_t s = 0; s < L.scales; ++s) {
        const double t = cp.terms[s];
        if (t <= 0.0) continue;
        const double coef = up * cp.value * L.weights[s] / t;
        scale_backward(cp.xs[s], cp.ys[s], cp.stats[s], s + 1 == L.scales, coef, cp.windows[s],
                       gx[s], gy[s]);
      }
      for (std::size_t s = L.scales - 1; s > 0; --s) {
        for (std::size_t yy = 0; yy < gx[s].h; ++yy) {
          for (std::size_t xx = 0; xx < gx[s].w; ++xx) {
            const double vx = 0.25 * gx[s](yy, xx);
            const double vy = 0.25 * gy[s](yy, xx);
            for (std::size_t a = 0; a < 2; ++a) {
              for (std::size_t b = 0; b < 2; ++b) {
                gx[s - 1](2 * yy + a, 2 * xx + b) += vx;
                gy[s - 1](2 * yy + a, 2 * xx + b) += vy;
              }
            }
          }
        }
      }
      const std::size_t off = (n * L.c + c) * L.h * L.w;
      for (std::size_t i = 0; i < L.h * L.w; ++i) {
        if (dx) (*dx)[off + i] += gx[0].v[i];
        if (dy) (*dy)[off + i] += gy[0].v[i];
      }
    }
  }
}

double msssim(const Tensor& a, const Tensor& b) {
  const Tensor x = as_batch(a);
  const Tensor y = as_batch(b);
  if (x.dim(0) != 1) throw ShapeError("msssim: expected a single image");
  return msssim_batch(x, y)[0];
}

}  // namespace obic
