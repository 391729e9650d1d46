// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

// Pure dense operations and their vector-Jacobian products. The tape in
// tape.hpp records these; tests call them directly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "omama/error.hpp"
#include "omama/tensor.hpp"

namespace omama::ops {

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * b(p, j);
    }
  }
  return out;
}

inline Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

struct MatmulGrads {
  Tensor da;
  Tensor db;
};

/// d(a) = g b^T, d(b) = a^T g.
inline MatmulGrads matmul_vjp(const Tensor& a, const Tensor& b, const Tensor& g) {
  return {matmul(g, transpose(b)), matmul(transpose(a), g)};
}

/// Row-wise softmax with per-row max subtraction.
inline Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  if (x.cols() == 0) throw DimensionError("softmax_rows: rows must be non-empty");
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.row_span(i);
    auto out = y.row_span(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      z += out[j];
    }
    for (double& v : out) v /= z;
  }
  return y;
}

/// dx = y * (g - sum(g * y)) per row, given the forward output y.
inline Tensor softmax_rows_vjp(const Tensor& y, const Tensor& g) {
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const auto yr = y.row_span(i);
    const auto gr = g.row_span(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += gr[j] * yr[j];
    auto out = dx.row_span(i);
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
  }
  return dx;
}

inline void check_layer_norm_args(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw DimensionError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match width of " + shape_str(x.shape()));
  }
  if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be positive");
}

/// Per row: (x - mean) / sqrt(var + eps) * gamma + beta, population variance.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check_layer_norm_args(x, gamma, beta, eps);
  const std::size_t n = x.cols();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.row_span(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    auto out = y.row_span(i);
    for (std::size_t j = 0; j < n; ++j) out[j] = (in[j] - mean) * inv * gamma[j] + beta[j];
  }
  return y;
}

struct LayerNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};

inline LayerNormGrads layer_norm_vjp(const Tensor& x, const Tensor& gamma, double eps, const Tensor& g) {
  const std::size_t n = x.cols();
  const double nn = static_cast<double>(n);
  LayerNormGrads out{Tensor(x.shape()), Tensor(gamma.shape()), Tensor(gamma.shape())};
  std::vector<double> xhat(n), dxhat(n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.row_span(i);
    const auto gr = g.row_span(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= nn;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= nn;
    const double inv = 1.0 / std::sqrt(var + eps);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      xhat[j] = (in[j] - mean) * inv;
      dxhat[j] = gr[j] * gamma[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat[j];
      out.dgamma[j] += gr[j] * xhat[j];
      out.dbeta[j] += gr[j];
    }
    mean_dxhat /= nn;
    mean_dxhat_xhat /= nn;
    auto dx = out.dx.row_span(i);
    for (std::size_t j = 0; j < n; ++j) dx[j] = inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
  }
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

inline Tensor relu_vjp(const Tensor& x, const Tensor& g) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
  return dx;
}

/// Bilinear resize of an h x w x d map by an integer factor.
///
/// Half-pixel convention (align_corners = false): output pixel Y samples the
/// source at (Y + 0.5) / factor - 0.5, clamped to the border.
inline Tensor bilinear_upsample(const Tensor& x, int factor) {
  require_rank(x, 3, "bilinear_upsample");
  if (factor < 1) throw ParameterError("bilinear_upsample: factor must be >= 1, got " + std::to_string(factor));
  if (factor == 1) return x;
  const std::size_t h = x.dim(0), w = x.dim(1), d = x.dim(2);
  const auto f = static_cast<std::size_t>(factor);
  Tensor out({h * f, w * f, d});

  auto axis = [f](std::size_t dst, std::size_t len, std::size_t& i0, std::size_t& i1, double& t) {
    double src = (static_cast<double>(dst) + 0.5) / static_cast<double>(f) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(len - 1));
    i0 = static_cast<std::size_t>(std::floor(src));
    i1 = std::min(i0 + 1, len - 1);
    t = src - static_cast<double>(i0);
  };

  for (std::size_t yy = 0; yy < h * f; ++yy) {
    std::size_t y0, y1;
    double ty;
    axis(yy, h, y0, y1, ty);
    for (std::size_t xx = 0; xx < w * f; ++xx) {
      std::size_t x0, x1;
      double tx;
      axis(xx, w, x0, x1, tx);
      for (std::size_t c = 0; c < d; ++c) {
        const double top = (1.0 - tx) * x(y0, x0, c) + tx * x(y0, x1, c);
        const double bot = (1.0 - tx) * x(y1, x0, c) + tx * x(y1, x1, c);
        out(yy, xx, c) = (1.0 - ty) * top + ty * bot;
      }
    }
  }
  return out;
}

/// Flattens an h x w x d map into (h*w) x d tokens, row-major over pixels.
inline Tensor flatten_tokens(const Tensor& map) {
  require_rank(map, 3, "flatten_tokens");
  return map.reshaped({map.dim(0) * map.dim(1), map.dim(2)});
}

}  // namespace omama::ops
