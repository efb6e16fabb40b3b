#include <algorithm>
#include <cmath>
#include <cstddef>

#include "imgspace/kernels.hpp"

namespace imgspace::kernels::reference {

void dense_forward(const DenseGeometry& g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> bias,
                   std::span<double> y) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < g.in; ++i) acc += w[o * g.in + i] * x[b * g.in + i];
      y[b * g.out + o] = acc;
    }
  }
}

void dense_backward_input(const DenseGeometry& g, std::span<const double> dy,
                          std::span<const double> w, std::span<double> dx) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t i = 0; i < g.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < g.out; ++o) acc += dy[b * g.out + o] * w[o * g.in + i];
      dx[b * g.in + i] = acc;
    }
  }
}

void dense_backward_params(const DenseGeometry& g, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> dbias) {
  for (std::size_t o = 0; o < g.out; ++o) {
    double db = 0.0;
    for (std::size_t b = 0; b < g.batch; ++b) db += dy[b * g.out + o];
    dbias[o] = db;
    for (std::size_t i = 0; i < g.in; ++i) {
      double acc = 0.0;
      for (std::size_t b = 0; b < g.batch; ++b) acc += dy[b * g.out + o] * x[b * g.in + i];
      dw[o * g.in + i] = acc;
    }
  }
}

namespace {

std::size_t in_index(const ConvGeometry& g, std::size_t b, std::size_t c,
                     std::size_t y, std::size_t x) {
  return ((b * g.in_channels + c) * g.height + y) * g.width + x;
}

std::size_t out_index(const ConvGeometry& g, std::size_t b, std::size_t k,
                      std::size_t y, std::size_t x) {
  return ((b * g.out_channels + k) * g.out_height() + y) * g.out_width() + x;
}

std::size_t w_index(const ConvGeometry& g, std::size_t k, std::size_t c,
                    std::size_t ky, std::size_t kx) {
  return ((k * g.in_channels + c) * g.kernel + ky) * g.kernel + kx;
}

}  // namespace

void conv_forward(const ConvGeometry& g, std::span<const double> x,
                  std::span<const double> w, std::span<const double> bias,
                  std::span<double> y) {
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t k = 0; k < g.out_channels; ++k)
      for (std::size_t oy = 0; oy < g.out_height(); ++oy)
        for (std::size_t ox = 0; ox < g.out_width(); ++ox) {
          double acc = bias[k];
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx)
                acc += w[w_index(g, k, c, ky, kx)] *
                       x[in_index(g, b, c, oy * g.stride + ky, ox * g.stride + kx)];
          y[out_index(g, b, k, oy, ox)] = acc;
        }
}

void conv_backward_input(const ConvGeometry& g, std::span<const double> dy,
                         std::span<const double> w, std::span<double> dx) {
  for (double& v : dx) v = 0.0;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t k = 0; k < g.out_channels; ++k)
      for (std::size_t oy = 0; oy < g.out_height(); ++oy)
        for (std::size_t ox = 0; ox < g.out_width(); ++ox) {
          const double d = dy[out_index(g, b, k, oy, ox)];
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx)
                dx[in_index(g, b, c, oy * g.stride + ky, ox * g.stride + kx)] +=
                    d * w[w_index(g, k, c, ky, kx)];
        }
}

void conv_backward_params(const ConvGeometry& g, std::span<const double> x,
                          std::span<const double> dy, std::span<double> dw,
                          std::span<double> dbias) {
  for (double& v : dw) v = 0.0;
  for (double& v : dbias) v = 0.0;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t k = 0; k < g.out_channels; ++k)
      for (std::size_t oy = 0; oy < g.out_height(); ++oy)
        for (std::size_t ox = 0; ox < g.out_width(); ++ox) {
          const double d = dy[out_index(g, b, k, oy, ox)];
          dbias[k] += d;
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx)
                dw[w_index(g, k, c, ky, kx)] +=
                    d * x[in_index(g, b, c, oy * g.stride + ky, ox * g.stride + kx)];
        }
}

void maxpool_forward(const PoolGeometry& g, std::span<const double> x,
                     std::span<double> y, std::span<std::size_t> argmax) {
  std::size_t o = 0;
  for (std::size_t p = 0; p < g.batch * g.channels; ++p)
    for (std::size_t oy = 0; oy < g.out_height(); ++oy)
      for (std::size_t ox = 0; ox < g.out_width(); ++ox, ++o) {
        bool first = true;
        for (std::size_t dy = 0; dy < g.window; ++dy)
          for (std::size_t dx = 0; dx < g.window; ++dx) {
            const std::size_t idx = (p * g.height + oy * g.window + dy) * g.width +
                                    ox * g.window + dx;
            if (first || x[idx] > y[o]) {
              y[o] = x[idx];
              argmax[o] = idx;
              first = false;
            }
          }
      }
}

void maxpool_backward(const PoolGeometry&, std::span<const double> dy,
                      std::span<const std::size_t> argmax,
                      std::span<double> dx) {
  for (double& v : dx) v = 0.0;
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
}

void relu_forward(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::span<const double> x, std::span<const double> dy,
                   std::span<double> dx) {
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void softmax_rows(std::size_t rows, std::size_t cols,
                  std::span<const double> logits, std::span<double> probs) {
  for (std::size_t r = 0; r < rows; ++r) {
    double m = logits[r * cols];
    for (std::size_t c = 1; c < cols; ++c) m = std::max(m, logits[r * cols + c]);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(logits[r * cols + c] - m);
    for (std::size_t c = 0; c < cols; ++c)
      probs[r * cols + c] = std::exp(logits[r * cols + c] - m) / total;
  }
}

}  // namespace imgspace::kernels::reference
