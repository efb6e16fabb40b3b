#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "imgspace/kernels.hpp"

namespace imgspace::kernels {

namespace {

using Index = std::ptrdiff_t;

// Four interleaved partial sums, combined in a fixed order. Lets the compiler
// vectorize without -ffast-math while keeping the result reproducible.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void dense_forward(const DenseGeometry& g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> bias,
                   std::span<double> y) {
  const Index batch = static_cast<Index>(g.batch);
  const Index out = static_cast<Index>(g.out);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index b = 0; b < batch; ++b) {
    for (Index o = 0; o < out; ++o) {
      y[b * out + o] = bias[o] + dot(&w[o * g.in], &x[b * g.in], g.in);
    }
  }
}

void dense_backward_input(const DenseGeometry& g, std::span<const double> dy,
                          std::span<const double> w, std::span<double> dx) {
  // Blocks of four batch rows reuse each weight row; per element the terms
  // are still added in increasing o.
  const Index blocks = static_cast<Index>((g.batch + 3) / 4);
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const std::size_t b0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t rows = std::min<std::size_t>(4, g.batch - b0);
    std::fill(&dx[b0 * g.in], &dx[b0 * g.in] + rows * g.in, 0.0);
    for (std::size_t o = 0; o < g.out; ++o) {
      const double* wr = &w[o * g.in];
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = dy[(b0 + r) * g.out + o];
        if (d != 0.0) axpy(d, wr, &dx[(b0 + r) * g.in], g.in);
      }
    }
  }
}

void dense_backward_params(const DenseGeometry& g, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> dbias) {
  // Blocks of four output rows reuse each input row; per element the terms
  // are still added in increasing b.
  const Index blocks = static_cast<Index>((g.out + 3) / 4);
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const std::size_t o0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t rows = std::min<std::size_t>(4, g.out - o0);
    std::fill(&dw[o0 * g.in], &dw[o0 * g.in] + rows * g.in, 0.0);
    double db[4] = {};
    for (std::size_t b = 0; b < g.batch; ++b) {
      const double* xr = &x[b * g.in];
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = dy[b * g.out + o0 + r];
        db[r] += d;
        if (d != 0.0) axpy(d, xr, &dw[(o0 + r) * g.in], g.in);
      }
    }
    for (std::size_t r = 0; r < rows; ++r) dbias[o0 + r] = db[r];
  }
}

void conv_forward(const ConvGeometry& g, std::span<const double> x,
                  std::span<const double> w, std::span<const double> bias,
                  std::span<double> y) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.height * g.width;
  const std::size_t kk = g.kernel * g.kernel;
  const Index batch = static_cast<Index>(g.batch);
  const Index kout = static_cast<Index>(g.out_channels);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index b = 0; b < batch; ++b) {
    for (Index k = 0; k < kout; ++k) {
      double* out = &y[(b * g.out_channels + k) * oh * ow];
      std::fill(out, out + oh * ow, bias[k]);
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* in = &x[(b * g.in_channels + c) * plane];
        const double* wk = &w[(k * g.in_channels + c) * kk];
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const double wv = wk[ky * g.kernel + kx];
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const double* src = in + (oy * g.stride + ky) * g.width + kx;
              double* dst = out + oy * ow;
              if (g.stride == 1) {
                axpy(wv, src, dst, ow);
              } else {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  dst[ox] += wv * src[ox * g.stride];
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward_input(const ConvGeometry& g, std::span<const double> dy,
                         std::span<const double> w, std::span<double> dx) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.height * g.width;
  const std::size_t kk = g.kernel * g.kernel;
  const Index batch = static_cast<Index>(g.batch);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < batch; ++b) {
    double* grad_in = &dx[b * g.in_channels * plane];
    std::fill(grad_in, grad_in + g.in_channels * plane, 0.0);
    for (std::size_t k = 0; k < g.out_channels; ++k) {
      const double* gout = &dy[(b * g.out_channels + k) * oh * ow];
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        double* gin = grad_in + c * plane;
        const double* wk = &w[(k * g.in_channels + c) * kk];
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const double wv = wk[ky * g.kernel + kx];
            for (std::size_t oy = 0; oy < oh; ++oy) {
              double* dst = gin + (oy * g.stride + ky) * g.width + kx;
              const double* src = gout + oy * ow;
              if (g.stride == 1) {
                axpy(wv, src, dst, ow);
              } else {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  dst[ox * g.stride] += wv * src[ox];
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward_params(const ConvGeometry& g, std::span<const double> x,
                          std::span<const double> dy, std::span<double> dw,
                          std::span<double> dbias) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.height * g.width;
  const std::size_t kk = g.kernel * g.kernel;
  const Index kout = static_cast<Index>(g.out_channels);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < kout; ++k) {
    double db = 0.0;
    double* wk_all = &dw[k * g.in_channels * kk];
    std::fill(wk_all, wk_all + g.in_channels * kk, 0.0);
    for (std::size_t b = 0; b < g.batch; ++b) {
      const double* gout = &dy[(b * g.out_channels + k) * oh * ow];
      for (std::size_t i = 0; i < oh * ow; ++i) db += gout[i];
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* in = &x[(b * g.in_channels + c) * plane];
        double* wk = wk_all + c * kk;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            double acc = 0.0;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const double* src = in + (oy * g.stride + ky) * g.width + kx;
              const double* go = gout + oy * ow;
              if (g.stride == 1) {
                acc += dot(go, src, ow);
              } else {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  acc += go[ox] * src[ox * g.stride];
                }
              }
            }
            wk[ky * g.kernel + kx] += acc;
          }
        }
      }
    }
    dbias[k] = db;
  }
}

void maxpool_forward(const PoolGeometry& g, std::span<const double> x,
                     std::span<double> y, std::span<std::size_t> argmax) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.height * g.width;
  const Index planes = static_cast<Index>(g.batch * g.channels);
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    const std::size_t base = static_cast<std::size_t>(p) * plane;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = base + oy * g.window * g.width + ox * g.window;
        double best_v = x[best];
        for (std::size_t dy = 0; dy < g.window; ++dy) {
          for (std::size_t dx = 0; dx < g.window; ++dx) {
            const std::size_t idx =
                base + (oy * g.window + dy) * g.width + ox * g.window + dx;
            if (x[idx] > best_v) {
              best_v = x[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = static_cast<std::size_t>(p) * oh * ow + oy * ow + ox;
        y[o] = best_v;
        argmax[o] = best;
      }
    }
  }
}

void maxpool_backward(const PoolGeometry& g, std::span<const double> dy,
                      std::span<const std::size_t> argmax,
                      std::span<double> dx) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.height * g.width;
  const Index planes = static_cast<Index>(g.batch * g.channels);
  // Windows do not overlap, so each input cell receives at most one value
  // and planes are independent.
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    double* gin = &dx[p * plane];
    std::fill(gin, gin + plane, 0.0);
    for (std::size_t o = p * oh * ow; o < (p + 1) * oh * ow; ++o) {
      dx[argmax[o]] += dy[o];
    }
  }
}

void relu_forward(std::span<const double> x, std::span<double> y) {
  const Index n = static_cast<Index>(x.size());
#pragma omp parallel for simd schedule(static)
  for (Index i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::span<const double> x, std::span<const double> dy,
                   std::span<double> dx) {
  const Index n = static_cast<Index>(x.size());
#pragma omp parallel for simd schedule(static)
  for (Index i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void softmax_rows(std::size_t rows, std::size_t cols,
                  std::span<const double> logits, std::span<double> probs) {
  const Index n = static_cast<Index>(rows);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; ++r) {
    const double* z = &logits[r * cols];
    double* p = &probs[r * cols];
    const double m = *std::max_element(z, z + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(z[c] - m);
      total += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= total;
  }
}

}  // namespace imgspace::kernels
