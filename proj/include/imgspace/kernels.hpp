#pragma once

#include <cstddef>
#include <span>

// Compute kernels behind the network layers.
//
// imgspace::kernels holds the OpenMP versions used in training. Work is split
// over output elements only; every output value is produced by exactly one
// thread with a fixed summation order, so results are bitwise independent of
// the worker count.
//
// imgspace::kernels::reference holds textbook serial loops with the same
// signatures. They exist as the oracle for the parallel versions and as the
// baseline in bench/kernel_bench.
namespace imgspace::kernels {

struct DenseGeometry {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

// Valid (unpadded) cross-correlation, NCHW input, KCHW weights.
struct ConvGeometry {
  std::size_t batch;
  std::size_t in_channels;
  std::size_t height;
  std::size_t width;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;

  std::size_t out_height() const { return (height - kernel) / stride + 1; }
  std::size_t out_width() const { return (width - kernel) / stride + 1; }
};

// Non-overlapping max pooling (stride == window); trailing rows/cols that do
// not fill a window are dropped.
struct PoolGeometry {
  std::size_t batch;
  std::size_t channels;
  std::size_t height;
  std::size_t width;
  std::size_t window;

  std::size_t out_height() const { return height / window; }
  std::size_t out_width() const { return width / window; }
};

// y[b,o] = bias[o] + sum_i w[o,i] x[b,i]
void dense_forward(const DenseGeometry& g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> bias,
                   std::span<double> y);
// dx[b,i] = sum_o dy[b,o] w[o,i]
void dense_backward_input(const DenseGeometry& g, std::span<const double> dy,
                          std::span<const double> w, std::span<double> dx);
// dw[o,i] = sum_b dy[b,o] x[b,i];  dbias[o] = sum_b dy[b,o]
void dense_backward_params(const DenseGeometry& g, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> dbias);

void conv_forward(const ConvGeometry& g, std::span<const double> x,
                  std::span<const double> w, std::span<const double> bias,
                  std::span<double> y);
void conv_backward_input(const ConvGeometry& g, std::span<const double> dy,
                         std::span<const double> w, std::span<double> dx);
void conv_backward_params(const ConvGeometry& g, std::span<const double> x,
                          std::span<const double> dy, std::span<double> dw,
                          std::span<double> dbias);

// argmax receives the flat input index of each pooled maximum (first wins).
void maxpool_forward(const PoolGeometry& g, std::span<const double> x,
                     std::span<double> y, std::span<std::size_t> argmax);
void maxpool_backward(const PoolGeometry& g, std::span<const double> dy,
                      std::span<const std::size_t> argmax,
                      std::span<double> dx);

void relu_forward(std::span<const double> x, std::span<double> y);
// Derivative at 0 is taken as 0.
void relu_backward(std::span<const double> x, std::span<const double> dy,
                   std::span<double> dx);

// Row-wise max-shifted softmax.
void softmax_rows(std::size_t rows, std::size_t cols,
                  std::span<const double> logits, std::span<double> probs);

namespace reference {

void dense_forward(const DenseGeometry& g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> bias,
                   std::span<double> y);
void dense_backward_input(const DenseGeometry& g, std::span<const double> dy,
                          std::span<const double> w, std::span<double> dx);
void dense_backward_params(const DenseGeometry& g, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> dbias);
void conv_forward(const ConvGeometry& g, std::span<const double> x,
                  std::span<const double> w, std::span<const double> bias,
                  std::span<double> y);
void conv_backward_input(const ConvGeometry& g, std::span<const double> dy,
                         std::span<const double> w, std::span<double> dx);
void conv_backward_params(const ConvGeometry& g, std::span<const double> x,
                          std::span<const double> dy, std::span<double> dw,
                          std::span<double> dbias);
void maxpool_forward(const PoolGeometry& g, std::span<const double> x,
                     std::span<double> y, std::span<std::size_t> argmax);
void maxpool_backward(const PoolGeometry& g, std::span<const double> dy,
                      std::span<const std::size_t> argmax,
                      std::span<double> dx);
void relu_forward(std::span<const double> x, std::span<double> y);
void relu_backward(std::span<const double> x, std::span<const double> dy,
                   std::span<double> dx);
void softmax_rows(std::size_t rows, std::size_t cols,
                  std::span<const double> logits, std::span<double> probs);

}  // namespace reference

}  // namespace imgspace::kernels
