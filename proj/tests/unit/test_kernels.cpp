#include <omp.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "doctest.h"
#include "imgspace/kernels.hpp"
#include "imgspace/rng.hpp"

namespace k = imgspace::kernels;
namespace ref = imgspace::kernels::reference;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  imgspace::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * imgspace::uniform01(rng) - 1.0;
  return v;
}

// Parallel kernels may order sums differently from the reference loops, so
// agreement is up to round-off relative to the magnitude of the terms.
void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(i);
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1.0 + std::abs(b[i])));
  }
}

bool bitwise(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Runs f with 1 and 4 threads and requires identical bytes.
void check_thread_invariance(const std::function<std::vector<double>()>& f) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  std::vector<double> one = f();
  omp_set_num_threads(4);
  std::vector<double> four = f();
  omp_set_num_threads(saved);
  CHECK(bitwise(one, four));
}

const k::DenseGeometry kDense[] = {{1, 1, 1}, {3, 7, 5}, {9, 33, 4}, {16, 130, 17}};
const k::ConvGeometry kConv[] = {
    {1, 1, 5, 5, 1, 3, 1}, {2, 3, 8, 8, 4, 5, 1}, {3, 2, 9, 7, 3, 3, 2}, {2, 3, 32, 32, 2, 5, 1}};
const k::PoolGeometry kPool[] = {{1, 1, 4, 4, 2}, {2, 3, 6, 6, 3}, {2, 2, 7, 5, 2}, {1, 4, 28, 28, 2}};

}  // namespace

TEST_CASE("dense kernels match the reference") {
  for (const auto& g : kDense) {
    auto x = random_values(g.batch * g.in, 1);
    auto w = random_values(g.out * g.in, 2);
    auto b = random_values(g.out, 3);
    auto dy = random_values(g.batch * g.out, 4);
    std::vector<double> y1(g.batch * g.out), y2(y1.size());
    k::dense_forward(g, x, w, b, y1);
    ref::dense_forward(g, x, w, b, y2);
    check_close(y1, y2);

    std::vector<double> dx1(x.size()), dx2(x.size());
    k::dense_backward_input(g, dy, w, dx1);
    ref::dense_backward_input(g, dy, w, dx2);
    check_close(dx1, dx2);

    std::vector<double> dw1(w.size()), dw2(w.size()), db1(b.size()), db2(b.size());
    k::dense_backward_params(g, x, dy, dw1, db1);
    ref::dense_backward_params(g, x, dy, dw2, db2);
    check_close(dw1, dw2);
    check_close(db1, db2);
  }
}

TEST_CASE("conv kernels match the reference") {
  for (const auto& g : kConv) {
    const std::size_t in = g.batch * g.in_channels * g.height * g.width;
    const std::size_t out = g.batch * g.out_channels * g.out_height() * g.out_width();
    auto x = random_values(in, 5);
    auto w = random_values(g.out_channels * g.in_channels * g.kernel * g.kernel, 6);
    auto b = random_values(g.out_channels, 7);
    auto dy = random_values(out, 8);
    std::vector<double> y1(out), y2(out);
    k::conv_forward(g, x, w, b, y1);
    ref::conv_forward(g, x, w, b, y2);
    check_close(y1, y2);

    std::vector<double> dx1(in), dx2(in);
    k::conv_backward_input(g, dy, w, dx1);
    ref::conv_backward_input(g, dy, w, dx2);
    check_close(dx1, dx2);

    std::vector<double> dw1(w.size()), dw2(w.size()), db1(b.size()), db2(b.size());
    k::conv_backward_params(g, x, dy, dw1, db1);
    ref::conv_backward_params(g, x, dy, dw2, db2);
    check_close(dw1, dw2);
    check_close(db1, db2);
  }
}

TEST_CASE("conv forward on a hand example") {
  // 1x3x3 input, one 2x2 kernel of ones, bias 0.5.
  k::ConvGeometry g{1, 1, 3, 3, 1, 2, 1};
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9}, w{1, 1, 1, 1}, b{0.5}, y(4);
  k::conv_forward(g, x, w, b, y);
  CHECK(y == std::vector<double>{12.5, 16.5, 24.5, 28.5});
}

TEST_CASE("maxpool kernels match the reference and route gradients to the first max") {
  for (const auto& g : kPool) {
    const std::size_t in = g.batch * g.channels * g.height * g.width;
    const std::size_t out = g.batch * g.channels * g.out_height() * g.out_width();
    auto x = random_values(in, 9);
    auto dy = random_values(out, 10);
    std::vector<double> y1(out), y2(out), dx1(in), dx2(in);
    std::vector<std::size_t> a1(out), a2(out);
    k::maxpool_forward(g, x, y1, a1);
    ref::maxpool_forward(g, x, y2, a2);
    CHECK(bitwise(y1, y2));
    CHECK(a1 == a2);
    k::maxpool_backward(g, dy, a1, dx1);
    ref::maxpool_backward(g, dy, a2, dx2);
    CHECK(bitwise(dx1, dx2));
  }
  k::PoolGeometry g{1, 1, 2, 2, 2};
  std::vector<double> x{3, 3, 1, 3}, y(1), dx(4);
  std::vector<std::size_t> arg(1);
  k::maxpool_forward(g, x, y, arg);
  CHECK(y[0] == 3);
  CHECK(arg[0] == 0);
  std::vector<double> dy{2.0};
  k::maxpool_backward(g, dy, arg, dx);
  CHECK(dx == std::vector<double>{2, 0, 0, 0});
}

TEST_CASE("relu and softmax") {
  std::vector<double> x{-1.0, 0.0, 2.0}, y(3), dy{5.0, 5.0, 5.0}, dx(3);
  k::relu_forward(x, y);
  CHECK(y == std::vector<double>{0.0, 0.0, 2.0});
  k::relu_backward(x, dy, dx);
  CHECK(dx == std::vector<double>{0.0, 0.0, 5.0});

  auto logits = random_values(6 * 11, 11);
  logits[3] = 800.0;  // overflow without the max shift
  std::vector<double> p1(logits.size()), p2(logits.size());
  k::softmax_rows(6, 11, logits, p1);
  ref::softmax_rows(6, 11, logits, p2);
  check_close(p1, p2);
  for (std::size_t r = 0; r < 6; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 11; ++c) {
      CHECK(std::isfinite(p1[r * 11 + c]));
      sum += p1[r * 11 + c];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p1[3] == doctest::Approx(1.0));
}

TEST_CASE("parallel kernels are bitwise independent of the thread count") {
  const k::DenseGeometry dg{13, 67, 9};
  auto x = random_values(dg.batch * dg.in, 12);
  auto w = random_values(dg.out * dg.in, 13);
  auto b = random_values(dg.out, 14);
  auto dy = random_values(dg.batch * dg.out, 15);
  check_thread_invariance([&] {
    std::vector<double> y(dg.batch * dg.out), dx(x.size()), dw(w.size()), db(b.size());
    k::dense_forward(dg, x, w, b, y);
    k::dense_backward_input(dg, dy, w, dx);
    k::dense_backward_params(dg, x, dy, dw, db);
    y.insert(y.end(), dx.begin(), dx.end());
    y.insert(y.end(), dw.begin(), dw.end());
    y.insert(y.end(), db.begin(), db.end());
    return y;
  });

  const k::ConvGeometry cg{3, 3, 12, 12, 5, 3, 1};
  const std::size_t in = cg.batch * cg.in_channels * cg.height * cg.width;
  const std::size_t out = cg.batch * cg.out_channels * cg.out_height() * cg.out_width();
  auto cx = random_values(in, 16);
  auto cw = random_values(cg.out_channels * cg.in_channels * cg.kernel * cg.kernel, 17);
  auto cb = random_values(cg.out_channels, 18);
  auto cdy = random_values(out, 19);
  check_thread_invariance([&] {
    std::vector<double> y(out), dx(in), dw(cw.size()), db(cb.size());
    k::conv_forward(cg, cx, cw, cb, y);
    k::conv_backward_input(cg, cdy, cw, dx);
    k::conv_backward_params(cg, cx, cdy, dw, db);
    y.insert(y.end(), dx.begin(), dx.end());
    y.insert(y.end(), dw.begin(), dw.end());
    y.insert(y.end(), db.begin(), db.end());
    return y;
  });
}
