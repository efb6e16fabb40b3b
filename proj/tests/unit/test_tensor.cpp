#include <cmath>
#include <limits>

#include "doctest.h"
#include "imgspace/errors.hpp"
#include "imgspace/tensor.hpp"

using imgspace::Tensor;

TEST_CASE("shape bookkeeping") {
  Tensor t({2, 3, 4}, 1.5);
  CHECK(t.rank() == 3);
  CHECK(t.size() == 24);
  CHECK(t.dim(1) == 3);
  CHECK(t.row_size() == 12);
  CHECK(t.row(1).size() == 12);
  CHECK(t[23] == 1.5);
  CHECK(imgspace::to_string(t.shape()) == "2x3x4");
  CHECK(imgspace::element_count({}) == 1);
}

TEST_CASE("value constructor checks the element count") {
  CHECK_NOTHROW(Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), imgspace::ConfigError);
}

TEST_CASE("reshape keeps values and rejects a different count") {
  Tensor t({2, 3}, std::vector<double>{0, 1, 2, 3, 4, 5});
  t.reshape({3, 2});
  CHECK(t.shape() == imgspace::Shape{3, 2});
  CHECK(t.row(2)[1] == 5);
  CHECK_THROWS_AS(t.reshape({4, 2}), imgspace::ConfigError);
}

TEST_CASE("rows are views") {
  Tensor t({2, 2});
  t.row(1)[0] = 7.0;
  CHECK(t[2] == 7.0);
}

TEST_CASE("finiteness and bitwise comparison") {
  Tensor a({3}, std::vector<double>{0.0, 1.0, 2.0});
  CHECK(a.all_finite());
  Tensor b = a;
  CHECK(imgspace::bitwise_equal(a, b));
  b[0] = -0.0;
  CHECK(a == b);  // numerically equal
  CHECK_FALSE(imgspace::bitwise_equal(a, b));
  b[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(b.all_finite());
  CHECK_FALSE(imgspace::bitwise_equal(a, Tensor({1, 3}, std::vector<double>{0, 1, 2})));
}
