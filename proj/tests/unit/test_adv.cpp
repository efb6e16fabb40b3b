#include <cmath>

#include "doctest.h"
#include "imgspace/adv.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/synthetic.hpp"

using namespace imgspace;
using namespace imgspace::adv;

namespace {

// Linear two-class model on `width` inputs: logit_0 = -sum x, logit_1 = +sum x.
nn::Network signed_net(std::size_t width) {
  nn::NetworkSpec spec;
  spec.input = {width};
  spec.categories = 2;
  spec.layers = {nn::LayerSpec::dense(2), nn::LayerSpec::softmax()};
  nn::Network net(spec);
  auto& w = net.parameters()[0];
  for (std::size_t i = 0; i < width; ++i) {
    w[i] = -1.0;
    w[width + i] = 1.0;
  }
  net.parameters()[1].fill(0.0);
  return net;
}

Tensor random_batch(std::size_t n, std::size_t width, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  Tensor t({n, width});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform01(rng);
  // a few exact bounds so clipping is exercised
  t[0] = 0.0;
  t[1] = 1.0;
  return t;
}

double sign(double g) { return g > 0 ? 1.0 : g < 0 ? -1.0 : 0.0; }

}  // namespace

TEST_CASE("epsilon validation") {
  CHECK_THROWS_AS((AttackConfig{-0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((AttackConfig{1.1}.validate()), ConfigError);
  CHECK_NOTHROW((AttackConfig{0.3}.validate()));
  auto net = signed_net(4);
  std::vector<std::uint32_t> y{0};
  CHECK_THROWS_AS(fgsm(net, Tensor({1, 4}, 0.5), y, AttackConfig{-1}), ConfigError);
  CHECK_THROWS_AS(fgsm(net, Tensor({1, 4}, 1.5), y, AttackConfig{0.1}), ConfigError);
}

TEST_CASE("epsilon zero is the identity") {
  auto net = signed_net(6);
  auto x = random_batch(5, 6, 1);
  std::vector<std::uint32_t> y{0, 1, 0, 1, 0};
  CHECK(bitwise_equal(fgsm(net, x, y, AttackConfig{0.0}), x));
}

TEST_CASE("positive gradients from a zero input") {
  auto net = signed_net(8);
  Tensor x({3, 8}, 0.0);
  std::vector<std::uint32_t> y{0, 0, 0};  // truth 0: d loss / d x = 2 p_1 > 0
  auto adv = fgsm(net, x, y, AttackConfig{0.1});
  for (double v : adv.values()) CHECK(v == 0.1);
}

TEST_CASE("fgsm matches the formula and respects the budget") {
  nn::Network net(nn::fast_mlp({3, 4, 4}, 5, 9, 16));
  Rng rng = make_rng(2, 0);
  for (double eps : {0.3, 0.1, 0.05, 0.01, 1e-9}) {
    auto x = random_batch(20, 48, 7);
    x.reshape({20, 3, 4, 4});
    std::vector<std::uint32_t> y;
    for (int i = 0; i < 20; ++i) y.push_back(static_cast<std::uint32_t>(uniform_index(rng, 5)));
    const Tensor g = net.input_gradient(x, y);
    const Tensor adv = fgsm(net, x, y, AttackConfig{eps});
    REQUIRE(adv.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(std::abs(adv[i] - x[i]) <= eps);
      REQUIRE(adv[i] >= 0.0);
      REQUIRE(adv[i] <= 1.0);
      if (g[i] == 0.0) {
        REQUIRE(adv[i] == x[i]);
      } else {
        const double want = std::clamp(x[i] + eps * sign(g[i]), 0.0, 1.0);
        REQUIRE(std::abs(adv[i] - want) <= 4e-16);
      }
    }
  }
}

TEST_CASE("loss does not drop on a linear model for small epsilon") {
  nn::NetworkSpec spec;
  spec.input = {10};
  spec.categories = 3;
  spec.init_seed = 4;
  spec.layers = {nn::LayerSpec::dense(3), nn::LayerSpec::softmax()};
  nn::Network net(spec);
  auto x = random_batch(30, 10, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.2 + 0.6 * x[i];  // keep away from the clip
  Rng rng = make_rng(8, 0);
  std::vector<std::uint32_t> y;
  for (int i = 0; i < 30; ++i) y.push_back(static_cast<std::uint32_t>(uniform_index(rng, 3)));
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    auto adv = fgsm(net, x, y, AttackConfig{eps});
    const double before = net.loss(x, y);
    const double after = net.loss(adv, y);
    CHECK(after >= before);
    // first-order prediction: eps * ||grad||_1 summed over the batch mean
    const Tensor g = net.input_gradient(x, y);
    double l1 = 0;
    for (double v : g.values()) l1 += std::abs(v);
    CHECK(after - before == doctest::Approx(eps * l1).epsilon(0.05));
  }
}

TEST_CASE("eval_robustness") {
  data::SurrogateSpec s;
  s.train = 10;
  s.test = 1000;
  auto test = data::make_surrogate(s).second;
  nn::Network net(nn::fast_mlp({3, 32, 32}, 10, 5, 16));
  auto r0 = eval_robustness(net, test, AttackConfig{0.0});
  CHECK(r0.legitimate == r0.adversarial);

  // an untrained network is at chance on a balanced set
  CHECK(r0.legitimate == doctest::Approx(0.1).epsilon(0.5));
  auto r1 = eval_robustness(net, test, AttackConfig{0.01});
  CHECK(r1.legitimate == r0.legitimate);
  CHECK(r1.adversarial <= r1.legitimate);

  data::LabeledDataset empty(test.dims(), test.category_names(), data::Provenance::test);
  CHECK_THROWS_AS(eval_robustness(net, empty, AttackConfig{0.1}), ConfigError);
}
