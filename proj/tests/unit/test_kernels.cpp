#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <numeric>

#include "gatedclip/kernels.hpp"
#include "gatedclip/reference_kernels.hpp"
#include "test_util.hpp"

using namespace gatedclip;
using gatedclip::testing::random_matrix;

TEST(LinearForward, ZeroWeights) {
  Matrix<float> x(2, 3, 1.5f), w(4, 3, 0.0f);
  std::vector<float> b(4, 0.0f);
  auto y = kernels::linear_forward<float>(x, w, b);
  for (float v : y.flat()) EXPECT_EQ(v, 0.0f);
}

TEST(LinearForward, IdentityPlusBias) {
  Matrix<double> x(1, 2, std::vector<double>{1, 2});
  Matrix<double> w(2, 2, std::vector<double>{1, 0, 0, 1});
  std::vector<double> b{3, -3};
  auto y = kernels::linear_forward<double>(x, w, b);
  EXPECT_EQ(y(0, 0), 4.0);
  EXPECT_EQ(y(0, 1), -1.0);
}

TEST(LinearForward, MatchesTripleLoop) {
  std::mt19937_64 rng(5);
  auto x = random_matrix<double>(3, 5, rng);
  auto w = random_matrix<double>(4, 5, rng);
  std::vector<double> b{0.1, -0.2, 0.3, -0.4};
  auto y = kernels::linear_forward<double>(x, w, b);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t o = 0; o < 4; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < 5; ++i) acc += w(o, i) * x(n, i);
      EXPECT_NEAR(y(n, o), acc, 1e-6);
    }
}

TEST(LinearForward, ShapeMismatch) {
  Matrix<float> x(2, 3), w(4, 2);
  std::vector<float> b(4);
  EXPECT_THROW(kernels::linear_forward<float>(x, w, b), ShapeError);
  Matrix<float> w2(4, 3);
  std::vector<float> b2(3);
  EXPECT_THROW(kernels::linear_forward<float>(x, w2, b2), ShapeError);
}

TEST(LinearKernels, ParallelMatchesReferenceAtModelSizes) {
  std::mt19937_64 rng(6);
  auto x = random_matrix<float>(32, 512, rng, 0.05);
  auto w = random_matrix<float>(256, 512, rng, 0.06);
  auto gy = random_matrix<float>(32, 256, rng);
  std::vector<float> b(256, 0.25f);
  auto y = kernels::linear_forward<float>(x, w, b);
  auto y_ref = reference::linear_forward<float>(x, w, b);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.flat()[i], y_ref.flat()[i], 1e-5);

  auto g = kernels::linear_backward<float>(gy, x, w);
  auto g_ref = reference::linear_backward<float>(gy, x, w);
  for (std::size_t i = 0; i < g.grad_x.size(); ++i) EXPECT_NEAR(g.grad_x.flat()[i], g_ref.grad_x.flat()[i], 1e-4);
  for (std::size_t i = 0; i < g.grad_w.size(); ++i) EXPECT_NEAR(g.grad_w.flat()[i], g_ref.grad_w.flat()[i], 1e-4);
  for (std::size_t i = 0; i < g.grad_b.size(); ++i) EXPECT_NEAR(g.grad_b[i], g_ref.grad_b[i], 1e-4);
}

TEST(LinearKernels, BitIdenticalAcrossThreadCounts) {
  std::mt19937_64 rng(7);
  auto x = random_matrix<float>(64, 300, rng);
  auto w = random_matrix<float>(200, 300, rng);
  auto gy = random_matrix<float>(64, 200, rng);
  std::vector<float> b(200, 0.5f);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto y1 = kernels::linear_forward<float>(x, w, b);
  auto g1 = kernels::linear_backward<float>(gy, x, w);
  omp_set_num_threads(4);
  auto y4 = kernels::linear_forward<float>(x, w, b);
  auto g4 = kernels::linear_backward<float>(gy, x, w);
  omp_set_num_threads(saved);
  EXPECT_EQ(y1, y4);
  EXPECT_EQ(g1.grad_x, g4.grad_x);
  EXPECT_EQ(g1.grad_w, g4.grad_w);
  EXPECT_EQ(g1.grad_b, g4.grad_b);
}

TEST(LinearBackward, ZeroUpstream) {
  std::mt19937_64 rng(8);
  auto x = random_matrix<double>(3, 4, rng);
  auto w = random_matrix<double>(2, 4, rng);
  Matrix<double> gy(3, 2, 0.0);
  auto g = kernels::linear_backward<double>(gy, x, w);
  for (double v : g.grad_x.flat()) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_w.flat()) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_b) EXPECT_EQ(v, 0.0);
}

TEST(LinearBackward, ScalarChainRule) {
  Matrix<double> x(1, 1, std::vector<double>{3.0}), w(1, 1, std::vector<double>{-2.0});
  Matrix<double> gy(1, 1, std::vector<double>{0.5});
  auto g = kernels::linear_backward<double>(gy, x, w);
  EXPECT_EQ(g.grad_w(0, 0), 0.5 * 3.0);
  EXPECT_EQ(g.grad_x(0, 0), 0.5 * -2.0);
  EXPECT_EQ(g.grad_b[0], 0.5);
}

TEST(LinearBackward, MatchesFiniteDifferences) {
  // scalar loss L = sum(c ⊙ y) so dL/dy = c
  std::mt19937_64 rng(9);
  auto x = random_matrix<double>(4, 6, rng);
  auto w = random_matrix<double>(3, 6, rng);
  auto c = random_matrix<double>(4, 3, rng);
  std::vector<double> b{0.3, -0.1, 0.7};
  auto loss = [&] {
    auto y = kernels::linear_forward<double>(x, w, b);
    return std::inner_product(y.flat().begin(), y.flat().end(), c.flat().begin(), 0.0);
  };
  auto g = kernels::linear_backward<double>(c, x, w);
  const double eps = 1e-5;
  auto check = [&](std::span<double> values, std::span<const double> analytic) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss();
      values[i] = saved - eps;
      const double down = loss();
      values[i] = saved;
      const double num = (up - down) / (2 * eps);
      EXPECT_LT(std::abs(num - analytic[i]) / std::max({std::abs(num), std::abs(analytic[i]), 1e-12}), 1e-5);
    }
  };
  check(x.flat(), g.grad_x.flat());
  check(w.flat(), g.grad_w.flat());
  check(b, g.grad_b);
}

TEST(Relu, ForwardAndBackward) {
  Matrix<double> x(1, 3, std::vector<double>{-1, 0, 2});
  auto y = kernels::relu(x);
  EXPECT_EQ(y.storage(), (std::vector<double>{0, 0, 2}));
  Matrix<double> gy(1, 3, 1.0);
  auto gx = kernels::relu_backward(gy, x);
  EXPECT_EQ(gx.storage(), (std::vector<double>{0, 0, 1}));
  Matrix<double> xn(1, 1, std::vector<double>{-5.0});
  EXPECT_EQ(kernels::relu_backward(Matrix<double>(1, 1, 3.0), xn)(0, 0), 0.0);
}

TEST(Relu, FiniteDifferencesAwayFromZero) {
  std::mt19937_64 rng(10);
  auto x = random_matrix<double>(5, 5, rng);
  for (auto& v : x.flat())
    if (std::abs(v) < 1e-3) v = 0.5;
  auto c = random_matrix<double>(5, 5, rng);
  auto gx = kernels::relu_backward(c, x);
  const double eps = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto f = [&](double xi) {
      double v = xi > 0 ? xi : 0.0;
      return c.flat()[i] * v;
    };
    const double num = (f(x.flat()[i] + eps) - f(x.flat()[i] - eps)) / (2 * eps);
    EXPECT_NEAR(num, gx.flat()[i], 1e-6);
  }
}

TEST(Dropout, EvalIsIdentity) {
  std::mt19937_64 rng(11);
  auto x = random_matrix<float>(4, 7, rng);
  auto r = kernels::dropout_forward(x, 0.5, Mode::eval, 123);
  EXPECT_EQ(r.y, x);
  for (auto k : r.mask.keep) EXPECT_EQ(k, 1);
  EXPECT_EQ(r.mask.scale, 1.0f);
}

TEST(Dropout, ZeroRateTrainIsIdentity) {
  std::mt19937_64 rng(12);
  auto x = random_matrix<float>(4, 7, rng);
  auto r = kernels::dropout_forward(x, 0.0, Mode::train, 123);
  EXPECT_EQ(r.y, x);
  for (auto k : r.mask.keep) EXPECT_EQ(k, 1);
}

TEST(Dropout, InvertedScalingIsUnbiased) {
  Matrix<double> x(1, 100000, 1.0);
  auto r = kernels::dropout_forward(x, 0.5, Mode::train, 77);
  const double mean = std::accumulate(r.y.flat().begin(), r.y.flat().end(), 0.0) / 100000.0;
  EXPECT_NEAR(mean, 1.0, 0.05);
  for (std::size_t i = 0; i < r.y.size(); ++i) {
    EXPECT_EQ(r.y.flat()[i], r.mask.keep[i] ? 2.0 : 0.0);
  }
}

TEST(Dropout, BackwardUsesMaskAndScale) {
  Matrix<double> x(2, 50, 1.0);
  auto r = kernels::dropout_forward(x, 0.2, Mode::train, 5);
  Matrix<double> gy(2, 50, 3.0);
  auto gx = kernels::dropout_backward(gy, r.mask);
  for (std::size_t i = 0; i < gx.size(); ++i) EXPECT_DOUBLE_EQ(gx.flat()[i], r.mask.keep[i] ? 3.0 / 0.8 : 0.0);
  // same key, same mask
  EXPECT_EQ(kernels::dropout_forward(x, 0.2, Mode::train, 5).mask.keep, r.mask.keep);
}

TEST(Dropout, RejectsRateOne) {
  Matrix<float> x(1, 1);
  EXPECT_THROW(kernels::dropout_forward(x, 1.0, Mode::train, 0), std::invalid_argument);
}

TEST(Sigmoid, Values) {
  EXPECT_EQ(kernels::sigmoid(0.0), 0.5);
  EXPECT_GE(kernels::sigmoid(50.0), 1.0 - 1e-20);  // 1 - 1e-20 rounds to 1.0 in double
  EXPECT_NEAR(kernels::sigmoid(1.0), 0.7310585786300049, 1e-15);
  EXPECT_GT(kernels::sigmoid(-800.0), -1e-300);
  EXPECT_TRUE(std::isfinite(kernels::sigmoid(-800.0)));
  EXPECT_EQ(kernels::sigmoid(800.0), 1.0);
  EXPECT_NEAR(kernels::sigmoid(-3.0) + kernels::sigmoid(3.0), 1.0, 1e-15);
}
