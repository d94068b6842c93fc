#include "scnn/layers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "scnn/activations.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace {

using scnn::Rng;
using scnn::Shape;
using scnn::Tensor;

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Tensor scaled(const Tensor& t, double a) {
  Tensor out = t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= a;
  return out;
}

TEST(Relu, PiecewiseCases) {
  const Tensor x({3}, {-1, 2, 0});
  const Tensor y = scnn::relu(x);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 2.0);
  EXPECT_EQ(y[2], 0.0);

  Rng rng(3);
  const Tensor neg = random_tensor(rng, {4, 4}, -5.0, -0.1);
  const Tensor zn = scnn::relu(neg);
  for (std::size_t i = 0; i < zn.size(); ++i) EXPECT_EQ(zn[i], 0.0);

  const Tensor pos = random_tensor(rng, {4, 4}, 0.1, 5.0);
  EXPECT_TRUE(scnn::bit_equal(scnn::relu(pos), pos));
}

TEST(LeakyRelu, SlopeCases) {
  const Tensor x({2}, {-2, 3});
  const Tensor y = scnn::leaky_relu(x, 0.01);
  EXPECT_NEAR(y[0], -0.02, 1e-15);
  EXPECT_EQ(y[1], 3.0);

  const Tensor z = scnn::leaky_relu(Tensor({1}, {-1.0}), 0.5);
  EXPECT_EQ(z[0], -0.5);

  EXPECT_THROW(scnn::leaky_relu(x, 0.0), scnn::config_error);
  EXPECT_THROW(scnn::leaky_relu(x, 1.0), scnn::config_error);
  EXPECT_THROW(scnn::leaky_relu(x, -0.1), scnn::config_error);
  EXPECT_THROW(scnn::leaky_relu(x, 1.5), scnn::config_error);
}

TEST(LeakyRelu, AgreesWithReluOnPositives) {
  Rng rng(17);
  const Tensor pos = random_tensor(rng, {5, 5}, 0.0, 4.0);
  for (double slope : {0.01, 0.2, 0.5, 0.99}) {
    EXPECT_TRUE(scnn::bit_equal(scnn::leaky_relu(pos, slope), scnn::relu(pos)));
  }
}

TEST(Sigmoid, CenterAndSymmetry) {
  const Tensor y = scnn::sigmoid(Tensor({1}, {0.0}));
  EXPECT_EQ(y[0], 0.5);

  Rng rng(29);
  const Tensor x = random_tensor(rng, {40}, -30.0, 30.0);
  const Tensor s = scnn::sigmoid(x);
  const Tensor sneg = scnn::sigmoid(scaled(x, -1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(sneg[i], 1.0 - s[i], 1e-12);
  }
}

TEST(Sigmoid, SaturationStaysInOpenInterval) {
  const double lo = scnn::sigmoid_scalar(-700.0);
  EXPECT_GT(lo, 0.0);
  EXPECT_LE(lo, 1e-300);
  EXPECT_FALSE(std::isnan(lo));
  // long double oracle: exp(-700) / (1 + exp(-700))
  const long double t = std::exp(-700.0L);
  EXPECT_NEAR(lo / static_cast<double>(t / (1.0L + t)), 1.0, 1e-12);

  const double hi = scnn::sigmoid_scalar(700.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_GT(hi, 0.999999);
}

TEST(Sigmoid, MonotoneOnGrid) {
  double prev = scnn::sigmoid_scalar(-20.0);
  for (double x = -19.75; x <= 20.0; x += 0.25) {
    const double cur = scnn::sigmoid_scalar(x);
    EXPECT_LT(prev, cur) << "at x = " << x;
    prev = cur;
  }
}

TEST(ActivationBackward, MasksMatchForward) {
  Rng rng(41);
  const Tensor x = random_tensor(rng, {30}, -2.0, 2.0);
  const Tensor dy = random_tensor(rng, {30}, -1.0, 1.0);

  const Tensor dr = scnn::relu_backward(x, dy);
  const Tensor dl = scnn::leaky_relu_backward(x, dy, 0.3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(dr[i], x[i] > 0.0 ? dy[i] : 0.0);
    EXPECT_EQ(dl[i], x[i] > 0.0 ? dy[i] : dy[i] * 0.3);
  }

  const Tensor y = scnn::sigmoid(x);
  const Tensor ds = scnn::sigmoid_backward(y, dy);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(ds[i], dy[i] * y[i] * (1.0 - y[i]), 1e-15);
  }
}

TEST(Conv2d, HandCases) {
  // 1x1 identity kernel passes the image through.
  Rng rng(7);
  const Tensor img = random_tensor(rng, {4, 5, 1}, 0.0, 1.0);
  const Tensor k1({1, 1, 1, 1}, {1.0});
  const Tensor out = scnn::conv2d_forward(img, k1, Tensor::zeros({1}));
  EXPECT_TRUE(scnn::bit_equal(out, img));

  const Tensor x({2, 2, 1}, {1, 2, 3, 4});
  const Tensor k({2, 2, 1, 1}, {1, 0, 0, 1});
  const Tensor dot = scnn::conv2d_forward(x, k, Tensor::zeros({1}));
  ASSERT_EQ(dot.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(dot[0], 5.0);

  const Tensor zero_in = Tensor::zeros({4, 4, 2});
  const Tensor kr = random_tensor(rng, {3, 3, 2, 3}, -1.0, 1.0);
  const Tensor bias({3}, {0.5, -1.0, 2.0});
  const Tensor cmap = scnn::conv2d_forward(zero_in, kr, bias);
  ASSERT_EQ(cmap.shape(), (Shape{2, 2, 3}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(cmap[3 * i + 0], 0.5);
    EXPECT_EQ(cmap[3 * i + 1], -1.0);
    EXPECT_EQ(cmap[3 * i + 2], 2.0);
  }
}

TEST(Conv2d, ShapeErrors) {
  const Tensor img = Tensor::zeros({3, 3, 1});
  EXPECT_THROW(
      scnn::conv2d_forward(img, Tensor::zeros({4, 4, 1, 1}), Tensor::zeros({1})),
      scnn::shape_error);
  EXPECT_THROW(
      scnn::conv2d_forward(img, Tensor::zeros({2, 2, 3, 1}), Tensor::zeros({1})),
      scnn::shape_error);
  EXPECT_THROW(
      scnn::conv2d_forward(img, Tensor::zeros({2, 2, 1, 2}), Tensor::zeros({1})),
      scnn::shape_error);
  EXPECT_THROW(
      scnn::conv2d_forward(img, Tensor::zeros({2, 3, 1, 1}), Tensor::zeros({1})),
      scnn::shape_error);
}

TEST(Conv2d, MatchesDirectSum) {
  Rng rng(19);
  const Tensor img = random_tensor(rng, {6, 7, 2}, -1.0, 1.0);
  const Tensor kern = random_tensor(rng, {3, 3, 2, 4}, -1.0, 1.0);
  const Tensor bias = random_tensor(rng, {4}, -0.5, 0.5);
  const Tensor out = scnn::conv2d_forward(img, kern, bias);
  ASSERT_EQ(out.shape(), (Shape{4, 5, 4}));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      for (std::size_t f = 0; f < 4; ++f) {
        long double acc = bias[f];
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 2; ++c)
              acc += static_cast<long double>(img.at(i + a, j + b, c)) *
                     kern.at(a, b, c, f);
        EXPECT_NEAR(out.at(i, j, f), static_cast<double>(acc), 1e-12);
      }
    }
  }
}

TEST(Conv2d, LinearInInput) {
  Rng rng(53);
  const Tensor x = random_tensor(rng, {6, 6, 2}, -1.0, 1.0);
  const Tensor y = random_tensor(rng, {6, 6, 2}, -1.0, 1.0);
  const Tensor kern = random_tensor(rng, {3, 3, 2, 4}, -1.0, 1.0);
  const Tensor zero_bias = Tensor::zeros({4});
  const double a = 0.7, b = -1.3;

  const Tensor mixed =
      scnn::conv2d_forward(scaled(x, a) + scaled(y, b), kern, zero_bias);
  const Tensor apart = scaled(scnn::conv2d_forward(x, kern, zero_bias), a) +
                       scaled(scnn::conv2d_forward(y, kern, zero_bias), b);
  ASSERT_EQ(mixed.shape(), apart.shape());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    EXPECT_NEAR(mixed[i], apart[i], 1e-9);
  }
}

TEST(Maxpool2, ForwardCases) {
  const Tensor x({2, 2, 1}, {1, 2, 3, 4});
  const Tensor y = scnn::maxpool2_forward(x, nullptr);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 4.0);

  const Tensor c({4, 6, 2}, 0.75);
  const Tensor cy = scnn::maxpool2_forward(c, nullptr);
  ASSERT_EQ(cy.shape(), (Shape{2, 3, 2}));
  for (std::size_t i = 0; i < cy.size(); ++i) EXPECT_EQ(cy[i], 0.75);

  Rng rng(61);
  const Tensor odd = random_tensor(rng, {5, 5, 3}, 0.0, 1.0);
  EXPECT_EQ(scnn::maxpool2_forward(odd, nullptr).shape(), (Shape{2, 2, 3}));

  EXPECT_THROW(scnn::maxpool2_forward(Tensor::zeros({1, 4, 1}), nullptr),
               scnn::shape_error);
  EXPECT_THROW(scnn::maxpool2_forward(Tensor::zeros({4, 1, 1}), nullptr),
               scnn::shape_error);
  EXPECT_THROW(scnn::maxpool2_forward(Tensor::zeros({4, 4}), nullptr),
               scnn::shape_error);
}

TEST(Maxpool2, BackwardRoutesToWinners) {
  // Distinct values so each window has a unique winner.
  const Tensor x({2, 4, 1}, {0.1, 0.9, 0.3, 0.2, 0.5, 0.4, 0.8, 0.6});
  std::vector<std::size_t> argmax;
  const Tensor y = scnn::maxpool2_forward(x, &argmax);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 1}));
  EXPECT_EQ(y[0], 0.9);
  EXPECT_EQ(y[1], 0.8);

  const Tensor dy({1, 2, 1}, {2.0, 3.0});
  const Tensor dx = scnn::maxpool2_backward(dy, argmax, x.shape());
  const std::vector<double> want = {0, 2, 0, 0, 0, 0, 3, 0};
  for (std::size_t i = 0; i < dx.size(); ++i) EXPECT_EQ(dx[i], want[i]);
}

TEST(Maxpool2, TiesGoToFirstInScanOrder) {
  const Tensor x({2, 2, 1}, {0.4, 0.4, 0.4, 0.4});
  std::vector<std::size_t> argmax;
  scnn::maxpool2_forward(x, &argmax);
  ASSERT_EQ(argmax.size(), 1u);
  EXPECT_EQ(argmax[0], 0u);
}

TEST(Dense, ForwardCases) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor x({2}, {3.5, -1.25});
  EXPECT_TRUE(
      scnn::bit_equal(scnn::dense_forward(x, eye, Tensor::zeros({2})), x));

  const Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3}, {0.5, -0.5, 1.0});
  const Tensor from_zero = scnn::dense_forward(Tensor::zeros({2}), w, b);
  EXPECT_TRUE(scnn::bit_equal(from_zero, b));

  const Tensor ones_w({2, 1}, {1, 1});
  const Tensor out =
      scnn::dense_forward(Tensor({2}, {1, 2}), ones_w, Tensor({1}, {0.5}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 3.5);

  EXPECT_THROW(scnn::dense_forward(Tensor({3}, 1.0), w, b), scnn::shape_error);
  EXPECT_THROW(scnn::dense_forward(x, w, Tensor({2}, 1.0)), scnn::shape_error);
}

TEST(Dense, BackwardMatchesHandGradients) {
  Rng rng(71);
  const Tensor x = random_tensor(rng, {4}, -1.0, 1.0);
  const Tensor w = random_tensor(rng, {4, 3}, -1.0, 1.0);
  const Tensor dy = random_tensor(rng, {3}, -1.0, 1.0);

  Tensor dw = Tensor::zeros({4, 3});
  Tensor db = Tensor::zeros({3});
  Tensor dx;
  scnn::dense_backward_accum(dy, x, w, dw, db, &dx);

  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_NEAR(dw.at(i, j), x[i] * dy[j], 1e-15);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(db[j], dy[j]);
  for (std::size_t i = 0; i < 4; ++i) {
    long double acc = 0.0L;
    for (std::size_t j = 0; j < 3; ++j) acc += w.at(i, j) * dy[j];
    EXPECT_NEAR(dx[i], static_cast<double>(acc), 1e-14);
  }
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
  Rng rng(83);
  Tensor img = random_tensor(rng, {5, 5, 2}, -1.0, 1.0);
  Tensor kern = random_tensor(rng, {3, 3, 2, 2}, -0.5, 0.5);
  Tensor bias = random_tensor(rng, {2}, -0.1, 0.1);
  const Tensor wsum = random_tensor(rng, {3, 3, 2}, -1.0, 1.0);

  // Scalar objective: weighted sum of the conv output.
  auto objective = [&](const Tensor& im, const Tensor& kk, const Tensor& bb) {
    const Tensor out = scnn::conv2d_forward(im, kk, bb);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * wsum[i];
    return static_cast<double>(acc);
  };

  const scnn::ConvDims d = scnn::conv_dims(img.shape(), kern.shape());
  const Tensor patches = scnn::im2col(img, d);
  Tensor dk = Tensor::zeros(kern.shape());
  Tensor db = Tensor::zeros(bias.shape());
  Tensor dimg;
  scnn::conv2d_backward_accum(wsum, patches, kern, d, dk, db, &dimg);

  const double h = 1e-6;
  auto check = [&](Tensor& target, const Tensor& grad) {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double saved = target[i];
      target[i] = saved + h;
      const double up = objective(img, kern, bias);
      target[i] = saved - h;
      const double down = objective(img, kern, bias);
      target[i] = saved;
      EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-6);
    }
  };
  check(kern, dk);
  check(bias, db);
  check(img, dimg);
}

}  // namespace
