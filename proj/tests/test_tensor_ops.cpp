#include <cmath>

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"
#include "npmca/oracles.hpp"
#include "npmca/rng.hpp"
#include "test_util.hpp"

using namespace npmca;
using npmca::testing::expect_near;
using npmca::testing::mat;

TEST(Tensor, DataLengthMatchesShape) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, ReshapeKeepsData) {
  Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.at(2, 1), 6.0);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Rng, DeterministicStreams) {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(Rng, UniformIntStaysInRange) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.uniform_int(-3, 4);
    EXPECT_GE(v, -3);
    EXPECT_LE(v, 4);
  }
}

TEST(Matmul, IdentityLeavesMatrix) {
  const Tensor b = mat(2, 2, {5, 6, 7, 8});
  expect_near(ops::matmul(mat(2, 2, {1, 0, 0, 1}), b), b, 0.0);
}

TEST(Matmul, SmallProduct) {
  expect_near(ops::matmul(mat(2, 2, {1, 2, 3, 4}), mat(2, 2, {5, 6, 7, 8})), mat(2, 2, {19, 22, 43, 50}), 0.0);
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(3);
  const Tensor a = Tensor::uniform({7, 3}, rng), b = Tensor::uniform({3, 5}, rng);
  expect_near(ops::matmul(a, b), oracle::matmul(a, b), 1e-12);
  expect_near(ops::matmul_tn(ops::transpose(a), b), oracle::matmul(a, b), 1e-12);
  expect_near(ops::matmul_nt(a, ops::transpose(b)), oracle::matmul(a, b), 1e-12);
}

TEST(Matmul, DimensionMismatchNamesShapes) {
  try {
    ops::matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
}

TEST(Softmax, ZeroColumnIsUniform) {
  const Tensor s = ops::softmax_columns(Tensor({4, 1}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s[i], 0.25);
}

TEST(Softmax, ClosedFormColumn) {
  const Tensor s = ops::softmax_columns(mat(2, 1, {0.0, std::log(3.0)}));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariant) {
  Rng rng(4);
  Tensor m = Tensor::uniform({5, 3}, rng, -3, 3);
  Tensor shifted = m;
  for (std::size_t i = 0; i < 5; ++i) shifted.at(i, 1) += 17.0;
  expect_near(ops::softmax_columns(m), ops::softmax_columns(shifted), 1e-12);
}

TEST(Softmax, HugeInputsStayStochastic) {
  const Tensor s = ops::softmax_columns(mat(3, 1, {1000.0, 999.0, -1000.0}));
  EXPECT_TRUE(s.all_finite());
  EXPECT_NEAR(s[0] + s[1] + s[2], 1.0, 1e-12);
}

TEST(Softmax, NanInputRaises) {
  EXPECT_THROW(ops::softmax_columns(mat(2, 1, {0.0, std::nan("")})), NumericError);
}

TEST(Conv2d, PointwiseIdentity) {
  Rng rng(5);
  const Tensor x = Tensor::uniform({4, 5, 1}, rng);
  expect_near(ops::conv2d(x, Tensor({1, 1, 1, 1}, 1.0), Tensor({1}), 1, 0), x, 0.0);
}

TEST(Conv2d, CountsTapsUnderZeroPadding) {
  const Tensor y = ops::conv2d(Tensor({4, 4, 1}, 5.0), Tensor({3, 3, 1, 1}, 1.0), Tensor({1}), 1, 1);
  EXPECT_DOUBLE_EQ(y.at(1, 1, 0), 45.0);
  EXPECT_DOUBLE_EQ(y.at(2, 2, 0), 45.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0), 20.0);
  EXPECT_DOUBLE_EQ(y.at(3, 3, 0), 20.0);
  EXPECT_DOUBLE_EQ(y.at(0, 1, 0), 30.0);
}

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(6);
  const Tensor x = Tensor::uniform({8, 8, 3}, rng), w = Tensor::uniform({3, 3, 3, 4}, rng);
  const Tensor b = Tensor::uniform({4}, rng);
  expect_near(ops::conv2d(x, w, b, 1, 1), oracle::conv2d(x, w, b, 1, 1), 1e-12);
  const Tensor x2 = Tensor::uniform({9, 7, 3}, rng);
  expect_near(ops::conv2d(x2, w, b, 2, 1), oracle::conv2d(x2, w, b, 2, 1), 1e-12);
}

TEST(Conv2d, NonIntegralOutputRejected) {
  EXPECT_THROW(ops::conv2d(Tensor({8, 8, 1}), Tensor({3, 3, 1, 1}), Tensor({1}), 2, 1), ShapeError);
  EXPECT_THROW(ops::conv2d(Tensor({8, 8, 2}), Tensor({3, 3, 1, 1}), Tensor({1}), 1, 1), ShapeError);
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(7);
  const Tensor x = Tensor::uniform({5, 6, 2}, rng);
  expect_near(ops::bilinear_resize(x, 5, 6), x, 0.0);
}

TEST(Resize, ConstantStaysConstant) {
  const Tensor y = ops::bilinear_resize(Tensor({3, 4, 2}, 0.7), 11, 5);
  for (double v : y.data()) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(Resize, HalfPixelRow) {
  const Tensor y = ops::bilinear_resize(Tensor({1, 2, 1}, std::vector<double>{0, 1}), 1, 4);
  EXPECT_NEAR(y[0], 0.0, 1e-15);
  EXPECT_NEAR(y[1], 0.25, 1e-15);
  EXPECT_NEAR(y[2], 0.75, 1e-15);
  EXPECT_NEAR(y[3], 1.0, 1e-15);
}

TEST(Resize, MatchesTentOracle) {
  Rng rng(8);
  const Tensor x = Tensor::uniform({6, 8, 3}, rng);
  expect_near(ops::bilinear_resize(x, 3, 4), oracle::bilinear_resize(x, 3, 4), 1e-12);
  expect_near(ops::bilinear_resize(x, 3, 4), oracle::avg_pool2(x), 1e-12);
  expect_near(ops::bilinear_resize(x, 13, 5), oracle::bilinear_resize(x, 13, 5), 1e-12);
}

TEST(Elementwise, Definitions) {
  const Tensor r = ops::relu(Tensor({3}, std::vector<double>{-1, 0, 2}));
  EXPECT_EQ(r.vec(), (std::vector<double>{0, 0, 2}));
  EXPECT_DOUBLE_EQ(ops::sigmoid(0.0), 0.5);
  Rng rng(9);
  const Tensor x = Tensor::uniform({3, 2}, rng);
  expect_near(ops::add(x, Tensor({3, 2})), x, 0.0);
  expect_near(ops::scale(x, 2.0), ops::add(x, x), 0.0);
  EXPECT_THROW(ops::add(Tensor({3, 2}), Tensor({2, 3})), ShapeError);
  EXPECT_THROW(ops::mul(Tensor({3}), Tensor({4})), ShapeError);
}

TEST(Elementwise, SoftplusIsStable) {
  EXPECT_NEAR(ops::softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(ops::softplus(800.0), 800.0);
  EXPECT_GT(ops::softplus(-800.0), -1e-300);
  EXPECT_TRUE(std::isfinite(ops::softplus(-800.0)));
}

TEST(Elementwise, FiniteOnFiniteInputs) {
  Rng rng(10);
  const Tensor x = Tensor::uniform({50}, rng, -900, 900);
  EXPECT_TRUE(ops::sigmoid(x).all_finite());
  EXPECT_TRUE(ops::relu(x).all_finite());
}

TEST(Channels, ConcatThenSliceRoundTrips) {
  Rng rng(11);
  const Tensor a = Tensor::uniform({2, 3, 2}, rng), b = Tensor::uniform({2, 3, 3}, rng);
  const Tensor c = ops::concat_channels(a, b);
  expect_near(ops::slice_channels(c, 0, 2), a, 0.0);
  expect_near(ops::slice_channels(c, 2, 5), b, 0.0);
}
