#include <algorithm>
#include <cmath>
#include <filesystem>

#include "npmca/attention.hpp"
#include "npmca/debug_dump.hpp"
#include "npmca/errors.hpp"
#include "npmca/matching.hpp"
#include "npmca/ops.hpp"
#include "npmca/oracles.hpp"
#include "npmca/raster.hpp"
#include "npmca/rng.hpp"
#include "test_util.hpp"

using namespace npmca;
using npmca::testing::expect_near;

TEST(ChannelAttention, OrthonormalChannelsGiveIdentityGram) {
  Tensor f({5, 3});
  f.at(0, 0) = 1.0, f.at(2, 1) = 1.0, f.at(4, 2) = 1.0;
  expect_near(channel_gram(f), Tensor({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}), 0.0);
  const Tensor a = channel_attention_map(f);
  const double diag = std::exp(1.0) / (std::exp(1.0) + 2.0), off = 1.0 / (std::exp(1.0) + 2.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.at(i, j), i == j ? diag : off, 1e-15);
}

TEST(ChannelAttention, ConstantGramIsUniform) {
  const Tensor a = channel_attention_map(Tensor({6, 4}, 0.5));  // every Gram entry 1.5
  for (double v : a.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(ChannelAttention, MatchesGramSoftmaxLoops) {
  Rng rng(1);
  const Tensor f = Tensor::uniform({10, 4}, rng);
  Tensor gram({4, 4});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t p = 0; p < 10; ++p) gram.at(i, j) += f.at(p, i) * f.at(p, j);
  expect_near(channel_gram(f), gram, 1e-12);
  expect_near(channel_attention_map(f), oracle::softmax_columns(gram), 1e-12);
}

TEST(ChannelAttention, ColumnsStochastic) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 11, c = 1 + trial % 9;
    const Tensor a = channel_attention_map(Tensor::uniform({n, c}, rng, -3, 3));
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < c; ++i) s += a.at(i, j);
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Strengthen, IdentityAndZero) {
  Rng rng(3);
  const Tensor f = Tensor::uniform({8, 4}, rng);
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  expect_near(strengthen(f, eye), f, 0.0);
  expect_near(strengthen(Tensor({8, 4}), channel_attention_map(f)), Tensor({8, 4}), 0.0);
}

TEST(Strengthen, MatchesMatmulLoops) {
  Rng rng(4);
  const Tensor f = Tensor::uniform({8, 4}, rng), a = Tensor::uniform({4, 4}, rng);
  expect_near(strengthen(f, a), oracle::matmul(f, a), 1e-12);
  EXPECT_THROW(strengthen(f, Tensor({3, 3})), ShapeError);
}

TEST(CmForward, ZeroGammaIsExactIdentity) {
  Rng rng(5);
  const Tensor f = Tensor::uniform({3, 4, 8}, rng, -10, 10);
  EXPECT_TRUE(identical(cm_forward(f, 0.0), f));
}

TEST(CmForward, ZeroInputStaysZero) {
  for (double gamma : {0.0, 0.5, 3.0}) expect_near(cm_forward(Tensor({2, 3, 4}), gamma), Tensor({2, 3, 4}), 0.0);
}

TEST(CmForward, UnitGammaMatchesComposedLoops) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor f = Tensor::uniform({3, 5, 4}, rng);
    ASSERT_LT(max_abs_diff(cm_forward(f, 1.0), oracle::channel_attention(f, 1.0)), 1e-10);
  }
}

TEST(CmForward, GammaIsSoftplusOfRawAndStartsNearZero) {
  CmState s = CmState::init();
  EXPECT_GT(s.gamma(), 0.0);
  EXPECT_LT(s.gamma(), 1e-4);
  s.gamma_raw.value[0] = -50.0;
  EXPECT_GE(s.gamma(), 0.0);
  s.gamma_raw.value[0] = 0.0;
  EXPECT_NEAR(s.gamma(), std::log(2.0), 1e-15);
}

TEST(CmForward, GraphVersionMatchesTensorVersion) {
  Rng rng(7);
  CmState s = CmState::init(0.4);
  const Tensor f = Tensor::uniform({2, 3, 4}, rng);
  Graph g(false);
  expect_near(cm_forward(g.input(f), s).value(), cm_forward(f, s.gamma()), 1e-15);
}

TEST(DebugDump, EnergyIsChannelNorm) {
  Tensor m({1, 2, 2}, std::vector<double>{3, 4, 0, 0});
  const Tensor e = matched_energy(m);
  EXPECT_EQ(e.vec(), (std::vector<double>{5, 0}));
}

TEST(DebugDump, WritesNormalizedRasters) {
  Rng rng(8);
  const auto dir = std::filesystem::temp_directory_path() / "npmca_dump_test";
  std::filesystem::create_directories(dir);
  const Tensor s = normalize_similarity(Tensor::uniform({6, 6}, rng, -3, 3));
  dump_similarity(dir / "s.pgm", s);
  dump_matched_energy(dir / "e.pgm", Tensor::uniform({4, 5, 3}, rng));
  dump_attention_map(dir / "a.pgm", channel_attention_map(Tensor::uniform({6, 4}, rng)));
  const LabelMask img = read_pgm(dir / "a.pgm");
  EXPECT_EQ(img.height(), 4u);
  EXPECT_EQ(img.width(), 4u);
  // Largest entry maps to full intensity.
  EXPECT_EQ(*std::max_element(img.labels().begin(), img.labels().end()), 255);
  EXPECT_EQ(read_pgm(dir / "s.pgm").width(), 6u);
  EXPECT_EQ(read_pgm(dir / "e.pgm").height(), 4u);
  EXPECT_THROW(dump_attention_map(dir / "x.pgm", Tensor({2, 3})), ShapeError);
  std::filesystem::remove_all(dir);
}
