#include <cmath>

#include "npmca/errors.hpp"
#include "npmca/matching.hpp"
#include "npmca/ops.hpp"
#include "npmca/oracles.hpp"
#include "npmca/rng.hpp"
#include "test_util.hpp"

using namespace npmca;
using npmca::testing::expect_near;
using npmca::testing::mat;

namespace {

ConvParams zero_reduction(std::size_t c) {
  ConvParams p;
  p.weight = ParamTensor(Tensor({3, 3, c, c / 4}));
  p.bias = ParamTensor(Tensor({c / 4}));
  return p;
}

Tensor loop_similarity(const Tensor& r, const Tensor& t) {
  Tensor s({r.dim(0), t.dim(0)});
  for (std::size_t i = 0; i < r.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(0); ++j)
      for (std::size_t k = 0; k < r.dim(1); ++k) s.at(i, j) += r.at(i, k) * t.at(j, k);
  return s;
}

}  // namespace

TEST(ReduceChannels, SelectorKernelCopiesChannel) {
  Rng rng(1);
  ConvParams p = zero_reduction(4);
  p.weight.value[((1 * 3 + 1) * 4 + 0) * 1 + 0] = 1.0;  // center tap, channel 0
  const Tensor f = Tensor::uniform({5, 6, 4}, rng);
  const Tensor out = reduce_channels(f, p);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_DOUBLE_EQ(out[i], f[i * 4]);
}

TEST(ReduceChannels, ZeroInputGivesBias) {
  Rng rng(2);
  ConvParams p = ConvParams::he_uniform(3, 8, 2, 1, rng);
  p.bias.value = Tensor({2}, std::vector<double>{0.5, -1.5});
  const Tensor out = reduce_channels(Tensor({3, 3, 8}), p);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(out[2 * i], 0.5);
    EXPECT_EQ(out[2 * i + 1], -1.5);
  }
}

TEST(ReduceChannels, MatchesConvLoops) {
  Rng rng(3);
  ConvParams p = ConvParams::he_uniform(3, 8, 2, 1, rng);
  p.bias.value = Tensor::uniform({2}, rng);
  const Tensor f = Tensor::uniform({6, 6, 8}, rng);
  expect_near(reduce_channels(f, p), oracle::conv2d(f, p.weight.value, p.bias.value, 1, 1), 1e-12);
}

TEST(ReduceChannels, ChannelCountMustDivideByFour) {
  Rng rng(4);
  EXPECT_THROW(NlpmmParams::init(6, rng), ConfigError);
  EXPECT_THROW(reduce_channels(Tensor({2, 2, 6}), zero_reduction(4)), ConfigError);
}

TEST(Similarity, SinglePixelIsSquaredNorm) {
  const Tensor v = mat(1, 3, {1, 2, -2});
  const Tensor s = similarity(v, v);
  EXPECT_DOUBLE_EQ(s[0], 9.0);
}

TEST(Similarity, OrthogonalFeaturesScoreZero) {
  const Tensor s = similarity(mat(2, 2, {1, 0, 0, 1}), mat(2, 2, {0, 1, 1, 0}));
  EXPECT_EQ(s.at(0, 0), 0.0);
  EXPECT_EQ(s.at(1, 1), 0.0);
}

TEST(Similarity, MatchesDotProductLoops) {
  Rng rng(5);
  const Tensor r = Tensor::uniform({12, 4}, rng), t = Tensor::uniform({12, 4}, rng);
  expect_near(similarity(r, t), loop_similarity(r, t), 1e-12);
}

TEST(Similarity, ShapeMismatchRejected) {
  EXPECT_THROW(similarity(Tensor({4, 2}), Tensor({3, 2})), ShapeError);
  EXPECT_THROW(similarity(Tensor({4, 2}), Tensor({4, 3})), ShapeError);
}

TEST(Normalize, ConstantMapIsUniform) {
  const Tensor s = normalize_similarity(Tensor({5, 3}, 2.5));
  for (double v : s.data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Normalize, ColumnShiftInvariance) {
  Rng rng(6);
  const Tensor s = Tensor::uniform({4, 3}, rng, -5, 5);
  Tensor shifted = s;
  for (std::size_t i = 0; i < 4; ++i) shifted.at(i, 2) -= 123.0;
  expect_near(normalize_similarity(s), normalize_similarity(shifted), 1e-12);
}

TEST(Normalize, ClosedForm) {
  const Tensor s = normalize_similarity(mat(2, 1, {0.0, std::log(3.0)}));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Normalize, ColumnsStochasticOnRandomInputs) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 17, c = 1 + trial % 5;
    const Tensor r = Tensor::uniform({n, c}, rng, -10, 10), t = Tensor::uniform({n, c}, rng, -10, 10);
    const Tensor s = normalize_similarity(similarity(r, t));
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_GE(s.at(i, j), 0.0);
        EXPECT_LE(s.at(i, j), 1.0);
        sum += s.at(i, j);
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(Match, SinglePointIsItself) {
  const Tensor r = mat(1, 3, {0.5, -2, 7});
  const Tensor m = match(r, Tensor({1, 1}, 1.0));
  EXPECT_EQ(m.vec(), r.vec());
}

TEST(Match, IdenticalReferencesGiveThatFeature) {
  Rng rng(8);
  const Tensor r = mat(4, 2, {1, -3, 1, -3, 1, -3, 1, -3});
  const Tensor s = normalize_similarity(Tensor::uniform({4, 4}, rng));
  const Tensor m = match(r, s);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(m.at(0, j), 1.0, 1e-15);
    EXPECT_NEAR(m.at(1, j), -3.0, 1e-15);
  }
}

TEST(Match, MatchesWeightedSumLoops) {
  Rng rng(9);
  const Tensor r = Tensor::uniform({6, 3}, rng);
  const Tensor s = normalize_similarity(Tensor::uniform({6, 6}, rng));
  const Tensor m = match(r, s);
  ASSERT_EQ(m.shape(), (Shape{3, 6}));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 6; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < 6; ++i) v += s.at(i, j) * r.at(i, k);
      EXPECT_NEAR(m.at(k, j), v, 1e-12);
    }
}

TEST(Match, UnnormalizedMapRejected) {
  Graph g;
  const Var r = g.input(Tensor({3, 2}));
  const SimilarityMap raw = similarity(r, r);
  EXPECT_THROW(match(r, raw), ArgumentError);
  EXPECT_THROW(normalize_similarity(normalize_similarity(raw)), ArgumentError);
}

TEST(Match, ConvexHullBound) {
  Rng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 13, c = 1 + trial % 4;
    const Tensor r = Tensor::uniform({n, c}, rng, -4, 4), t = Tensor::uniform({n, c}, rng, -4, 4);
    const Tensor m = match(r, normalize_similarity(similarity(r, t)));
    for (std::size_t k = 0; k < c; ++k) {
      double lo = r.at(0, k), hi = r.at(0, k);
      for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, r.at(i, k)), hi = std::max(hi, r.at(i, k));
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_GE(m.at(k, j), lo - 1e-9);
        ASSERT_LE(m.at(k, j), hi + 1e-9);
      }
    }
  }
}

TEST(Nlpmm, SinglePixelReturnsReducedReference) {
  Rng rng(11);
  NlpmmParams p = NlpmmParams::init(8, rng);
  const Tensor r = Tensor::uniform({1, 1, 8}, rng), t = Tensor::uniform({1, 1, 8}, rng);
  expect_near(nlpmm_forward(r, t, p), reduce_channels(r, p.reduce_ref), 1e-15);
}

TEST(Nlpmm, SpatiallyConstantReferenceStaysConstant) {
  Rng rng(12);
  NlpmmParams p = NlpmmParams::init(8, rng);
  // A pointwise reduction keeps a constant map constant (no border effect).
  for (ConvParams* c : {&p.reduce_ref, &p.reduce_tar}) {
    Tensor w({1, 1, 8, 2});
    for (auto& v : w.data()) v = rng.uniform(-1, 1);
    c->weight = ParamTensor(w);
    c->pad = 0;
  }
  Tensor r({3, 4, 8});
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.1 * static_cast<double>(i % 8);
  const Tensor out = nlpmm_forward(r, Tensor::uniform({3, 4, 8}, rng), p);
  for (std::size_t px = 1; px < 12; ++px)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(out[px * 2 + k], out[k], 1e-14);
}

TEST(Nlpmm, MatchesMonolithicLoops) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    NlpmmParams p = NlpmmParams::init(8, rng);
    p.reduce_ref.bias.value = Tensor::uniform({2}, rng);
    const Tensor r = Tensor::uniform({4, 5, 8}, rng), t = Tensor::uniform({4, 5, 8}, rng);
    ASSERT_LT(max_abs_diff(nlpmm_forward(r, t, p), oracle::nlpmm(r, t, p.reduce_ref, p.reduce_tar)), 1e-10);
  }
}

TEST(Nlpmm, BranchesHaveSeparateReductions) {
  Rng rng(14);
  NlpmmParams p = NlpmmParams::init(8, rng);
  EXPECT_FALSE(identical(p.reduce_ref.weight.value, p.reduce_tar.weight.value));
  NamedParams named;
  p.append_to(named, "m");
  EXPECT_EQ(named.size(), 4u);
}

TEST(Nlpmm, ShapeMismatchRejected) {
  Rng rng(15);
  NlpmmParams p = NlpmmParams::init(8, rng);
  EXPECT_THROW(nlpmm_forward(Tensor({2, 2, 8}), Tensor({2, 3, 8}), p), ShapeError);
}

TEST(Nlpmm, TraceExposesNormalizedSimilarity) {
  Rng rng(16);
  NlpmmParams p = NlpmmParams::init(8, rng);
  Graph g(false);
  const NlpmmTrace tr =
      nlpmm_forward_traced(g.input(Tensor::uniform({2, 3, 8}, rng)), g.input(Tensor::uniform({2, 3, 8}, rng)), p);
  EXPECT_EQ(tr.similarity.shape(), (Shape{6, 6}));
  EXPECT_EQ(tr.output.shape(), (Shape{2, 3, 2}));
  for (std::size_t j = 0; j < 6; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i) s += tr.similarity.value().at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}
