#include <algorithm>
#include <cmath>

#include "npmca/datagen.hpp"
#include "npmca/errors.hpp"
#include "npmca/oracles.hpp"
#include "npmca/propagation.hpp"
#include "npmca/rng.hpp"
#include "test_util.hpp"

using namespace npmca;
using npmca::testing::expect_near;

namespace {

Tensor map1(std::size_t h, std::size_t w, double v) { return Tensor({h, w, 1}, v); }

VideoSequence small_video(std::size_t frames, std::uint64_t seed) {
  SceneConfig cfg;
  cfg.height = 16, cfg.width = 24, cfg.frames = frames;
  ObjectSpec a;
  a.cx = 7, a.cy = 8, a.size_a = 4, a.vx = 1;
  ObjectSpec b;
  b.kind = ShapeKind::Rectangle;
  b.cx = 17, b.cy = 8, b.size_a = 3, b.size_b = 4, b.color = {0, 0, 1};
  cfg.objects = {a, b};
  return generate_sequence(cfg, seed, "small");
}

}  // namespace

TEST(MaskOut, FullForegroundKeepsImage) {
  Rng rng(1);
  const Tensor img = Tensor::uniform({4, 5, 3}, rng, 0, 1);
  EXPECT_TRUE(identical(mask_out_background(img, LabelMask(4, 5, 2), 2), img));
}

TEST(MaskOut, FullBackgroundZeroes) {
  Rng rng(2);
  const Tensor img = Tensor::uniform({4, 5, 3}, rng, 0, 1);
  EXPECT_EQ(mask_out_background(img, LabelMask(4, 5, 0), 1).max_abs(), 0.0);
}

TEST(MaskOut, CheckerboardMatchesPixelLoop) {
  Rng rng(3);
  const Tensor img = Tensor::uniform({6, 7, 3}, rng, 0, 1);
  LabelMask m(6, 7);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 7; ++x) m.at(y, x) = static_cast<std::uint8_t>((x + y) % 2 == 0 ? 1 : 2);
  const Tensor out = mask_out_background(img, m, 1);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 7; ++x)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(y, x, c), m.at(y, x) == 1 ? img.at(y, x, c) : 0.0);
}

TEST(MaskOut, InvalidIdRejected) {
  EXPECT_THROW(mask_out_background(Tensor({2, 2, 3}), LabelMask(2, 2), 0), ArgumentError);
  EXPECT_THROW(mask_out_background(Tensor({2, 2, 3}), LabelMask(2, 2), 256), ArgumentError);
}

TEST(Aggregate, SymmetricSingleObject) {
  const Aggregation a = aggregate_multi_object({map1(2, 2, 0.5)});
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(a.probs.maps[0][i], 0.5, 1e-15);
    EXPECT_NEAR(a.probs.maps[1][i], 0.5, 1e-15);
    EXPECT_EQ(a.labels[i], 0);  // tie goes to the smaller id
  }
}

TEST(Aggregate, EqualOddsGiveUniform) {
  // Two objects at p with p/(1−p) equal to the background odds of (1−p)².
  double lo = 0.01, hi = 0.99;
  auto gap = [](double p) {
    const double bg = (1 - p) * (1 - p);
    return p / (1 - p) - bg / (1 - bg);
  };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0 ? hi : lo) = mid;
  }
  const Aggregation a = aggregate_multi_object({map1(1, 1, lo), map1(1, 1, lo)});
  for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(a.probs.maps[m][0], 1.0 / 3.0, 1e-9);
}

TEST(Aggregate, HandWorkedPixel) {
  const Aggregation a = aggregate_multi_object({map1(1, 1, 0.2), map1(1, 1, 0.8)});
  EXPECT_NEAR(a.probs.maps[0][0], 0.0429, 1e-4);
  EXPECT_NEAR(a.probs.maps[1][0], 0.0563, 1e-4);
  EXPECT_NEAR(a.probs.maps[2][0], 0.9008, 1e-4);
  const std::vector<double> exact = oracle::aggregate_pixel({0.2, 0.8});
  for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(a.probs.maps[m][0], exact[m], 1e-6);
  EXPECT_EQ(a.labels[0], 2);
}

TEST(Aggregate, EmptyObjectSetRejected) {
  EXPECT_THROW(aggregate_multi_object({}), ArgumentError);
  EXPECT_THROW(aggregate_multi_object({map1(2, 2, 0.1), map1(2, 3, 0.1)}), ShapeError);
}

TEST(Aggregate, DistributionAndArgmaxAgainstBruteForce) {
  Rng rng(4);
  for (std::size_t m = 1; m <= 3; ++m)
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<Tensor> maps;
      for (std::size_t k = 0; k < m; ++k) maps.push_back(Tensor::uniform({5, 5, 1}, rng, 0, 1));
      maps[0][0] = 0.0;  // exercises the clamp
      maps[0][1] = 1.0;
      const Aggregation a = aggregate_multi_object(maps);
      for (std::size_t i = 0; i < 25; ++i) {
        std::vector<double> p;
        for (const auto& t : maps) p.push_back(t[i]);
        const std::vector<double> ref = oracle::aggregate_pixel(p);
        double sum = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
          EXPECT_GE(a.probs.maps[k][i], 0.0);
          EXPECT_NEAR(a.probs.maps[k][i], ref[k], 1e-12);
          sum += a.probs.maps[k][i];
        }
        ASSERT_NEAR(sum, 1.0, 1e-9);
        const auto best = std::max_element(ref.begin(), ref.end()) - ref.begin();
        EXPECT_EQ(a.labels[i], best);
        // Object ranking is the same before and after the odds transform.
        const auto obj_p = std::max_element(p.begin(), p.end()) - p.begin();
        const auto obj_big = std::max_element(ref.begin() + 1, ref.end()) - ref.begin() - 1;
        EXPECT_EQ(std::clamp(p[obj_p], 1e-7, 1 - 1e-7), std::clamp(p[obj_big], 1e-7, 1 - 1e-7));
      }
    }
}

TEST(Aggregate, SingleObjectThresholdAtHalf) {
  Rng rng(5);
  const Tensor p = Tensor::uniform({10, 10, 1}, rng, 0, 1);
  const Aggregation a = aggregate_multi_object({p});
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(a.labels[i], p[i] > 0.5 ? 1 : 0) << p[i];
}

TEST(Infer, ScaledExtentIsMultipleOfFour) {
  for (std::size_t e : {16u, 64u, 96u})
    for (double s : {0.75, 1.0, 1.25}) {
      EXPECT_EQ(scaled_extent(e, s) % 4, 0u);
      EXPECT_NEAR(static_cast<double>(scaled_extent(e, s)), e * s, 2.0);
    }
  EXPECT_EQ(scaled_extent(64, 1.0), 64u);
  EXPECT_GE(scaled_extent(4, 0.1), 4u);
}

TEST(Infer, SingleFrameReturnsGivenMask) {
  VideoSequence v = small_video(2, 1);
  v.frames.resize(1);
  v.masks.resize(1);
  const ModelParams p = ModelParams::init({}, 1);
  const SequenceInference r = infer_sequence(v, v.masks[0], p);
  ASSERT_EQ(r.masks.size(), 1u);
  EXPECT_EQ(r.masks[0], v.masks[0]);
}

TEST(Infer, FrameCountAndFirstFramePassthrough) {
  const VideoSequence v = small_video(4, 2);
  const ModelParams p = ModelParams::init({}, 2);
  InferenceOptions o;
  o.scales = {1.0};
  const SequenceInference r = infer_sequence(v, v.masks[0], p, o);
  ASSERT_EQ(r.masks.size(), 4u);
  ASSERT_EQ(r.probs.size(), 4u);
  EXPECT_EQ(r.masks[0], v.masks[0]);
  for (const auto& s : r.probs) EXPECT_EQ(s.num_objects(), 2u);
  for (const auto& m : r.masks) EXPECT_LE(m.max_label(), 2);
}

TEST(Infer, RepeatedScaleMatchesSingleScale) {
  const VideoSequence v = small_video(3, 3);
  const ModelParams p = ModelParams::init({}, 3);
  InferenceOptions one, three;
  one.scales = {1.0};
  three.scales = {1.0, 1.0, 1.0};
  const SequenceInference a = infer_sequence(v, v.masks[0], p, one), b = infer_sequence(v, v.masks[0], p, three);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(a.masks[t], b.masks[t]);
    for (std::size_t m = 0; m < a.probs[t].maps.size(); ++m)
      EXPECT_LE(max_abs_diff(a.probs[t].maps[m], b.probs[t].maps[m]), 1e-15);
  }
}

TEST(Infer, FeatureCacheChangesNothing) {
  const VideoSequence v = small_video(4, 4);
  const ModelParams p = ModelParams::init({}, 4);
  InferenceOptions cached, fresh;
  fresh.cache_first_features = false;
  const SequenceInference a = infer_sequence(v, v.masks[0], p, cached), b = infer_sequence(v, v.masks[0], p, fresh);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(a.masks[t], b.masks[t]);
    for (std::size_t m = 0; m < a.probs[t].maps.size(); ++m) EXPECT_TRUE(identical(a.probs[t].maps[m], b.probs[t].maps[m]));
  }
}

TEST(Infer, MultiScaleRunsAndIsDeterministic) {
  const VideoSequence v = small_video(3, 5);
  const ModelParams p = ModelParams::init({}, 5);
  const SequenceInference a = infer_sequence(v, v.masks[0], p), b = infer_sequence(v, v.masks[0], p);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(a.masks[t], b.masks[t]);
  InferenceOptions ffo;
  ffo.first_frame_only = true;
  EXPECT_EQ(infer_sequence(v, v.masks[0], p, ffo).masks.size(), 3u);
}

TEST(Infer, BadInputsRejected) {
  const ModelParams p = ModelParams::init({}, 6);
  VideoSequence empty;
  EXPECT_THROW(infer_sequence(empty, LabelMask(16, 24), p), ArgumentError);
  const VideoSequence v = small_video(2, 6);
  EXPECT_THROW(infer_sequence(v, LabelMask(16, 20), p), ArgumentError);
  InferenceOptions none;
  none.scales.clear();
  EXPECT_THROW(infer_sequence(v, v.masks[0], p, none), ArgumentError);
}

TEST(OneHot, StackMatchesMask) {
  LabelMask m(2, 2);
  m[1] = 1, m[3] = 2;
  const ProbabilityStack s = one_hot_stack(m, 2);
  ASSERT_EQ(s.maps.size(), 3u);
  EXPECT_EQ(s.maps[0].vec(), (std::vector<double>{1, 0, 1, 0}));
  EXPECT_EQ(s.maps[2].vec(), (std::vector<double>{0, 0, 0, 1}));
}
