#include <filesystem>

#include "npmca/errors.hpp"
#include "npmca/model.hpp"
#include "npmca/ops.hpp"
#include "npmca/oracles.hpp"
#include "npmca/raster.hpp"
#include "npmca/rng.hpp"
#include "test_util.hpp"

using namespace npmca;
using npmca::testing::expect_near;

namespace {

// Random biases and a non-trivial γ so every path carries signal.
ModelParams busy_model(ModelConfig cfg, std::uint64_t seed) {
  ModelParams p = ModelParams::init(cfg, seed);
  Rng rng(seed + 100);
  for (auto& [name, t] : p.named_parameters())
    if (name.ends_with(".bias"))
      for (auto& v : t->value.data()) v = rng.uniform(-0.1, 0.1);
  p.cm_first.gamma_raw.value[0] = 0.2;
  p.cm_prev.gamma_raw.value[0] = -0.3;
  return p;
}

struct Inputs {
  Tensor first, prev, cur, prob;
};

Inputs random_inputs(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  return {Tensor::uniform({h, w, 3}, rng, 0, 1), Tensor::uniform({h, w, 3}, rng, 0, 1),
          Tensor::uniform({h, w, 3}, rng, 0, 1), Tensor::uniform({h, w, 1}, rng, 0, 1)};
}

Tensor eval(const std::function<Var(Graph&)>& f) {
  Graph g(false);
  return f(g).value();
}

}  // namespace

TEST(Model, ParameterLayout) {
  ModelParams p = ModelParams::init({}, 1);
  const auto named = p.named_parameters();
  EXPECT_EQ(named.size(), 30u);
  EXPECT_EQ(p.parameter_count(), 109667u);
  // One shared reference encoder, one target encoder taking 4 channels.
  EXPECT_EQ(p.ref_encoder.stage1.in_channels(), 3u);
  EXPECT_EQ(p.tar_encoder.stage1.in_channels(), 4u);
  EXPECT_FALSE(identical(p.nlpmm_first.reduce_ref.weight.value, p.nlpmm_prev.reduce_ref.weight.value));
}

TEST(Model, InitIsSeedDeterministic) {
  ModelParams a = ModelParams::init({}, 5), b = ModelParams::init({}, 5), c = ModelParams::init({}, 6);
  const auto na = a.named_parameters(), nb = b.named_parameters(), nc = c.named_parameters();
  for (std::size_t i = 0; i < na.size(); ++i) EXPECT_TRUE(identical(na[i].second->value, nb[i].second->value));
  EXPECT_FALSE(identical(na[0].second->value, nc[0].second->value));
}

TEST(EncodeReference, ZeroImageIsBiasDrivenAndRepeatable) {
  ModelParams p = busy_model({}, 2);
  const Tensor z({16, 24, 3});
  const Tensor a = eval([&](Graph& g) { return encode_reference(g.constant(z), p); });
  const Tensor b = eval([&](Graph& g) { return encode_reference(g.constant(z), p); });
  EXPECT_TRUE(identical(a, b));
  EXPECT_EQ(a.shape(), (Shape{4, 6, 64}));
  expect_near(a, oracle::encode(z, p.ref_encoder).features, 1e-12);
}

TEST(EncodeReference, MatchesLayerOracle) {
  ModelParams p = busy_model({}, 3);
  Rng rng(3);
  const Tensor x = Tensor::uniform({16, 20, 3}, rng, 0, 1);
  expect_near(eval([&](Graph& g) { return encode_reference(g.constant(x), p); }),
              oracle::encode(x, p.ref_encoder).features, 1e-12);
}

TEST(EncodeReference, SizeMustDivideByFour) {
  ModelParams p = ModelParams::init({}, 4);
  EXPECT_THROW(eval([&](Graph& g) { return encode_reference(g.constant(Tensor({18, 24, 3})), p); }), ShapeError);
  EXPECT_THROW(eval([&](Graph& g) { return encode_reference(g.constant(Tensor({16, 24, 4})), p); }), ShapeError);
}

TEST(EncodeTarget, MaskChannelIsLive) {
  ModelParams p = busy_model({}, 5);
  Rng rng(5);
  const Tensor x = Tensor::uniform({16, 16, 3}, rng, 0, 1);
  auto run = [&](double fill) {
    Graph g(false);
    return encode_target(g.constant(x), g.constant(Tensor({16, 16, 1}, fill)), p).features.value();
  };
  EXPECT_FALSE(identical(run(0.0), run(1.0)));
  EXPECT_TRUE(identical(run(0.3), run(0.3)));
}

TEST(EncodeTarget, MatchesLayerOracleWithSkips) {
  ModelParams p = busy_model({}, 6);
  Rng rng(6);
  const Tensor x = Tensor::uniform({16, 24, 3}, rng, 0, 1), m = Tensor::uniform({16, 24, 1}, rng, 0, 1);
  Graph g(false);
  const TargetEncoding enc = encode_target(g.constant(x), g.constant(m), p);
  const oracle::EncoderOutputs ref = oracle::encode(ops::concat_channels(x, m), p.tar_encoder);
  expect_near(enc.features.value(), ref.features, 1e-12);
  expect_near(enc.skips.s1.value(), ref.s1, 1e-12);
  expect_near(enc.skips.s2.value(), ref.s2, 1e-12);
  EXPECT_EQ(ref.s1.shape(), (Shape{8, 12, 16}));
  EXPECT_EQ(ref.s2.shape(), (Shape{4, 6, 32}));
}

TEST(EncodeTarget, MaskSizeMismatchRejected) {
  ModelParams p = ModelParams::init({}, 7);
  Graph g(false);
  EXPECT_THROW(encode_target(g.constant(Tensor({16, 16, 3})), g.constant(Tensor({16, 12, 1})), p), ShapeError);
}

TEST(Fuse, ZeroInputsGiveBiasMap) {
  ModelParams p = busy_model({}, 8);
  const Tensor out = eval([&](Graph& g) {
    return fuse(g.constant(Tensor({3, 4, 16})), g.constant(Tensor({3, 4, 16})), p.fusion);
  });
  for (std::size_t px = 0; px < 12; ++px)
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(out[px * 16 + k], p.fusion.bias.value[k]);
}

TEST(Fuse, OrderSensitiveAndMatchesConvOracle) {
  ModelParams p = busy_model({}, 9);
  Rng rng(9);
  const Tensor a = Tensor::uniform({3, 4, 16}, rng), b = Tensor::uniform({3, 4, 16}, rng);
  const Tensor ab = eval([&](Graph& g) { return fuse(g.constant(a), g.constant(b), p.fusion); });
  const Tensor ba = eval([&](Graph& g) { return fuse(g.constant(b), g.constant(a), p.fusion); });
  EXPECT_GT(max_abs_diff(ab, ba), 1e-6);
  expect_near(ab, oracle::conv2d(ops::concat_channels(a, b), p.fusion.weight.value, p.fusion.bias.value, 1, 1),
              1e-12);
  EXPECT_THROW(eval([&](Graph& g) { return fuse(g.constant(a), g.constant(Tensor({3, 3, 16})), p.fusion); }),
               ShapeError);
}

TEST(Decode, OutputMatchesImageSizeAndOracle) {
  ModelParams p = busy_model({}, 10);
  Rng rng(10);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 24}, {32, 12}}) {
    const Tensor fused = Tensor::uniform({h / 4, w / 4, 16}, rng);
    const Tensor s1 = Tensor::uniform({h / 2, w / 2, 16}, rng), s2 = Tensor::uniform({h / 4, w / 4, 32}, rng);
    auto run = [&] {
      Graph g(false);
      return decode(g.constant(fused), {g.constant(s1), g.constant(s2)}, p.decoder, h, w).value();
    };
    const Tensor logits = run();
    EXPECT_EQ(logits.shape(), (Shape{h, w, 1}));
    EXPECT_TRUE(identical(logits, run()));
    expect_near(logits, oracle::decode(fused, s1, s2, p.decoder, h, w), 1e-12);
  }
}

TEST(Decode, InconsistentSkipsRejected) {
  ModelParams p = ModelParams::init({}, 11);
  Graph g(false);
  EXPECT_THROW(decode(g.constant(Tensor({4, 4, 16})), {g.constant(Tensor({6, 8, 16})), g.constant(Tensor({4, 4, 32}))},
                      p.decoder, 16, 16),
               ShapeError);
}

TEST(Forward, ProbabilitiesStrictlyInside) {
  ModelParams p = busy_model({}, 12);
  const Inputs in = random_inputs(16, 16, 12);
  const Tensor out = forward_single_object(in.first, in.prev, in.cur, in.prob, p);
  EXPECT_EQ(out.shape(), (Shape{16, 16, 1}));
  for (double v : out.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Forward, ReferenceBranchesAreDistinct) {
  ModelParams p = busy_model({}, 13);
  const Inputs in = random_inputs(16, 16, 13);
  const Tensor a = forward_single_object(in.first, in.prev, in.cur, in.prob, p);
  const Tensor b = forward_single_object(in.prev, in.first, in.cur, in.prob, p);
  EXPECT_GT(max_abs_diff(a, b), 1e-9);
}

TEST(Forward, MatchesMonolithicOracle) {
  for (const bool use_cm : {true, false}) {
    ModelConfig cfg;
    cfg.use_cm = use_cm;
    ModelParams p = busy_model(cfg, 14);
    const Inputs in = random_inputs(32, 48, 14);
    expect_near(forward_single_object(in.first, in.prev, in.cur, in.prob, p),
                oracle::model_forward(in.first, in.prev, in.cur, in.prob, p), 1e-9);
  }
}

TEST(Forward, SingleEncoderVariantMatchesOracle) {
  ModelConfig cfg;
  cfg.single_encoder = true;
  ModelParams p = busy_model(cfg, 15);
  const Inputs in = random_inputs(16, 24, 15);
  expect_near(forward_single_object(in.first, in.prev, in.cur, in.prob, p),
              oracle::model_forward(in.first, in.prev, in.cur, in.prob, p), 1e-9);
}

TEST(Forward, CachedFirstFeaturesGiveSameOutput) {
  ModelParams p = busy_model({}, 16);
  const Inputs in = random_inputs(16, 16, 16);
  Graph g(false);
  const Var feats = encode_reference(g.constant(in.first), p);
  const Var out =
      forward_with_first_features(g.constant(feats.value()), g.constant(in.prev), g.constant(in.cur), g.constant(in.prob), p);
  EXPECT_TRUE(identical(out.value(), forward_single_object(in.first, in.prev, in.cur, in.prob, p)));
}

TEST(Forward, MismatchedFramesRejected) {
  ModelParams p = ModelParams::init({}, 17);
  EXPECT_THROW(forward_single_object(Tensor({16, 16, 3}), Tensor({16, 20, 3}), Tensor({16, 16, 3}),
                                     Tensor({16, 16, 1}), p),
               ShapeError);
}

TEST(Forward, SharedEncoderCollectsGradientFromBothBranches) {
  ModelParams p = busy_model({}, 18);
  const Inputs in = random_inputs(16, 16, 18);
  auto grad_of = [&](const Tensor& first, const Tensor& prev) {
    p.zero_grad();
    Graph g;
    const Var out = forward_single_object(g.constant(first), g.constant(prev), g.constant(in.cur), g.constant(in.prob), p);
    g.backward(ad::sum(out));
    return p.ref_encoder.stage1.weight.grad;
  };
  // Blank out one reference at a time: each branch alone moves the shared weights.
  const Tensor both = grad_of(in.first, in.prev);
  EXPECT_GT(both.max_abs(), 0.0);
  EXPECT_GT(grad_of(in.first, Tensor({16, 16, 3})).max_abs(), 0.0);
  EXPECT_GT(grad_of(Tensor({16, 16, 3}), in.prev).max_abs(), 0.0);
  p.zero_grad();
}

class Checkpoint : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "npmca_ckpt_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(Checkpoint, RoundTripIsBitExact) {
  ModelParams a = busy_model({}, 19), b = ModelParams::init({}, 20);
  save_checkpoint(dir / "m.ckpt", a);
  load_checkpoint(dir / "m.ckpt", b);
  const auto na = a.named_parameters(), nb = b.named_parameters();
  for (std::size_t i = 0; i < na.size(); ++i) EXPECT_TRUE(identical(na[i].second->value, nb[i].second->value));
  save_checkpoint(dir / "m2.ckpt", b);
  EXPECT_EQ(read_file(dir / "m.ckpt"), read_file(dir / "m2.ckpt"));
}

TEST_F(Checkpoint, CorruptFilesRejectedWithOffset) {
  ModelParams a = ModelParams::init({}, 21);
  save_checkpoint(dir / "m.ckpt", a);
  const std::string bytes = read_file(dir / "m.ckpt");

  write_file(dir / "magic.ckpt", "NOTIT!" + bytes.substr(6));
  EXPECT_THROW(load_checkpoint(dir / "magic.ckpt", a), FormatError);

  write_file(dir / "short.ckpt", bytes.substr(0, bytes.size() - 5));
  try {
    load_checkpoint(dir / "short.ckpt", a);
    FAIL() << "truncated checkpoint accepted";
  } catch (const FormatError& e) {
    EXPECT_GT(e.offset(), 6u);
  }
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt", a), ArgumentError);
}

TEST_F(Checkpoint, ArchitectureMismatchRejected) {
  ModelParams a = ModelParams::init({}, 22);
  save_checkpoint(dir / "m.ckpt", a);
  ModelConfig wide;
  wide.features = 32;
  ModelParams b = ModelParams::init(wide, 22);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", b), FormatError);
}
