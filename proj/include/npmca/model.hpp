#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "npmca/attention.hpp"
#include "npmca/graph.hpp"
#include "npmca/layers.hpp"
#include "npmca/matching.hpp"

namespace npmca {

/// Widths of the toy network and the ablation switches that change its graph.
struct ModelConfig {
  std::size_t enc1 = 16;      // stage 1, halves resolution (skip s1)
  std::size_t enc2 = 32;      // stage 2, halves resolution (skip s2)
  std::size_t features = 64;  // stage 3, stride 1: C of the encoded map
  std::size_t dec1 = 32;
  std::size_t dec2 = 16;

  bool use_cm = true;
  /// Reference frames go through the target encoder (zero mask channel).
  bool single_encoder = false;

  std::size_t reduced() const { return features / 4; }
};

struct EncoderParams {
  ConvParams stage1, stage2, stage3;
  std::size_t in_channels = 3;

  static EncoderParams init(std::size_t in_channels, const ModelConfig& cfg, Rng& rng);
  void append_to(NamedParams& out, const std::string& prefix);
};

struct DecoderParams {
  ConvParams refine1;  // concat(fused, s2) at 1/4
  ConvParams refine2;  // concat(up(refine1), s1) at 1/2
  ConvParams head;     // 1×1 → one logit channel

  static DecoderParams init(const ModelConfig& cfg, Rng& rng);
  void append_to(NamedParams& out, const std::string& prefix);
};

struct ModelParams {
  ModelConfig config;
  EncoderParams ref_encoder;  // shared by the first-frame and previous-frame branches
  EncoderParams tar_encoder;
  NlpmmParams nlpmm_first, nlpmm_prev;
  CmState cm_first, cm_prev;
  ConvParams fusion;
  DecoderParams decoder;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  /// Every parameter, in checkpoint order.
  NamedParams named_parameters();
  std::size_t parameter_count();
  void zero_grad();
};

struct SkipStack {
  Var s1;  // 1/2 resolution
  Var s2;  // 1/4 resolution
};

struct TargetEncoding {
  Var features;
  SkipStack skips;
};

/// Encodes a background-masked H×W×3 reference frame to H/4×W/4×C.
Var encode_reference(Var masked_rgb, ModelParams& p);
/// Encodes the current frame with the previous object probability as a 4th channel.
TargetEncoding encode_target(Var rgb, Var prev_prob, ModelParams& p);
/// Matching + (optional) channel attention for one reference branch.
Var reference_branch(Var f_ref, Var f_tar, NlpmmParams& nlpmm, CmState& cm, bool use_cm);
/// Channel concatenation [first, prev] followed by 3×3 convolution.
Var fuse(Var m_first, Var m_prev, ConvParams& fusion);
/// Returns H_img×W_img×1 logits.
Var decode(Var fused, const SkipStack& skips, DecoderParams& p, std::size_t out_h, std::size_t out_w);

/// Single-object probability map H×W×1, strictly inside (0, 1).
Var forward_single_object(Var first_masked, Var prev_masked, Var cur_rgb, Var prev_prob, ModelParams& p);
/// Same, with the first-frame reference features supplied (inference caching).
Var forward_with_first_features(Var first_features, Var prev_masked, Var cur_rgb, Var prev_prob, ModelParams& p);

Tensor forward_single_object(const Tensor& first_masked, const Tensor& prev_masked, const Tensor& cur_rgb,
                             const Tensor& prev_prob, ModelParams& p);

// Checkpoint container: "NPMCA1", then per parameter: u32 name length, name
// bytes, u32 rank, u64 dims, little-endian doubles. Read until end of file.
void save_checkpoint(const std::filesystem::path& path, ModelParams& p);
/// Loads into p, whose architecture must match the file exactly.
void load_checkpoint(const std::filesystem::path& path, ModelParams& p);

}  // namespace npmca
