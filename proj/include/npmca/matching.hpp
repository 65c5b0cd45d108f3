#pragma once

#include "npmca/graph.hpp"
#include "npmca/layers.hpp"
#include "npmca/tensor.hpp"

// Non-local pixel matching between a reference and a target feature map.
//
// Both H×W×C maps are reduced to C/4 channels, flattened to N×C/4 (N = H·W),
// related by S = ref·tarᵀ (reference pixels on rows, target pixels on
// columns), normalized column-wise so each target pixel holds a distribution
// over reference pixels, and finally the reference features are projected
// through it: matched = refᵀ·S′ (C/4×N), reshaped back to H×W×C/4.
namespace npmca {

class Rng;

struct NlpmmParams {
  ConvParams reduce_ref;
  ConvParams reduce_tar;

  static NlpmmParams init(std::size_t channels, Rng& rng);
  void append_to(NamedParams& out, const std::string& prefix);
};

struct SimilarityMap {
  Var matrix;
  bool normalized = false;
};

/// 3×3 stride-1 pad-1 convolution C → C/4. Throws ConfigError if C % 4 != 0.
Var reduce_channels(Var f, ConvParams& p);
/// H×W×C → N×C (metadata only).
Var flatten_pixels(Var f);
SimilarityMap similarity(Var ref_flat, Var tar_flat);
SimilarityMap normalize_similarity(const SimilarityMap& s);
/// C/4×N; rejects an unnormalized map with ArgumentError.
Var match(Var ref_flat, const SimilarityMap& s_norm);

struct NlpmmTrace {
  Var output;       // H×W×C/4
  Var similarity;   // S′, N×N
  Var ref_reduced;  // N×C/4
};

Var nlpmm_forward(Var f_ref, Var f_tar, NlpmmParams& p);
NlpmmTrace nlpmm_forward_traced(Var f_ref, Var f_tar, NlpmmParams& p);

// Tensor-level conveniences (no gradient tracking).
Tensor reduce_channels(const Tensor& f, ConvParams p);
Tensor similarity(const Tensor& ref_flat, const Tensor& tar_flat);
Tensor normalize_similarity(const Tensor& s);
Tensor match(const Tensor& ref_flat, const Tensor& s_norm);
Tensor nlpmm_forward(const Tensor& f_ref, const Tensor& f_tar, NlpmmParams p);

}  // namespace npmca
