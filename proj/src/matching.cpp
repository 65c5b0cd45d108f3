#include "npmca/matching.hpp"

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"

namespace npmca {

NlpmmParams NlpmmParams::init(std::size_t channels, Rng& rng) {
  if (channels % 4 != 0) throw ConfigError("NLPMM needs a channel count divisible by 4, got " + std::to_string(channels));
  NlpmmParams p;
  p.reduce_ref = ConvParams::he_uniform(3, channels, channels / 4, 1, rng);
  p.reduce_tar = ConvParams::he_uniform(3, channels, channels / 4, 1, rng);
  return p;
}

void NlpmmParams::append_to(NamedParams& out, const std::string& prefix) {
  append_conv(out, prefix + ".reduce_ref", reduce_ref);
  append_conv(out, prefix + ".reduce_tar", reduce_tar);
}

Var reduce_channels(Var f, ConvParams& p) {
  const Shape s = f.shape();
  if (s.size() != 3) throw ShapeError("reduce_channels: expected H×W×C, got " + shape_str(s));
  if (s[2] % 4 != 0) throw ConfigError("reduce_channels: channel count " + std::to_string(s[2]) + " not divisible by 4");
  if (p.in_channels() != s[2] || p.out_channels() != s[2] / 4 || p.stride != 1)
    throw ConfigError("reduce_channels: parameters do not map " + std::to_string(s[2]) + " → " +
                      std::to_string(s[2] / 4) + " at stride 1");
  return conv(f, p);
}

Var flatten_pixels(Var f) {
  const Shape s = f.shape();
  if (s.size() != 3) throw ShapeError("flatten_pixels: expected H×W×C, got " + shape_str(s));
  return ad::reshape(f, {s[0] * s[1], s[2]});
}

SimilarityMap similarity(Var ref_flat, Var tar_flat) {
  if (ref_flat.shape() != tar_flat.shape())
    throw ShapeError("similarity: reference " + shape_str(ref_flat.shape()) + " vs target " +
                     shape_str(tar_flat.shape()));
  return {ad::matmul_nt(ref_flat, tar_flat), false};
}

SimilarityMap normalize_similarity(const SimilarityMap& s) {
  if (s.normalized) throw ArgumentError("normalize_similarity: map is already normalized");
  return {ad::softmax_columns(s.matrix), true};
}

Var match(Var ref_flat, const SimilarityMap& s_norm) {
  if (!s_norm.normalized) throw ArgumentError("match: similarity map must be normalized first");
  return ad::matmul_tn(ref_flat, s_norm.matrix);
}

NlpmmTrace nlpmm_forward_traced(Var f_ref, Var f_tar, NlpmmParams& p) {
  if (f_ref.shape() != f_tar.shape())
    throw ShapeError("nlpmm_forward: reference " + shape_str(f_ref.shape()) + " vs target " +
                     shape_str(f_tar.shape()));
  const std::size_t h = f_ref.shape()[0], w = f_ref.shape()[1], c4 = f_ref.shape()[2] / 4;
  Var ref = flatten_pixels(reduce_channels(f_ref, p.reduce_ref));
  Var tar = flatten_pixels(reduce_channels(f_tar, p.reduce_tar));
  const SimilarityMap s = normalize_similarity(similarity(ref, tar));
  Var matched = match(ref, s);  // C/4 × N
  Var out = ad::reshape(ad::transpose(matched), {h, w, c4});
  return {out, s.matrix, ref};
}

Var nlpmm_forward(Var f_ref, Var f_tar, NlpmmParams& p) { return nlpmm_forward_traced(f_ref, f_tar, p).output; }

Tensor reduce_channels(const Tensor& f, ConvParams p) {
  Graph g(false);
  return reduce_channels(g.constant(f), p).value();
}

Tensor similarity(const Tensor& ref_flat, const Tensor& tar_flat) {
  Graph g(false);
  return similarity(g.constant(ref_flat), g.constant(tar_flat)).matrix.value();
}

Tensor normalize_similarity(const Tensor& s) { return ops::softmax_columns(s); }

Tensor match(const Tensor& ref_flat, const Tensor& s_norm) { return ops::matmul_tn(ref_flat, s_norm); }

Tensor nlpmm_forward(const Tensor& f_ref, const Tensor& f_tar, NlpmmParams p) {
  Graph g(false);
  return nlpmm_forward(g.constant(f_ref), g.constant(f_tar), p).value();
}

}  // namespace npmca
