#pragma once

#include <functional>
#include <vector>

#include "npmca/model.hpp"
#include "npmca/tensor.hpp"

// Straight-loop reference implementations. They share no code with the
// kernels they check (no Eigen, no im2col, no tape), and are written to read
// like the math rather than to be fast.
namespace npmca::oracle {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_columns(const Tensor& m);
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad);
/// Bilinear sample at half-pixel centers, evaluated per output pixel.
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);
/// 2×2 mean pooling.
Tensor avg_pool2(const Tensor& x);

/// Reduction convs, S = ref·tarᵀ, column softmax, matched = refᵀ·S′ in one pass of loops.
Tensor nlpmm(const Tensor& f_ref, const Tensor& f_tar, const ConvParams& reduce_ref, const ConvParams& reduce_tar);
/// γ·(f·softmax_cols(fᵀf)) + f with loops.
Tensor channel_attention(const Tensor& f_in, double gamma);
struct EncoderOutputs {
  Tensor s1, s2, features;
};
/// conv → relu → 2×2 mean, twice, then conv → relu.
EncoderOutputs encode(const Tensor& x, const EncoderParams& e);
/// refine1 on [fused, s2], upsample, refine2 on [·, s1], 1×1 head, resize to out size (logits).
Tensor decode(const Tensor& fused, const Tensor& s1, const Tensor& s2, const DecoderParams& d, std::size_t out_h,
              std::size_t out_w);

/// Full single-object forward with loops, following the documented layer order.
Tensor model_forward(const Tensor& first_masked, const Tensor& prev_masked, const Tensor& cur_rgb,
                     const Tensor& prev_prob, const ModelParams& p);

/// Direct evaluation of the odds-ratio aggregation at one pixel; index 0 is background.
std::vector<double> aggregate_pixel(const std::vector<double>& object_probs);

/// |a − n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Central difference of f w.r.t. entry i of t (restores t afterwards).
double central_difference(const std::function<double()>& f, Tensor& t, std::size_t i, double h = 1e-6);

}  // namespace npmca::oracle
