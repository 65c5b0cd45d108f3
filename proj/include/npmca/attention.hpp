#pragma once

#include "npmca/graph.hpp"
#include "npmca/layers.hpp"
#include "npmca/tensor.hpp"

// Channel attention applied in series after pixel matching. No convolutions:
// A = fᵀf over channels, A′ = column softmax of A, f_A = f·A′, and the output
// is γ·f_A + f with a learned γ ≥ 0.
namespace npmca {

/// γ is stored raw and applied as softplus(raw), so it can never go negative.
struct CmState {
  ParamTensor gamma_raw;

  static constexpr double kInitialRaw = -10.0;
  static CmState init(double raw = kInitialRaw);
  double gamma() const;
  void append_to(NamedParams& out, const std::string& prefix);
};

/// Gram matrix A = fᵀf of an N×c feature matrix (c×c).
Var channel_gram(Var f_in_flat);
/// A′: column softmax of the Gram matrix.
Var channel_attention_map(Var f_in_flat);
/// f_A = f·A′.
Var strengthen(Var f_in_flat, Var attention);
/// γ·f_A + f on an H×W×c map.
Var cm_forward(Var f_in, CmState& state);

Tensor channel_gram(const Tensor& f_in_flat);
Tensor channel_attention_map(const Tensor& f_in_flat);
Tensor strengthen(const Tensor& f_in_flat, const Tensor& attention);
/// Pure variant with an explicit γ (γ = 0 returns f_in exactly).
Tensor cm_forward(const Tensor& f_in, double gamma);

}  // namespace npmca
