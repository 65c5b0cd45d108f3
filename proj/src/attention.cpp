#include "npmca/attention.hpp"

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"

namespace npmca {

CmState CmState::init(double raw) { return CmState{ParamTensor(Tensor::scalar(raw))}; }

double CmState::gamma() const { return ops::softplus(gamma_raw.value[0]); }

void CmState::append_to(NamedParams& out, const std::string& prefix) { out.emplace_back(prefix + ".gamma_raw", &gamma_raw); }

Var channel_gram(Var f_in_flat) {
  if (f_in_flat.shape().size() != 2) throw ShapeError("channel_gram: expected N×c, got " + shape_str(f_in_flat.shape()));
  return ad::matmul_tn(f_in_flat, f_in_flat);
}

Var channel_attention_map(Var f_in_flat) { return ad::softmax_columns(channel_gram(f_in_flat)); }

Var strengthen(Var f_in_flat, Var attention) {
  const Shape f = f_in_flat.shape();
  const Shape a = attention.shape();
  if (f.size() != 2 || a.size() != 2 || a[0] != f[1] || a[1] != f[1])
    throw ShapeError("strengthen: features " + shape_str(f) + " vs attention " + shape_str(a));
  return ad::matmul(f_in_flat, attention);
}

Var cm_forward(Var f_in, CmState& state) {
  const Shape s = f_in.shape();
  if (s.size() != 3) throw ShapeError("cm_forward: expected H×W×c, got " + shape_str(s));
  Graph& g = *f_in.graph;
  Var flat = ad::reshape(f_in, {s[0] * s[1], s[2]});
  Var f_a = strengthen(flat, channel_attention_map(flat));
  Var gamma = ad::softplus(g.param(state.gamma_raw));
  return ad::add(ad::reshape(ad::scale_by(f_a, gamma), s), f_in);
}

Tensor channel_gram(const Tensor& f_in_flat) { return ops::matmul_tn(f_in_flat, f_in_flat); }

Tensor channel_attention_map(const Tensor& f_in_flat) { return ops::softmax_columns(channel_gram(f_in_flat)); }

Tensor strengthen(const Tensor& f_in_flat, const Tensor& attention) {
  Graph g(false);
  return strengthen(g.constant(f_in_flat), g.constant(attention)).value();
}

Tensor cm_forward(const Tensor& f_in, double gamma) {
  if (f_in.rank() != 3) throw ShapeError("cm_forward: expected H×W×c, got " + shape_str(f_in.shape()));
  if (gamma < 0.0) throw ArgumentError("cm_forward: gamma must be non-negative");
  const Shape s = f_in.shape();
  const Tensor flat = f_in.reshaped({s[0] * s[1], s[2]});
  const Tensor f_a = ops::matmul(flat, channel_attention_map(flat));
  return ops::add(ops::scale(f_a, gamma).reshaped(s), f_in);
}

}  // namespace npmca
