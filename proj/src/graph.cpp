#include "npmca/graph.hpp"

#include <cmath>
#include <string>

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"

namespace npmca {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Input: return "input";
    case OpKind::Param: return "param";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulTN: return "matmul_tn";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Transpose: return "transpose";
    case OpKind::SoftmaxColumns: return "softmax_columns";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Resize: return "bilinear_resize";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::ScaleBy: return "scale_by";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Softplus: return "softplus";
    case OpKind::Concat: return "concat";
    case OpKind::Reshape: return "reshape";
    case OpKind::Sum: return "sum";
    case OpKind::Custom: return "custom";
  }
  return "?";
}

const Tensor& Var::value() const {
  if (!valid()) throw StateError("use of an unbound variable");
  return graph->value(*this);
}

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) { return push(Node{OpKind::Constant, {}, std::move(value), {}, false, nullptr, {}}); }

Var Graph::input(Tensor value) {
  return push(Node{OpKind::Input, {}, std::move(value), {}, grad_enabled_, nullptr, {}});
}

Var Graph::param(ParamTensor& p) {
  const bool track = grad_enabled_ && p.trainable;
  return push(Node{OpKind::Param, {}, p.value, {}, track, track ? &p : nullptr, {}});
}

Var Graph::record(OpKind kind, std::vector<int> inputs, Tensor value, Backward backward) {
  bool track = false;
  if (grad_enabled_)
    for (int id : inputs) {
      if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw StateError("record: input id out of range");
      track = track || nodes_[static_cast<std::size_t>(id)].requires_grad;
    }
  return push(Node{kind, std::move(inputs), std::move(value), {}, track, nullptr, track ? std::move(backward) : Backward{}});
}

const Tensor& Graph::value(Var v) const {
  if (v.graph != this) throw StateError("variable belongs to a different graph");
  return nodes_.at(static_cast<std::size_t>(v.id)).value;
}

Tensor Graph::grad(Var v) const {
  if (v.graph != this) throw StateError("variable belongs to a different graph");
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

void Graph::accumulate(int id, const Tensor& g) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (!n.requires_grad) return;
  if (g.size() != n.value.size())
    throw ShapeError(std::string("gradient for ") + op_name(n.kind) + " node has shape " + shape_str(g.shape()) +
                     ", value has " + shape_str(n.value.shape()));
  if (n.grad.empty()) {
    n.grad = g.shape() == n.value.shape() ? g : g.reshaped(n.value.shape());
    return;
  }
  double* dst = n.grad.ptr();
  const double* src = g.ptr();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

void Graph::backward(Var loss) {
  if (!grad_enabled_) throw StateError("backward on a graph recorded without gradients");
  if (nodes_.empty() || !loss.valid() || loss.graph != this)
    throw StateError("backward called before a forward pass was recorded");
  if (backward_done_) throw StateError("backward already ran on this graph");
  Node& root = nodes_.at(static_cast<std::size_t>(loss.id));
  if (root.value.size() != 1) throw StateError("backward target must be a scalar, got " + shape_str(root.value.shape()));
  if (!root.requires_grad) throw StateError("loss does not depend on any trainable leaf");
  backward_done_ = true;
  root.grad = Tensor(root.value.shape(), 1.0);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      if (n.param->grad.shape() != n.value.shape()) n.param->zero_grad();
      double* dst = n.param->grad.ptr();
      for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
      continue;
    }
    if (n.backward) {
      // Adjoints only touch input nodes, which precede n, so the reference stays valid.
      n.backward(*this, n.grad);
      n.grad = Tensor();
    }
  }
}

namespace ad {

namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw StateError("operation on an unbound variable");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph != &g) throw StateError("operands live on different graphs");
  return g;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  return g.record(OpKind::MatMul, {ia, ib}, ops::matmul(a.value(), b.value()), [ia, ib](Graph& gr, const Tensor& d) {
    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::matmul_nt(d, gr.value(ib)));
    if (gr.requires_grad(ib)) gr.accumulate(ib, ops::matmul_tn(gr.value(ia), d));
  });
}

Var matmul_tn(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  return g.record(OpKind::MatMulTN, {ia, ib}, ops::matmul_tn(a.value(), b.value()), [ia, ib](Graph& gr, const Tensor& d) {
    // C = Aᵀ B: dA = B dCᵀ, dB = A dC
    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::matmul_nt(gr.value(ib), d));
    if (gr.requires_grad(ib)) gr.accumulate(ib, ops::matmul(gr.value(ia), d));
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  return g.record(OpKind::MatMulNT, {ia, ib}, ops::matmul_nt(a.value(), b.value()), [ia, ib](Graph& gr, const Tensor& d) {
    // C = A Bᵀ: dA = dC B, dB = dCᵀ A
    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::matmul(d, gr.value(ib)));
    if (gr.requires_grad(ib)) gr.accumulate(ib, ops::matmul_tn(d, gr.value(ia)));
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.record(OpKind::Transpose, {ia}, ops::transpose(a.value()),
                  [ia](Graph& gr, const Tensor& d) { gr.accumulate(ia, ops::transpose(d)); });
}

Var softmax_columns(Var m) {
  Graph& g = graph_of(m);
  const int im = m.id;
  const int self = static_cast<int>(g.size());
  return g.record(OpKind::SoftmaxColumns, {im}, ops::softmax_columns(m.value()), [im, self](Graph& gr, const Tensor& d) {
    gr.accumulate(im, ops::softmax_columns_backward(gr.value(self), d));
  });
}

Var conv2d(Var x, Var w, Var b, std::size_t stride, std::size_t pad) {
  Graph& g = graph_of(x, w);
  graph_of(x, b);
  const int ix = x.id, iw = w.id, ib = b.id;
  return g.record(OpKind::Conv2d, {ix, iw, ib}, ops::conv2d(x.value(), w.value(), b.value(), stride, pad),
                  [ix, iw, ib, stride, pad](Graph& gr, const Tensor& d) {
                    auto grads = ops::conv2d_backward(gr.value(ix), gr.value(iw), d, stride, pad, gr.requires_grad(ix),
                                                      gr.requires_grad(iw), gr.requires_grad(ib));
                    if (gr.requires_grad(ix)) gr.accumulate(ix, grads.dx);
                    if (gr.requires_grad(iw)) gr.accumulate(iw, grads.dw);
                    if (gr.requires_grad(ib)) gr.accumulate(ib, grads.db);
                  });
}

Var bilinear_resize(Var x, std::size_t out_h, std::size_t out_w) {
  Graph& g = graph_of(x);
  const int ix = x.id;
  const std::size_t in_h = x.value().dim(0), in_w = x.value().dim(1);
  return g.record(OpKind::Resize, {ix}, ops::bilinear_resize(x.value(), out_h, out_w),
                  [ix, in_h, in_w](Graph& gr, const Tensor& d) {
                    gr.accumulate(ix, ops::bilinear_resize_backward(d, in_h, in_w));
                  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  return g.record(OpKind::Add, {ia, ib}, ops::add(a.value(), b.value()), [ia, ib](Graph& gr, const Tensor& d) {
    gr.accumulate(ia, d);
    gr.accumulate(ib, d);
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  return g.record(OpKind::Mul, {ia, ib}, ops::mul(a.value(), b.value()), [ia, ib](Graph& gr, const Tensor& d) {
    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::mul(d, gr.value(ib)));
    if (gr.requires_grad(ib)) gr.accumulate(ib, ops::mul(d, gr.value(ia)));
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.record(OpKind::Scale, {ia}, ops::scale(a.value(), s),
                  [ia, s](Graph& gr, const Tensor& d) { gr.accumulate(ia, ops::scale(d, s)); });
}

Var scale_by(Var a, Var s) {
  Graph& g = graph_of(a, s);
  if (s.value().size() != 1) throw ShapeError("scale_by: scale must have one element, got " + shape_str(s.shape()));
  const int ia = a.id, is = s.id;
  return g.record(OpKind::ScaleBy, {ia, is}, ops::scale(a.value(), s.value()[0]), [ia, is](Graph& gr, const Tensor& d) {
    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::scale(d, gr.value(is)[0]));
    if (gr.requires_grad(is)) {
      const Tensor& av = gr.value(ia);
      double acc = 0.0;
      for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * d[i];
      gr.accumulate(is, Tensor(gr.value(is).shape(), acc));
    }
  });
}

Var relu(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.record(OpKind::Relu, {ia}, ops::relu(a.value()), [ia](Graph& gr, const Tensor& d) {
    const Tensor& x = gr.value(ia);
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? d[i] : 0.0;
    gr.accumulate(ia, dx);
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  const int self = static_cast<int>(g.size());
  return g.record(OpKind::Sigmoid, {ia}, ops::sigmoid(a.value()), [ia, self](Graph& gr, const Tensor& d) {
    const Tensor& y = gr.value(self);
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = d[i] * y[i] * (1.0 - y[i]);
    gr.accumulate(ia, dx);
  });
}

Var softplus(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ops::softplus(a.value()[i]);
  return g.record(OpKind::Softplus, {ia}, std::move(y), [ia](Graph& gr, const Tensor& d) {
    const Tensor& x = gr.value(ia);
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = d[i] * ops::sigmoid(x[i]);
    gr.accumulate(ia, dx);
  });
}

Var concat_channels(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const int ia = a.id, ib = b.id;
  const std::size_t ca = a.value().dim(2), cb = b.value().dim(2);
  return g.record(OpKind::Concat, {ia, ib}, ops::concat_channels(a.value(), b.value()),
                  [ia, ib, ca, cb](Graph& gr, const Tensor& d) {
                    if (gr.requires_grad(ia)) gr.accumulate(ia, ops::slice_channels(d, 0, ca));
                    if (gr.requires_grad(ib)) gr.accumulate(ib, ops::slice_channels(d, ca, ca + cb));
                  });
}

Var reshape(Var a, Shape s) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.record(OpKind::Reshape, {ia}, a.value().reshaped(std::move(s)),
                  [ia](Graph& gr, const Tensor& d) { gr.accumulate(ia, d); });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.record(OpKind::Sum, {ia}, Tensor::scalar(a.value().sum()), [ia](Graph& gr, const Tensor& d) {
    gr.accumulate(ia, Tensor(gr.value(ia).shape(), d[0]));
  });
}

}  // namespace ad
}  // namespace npmca
