#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "npmca/tensor.hpp"

namespace npmca {

class Graph;

enum class OpKind {
  Constant,
  Input,
  Param,
  MatMul,
  MatMulTN,
  MatMulNT,
  Transpose,
  SoftmaxColumns,
  Conv2d,
  Resize,
  Add,
  Mul,
  Scale,
  ScaleBy,
  Relu,
  Sigmoid,
  Softplus,
  Concat,
  Reshape,
  Sum,
  Custom,
};

const char* op_name(OpKind kind);

/// Handle to a node on a Graph. Cheap to copy; only valid while its graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in execution order, so the node list
/// is topologically sorted by construction. One recording, one backward pass.
///
/// With gradients disabled the tape still records values but skips adjoint
/// bookkeeping; inference uses that mode.
class Graph {
 public:
  /// Adjoint callback: receives the node's upstream gradient and pushes
  /// contributions into its inputs via accumulate().
  using Backward = std::function<void(Graph&, const Tensor& grad_out)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is kept and can be read with grad() after backward.
  Var input(Tensor value);
  /// Leaf bound to a parameter; backward adds into param.grad.
  Var param(ParamTensor& p);

  Var record(OpKind kind, std::vector<int> inputs, Tensor value, Backward backward);

  const Tensor& value(Var v) const;
  const Tensor& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  /// Gradient of the last backward() target w.r.t. node v. Kept for leaves;
  /// intermediate gradients are released once propagated.
  Tensor grad(Var v) const;
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }
  OpKind kind(int id) const { return nodes_.at(static_cast<std::size_t>(id)).kind; }
  const std::vector<int>& inputs_of(int id) const { return nodes_.at(static_cast<std::size_t>(id)).inputs; }

  void accumulate(int id, const Tensor& g);

  /// Seeds d(loss)/d(loss) = 1 and propagates in reverse node order.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    OpKind kind;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    ParamTensor* param = nullptr;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

// Differentiable operations on graph variables. Operands must live on the
// same graph.
namespace ad {

Var matmul(Var a, Var b);
Var matmul_tn(Var a, Var b);  // aᵀ·b
Var matmul_nt(Var a, Var b);  // a·bᵀ
Var transpose(Var a);
Var softmax_columns(Var m);
Var conv2d(Var x, Var w, Var b, std::size_t stride, std::size_t pad);
Var bilinear_resize(Var x, std::size_t out_h, std::size_t out_w);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// s·a with s a one-element variable.
Var scale_by(Var a, Var s);
Var relu(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var concat_channels(Var a, Var b);
Var reshape(Var a, Shape s);
Var sum(Var a);

}  // namespace ad

}  // namespace npmca
