#pragma once

#include <cstddef>

#include "npmca/tensor.hpp"

// Pure tensor kernels. Each differentiable kernel has its adjoint next to it;
// the tape in graph.hpp wires them together.
namespace npmca::ops {

// --- matrix products (rank-2 operands) ---
Tensor matmul(const Tensor& a, const Tensor& b);     // A·B
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // Aᵀ·B
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // A·Bᵀ
Tensor transpose(const Tensor& a);

// --- softmax over the first index of a matrix (each column sums to 1) ---
Tensor softmax_columns(const Tensor& m);
Tensor softmax_columns_backward(const Tensor& y, const Tensor& dy);

// --- convolution on H×W×C tensors with kh×kw×Cin×Cout weights ---
std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad);
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad);

struct Conv2dGrads {
  Tensor dx, dw, db;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t stride,
                            std::size_t pad, bool need_dx, bool need_dw, bool need_db);

// --- bilinear resize, half-pixel centers, edge clamped ---
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);
Tensor bilinear_resize_backward(const Tensor& dy, std::size_t in_h, std::size_t in_w);

// --- elementwise; shapes must match exactly ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
double sigmoid(double x);
double softplus(double x);

// --- channel plumbing on H×W×C ---
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Channels [begin, end) of an H×W×C tensor.
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t end);

}  // namespace npmca::ops
