#include "npmca/layers.hpp"

#include <cmath>

#include "npmca/rng.hpp"

namespace npmca {

ConvParams ConvParams::he_uniform(std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(k * k * cin));
  ConvParams p;
  p.weight = ParamTensor(Tensor::uniform({k, k, cin, cout}, rng, -limit, limit));
  p.bias = ParamTensor(Tensor({cout}));
  p.stride = stride;
  p.pad = (k - 1) / 2;
  return p;
}

Var conv(Var x, ConvParams& p) {
  Graph& g = *x.graph;
  return ad::conv2d(x, g.param(p.weight), g.param(p.bias), p.stride, p.pad);
}

Var conv_relu(Var x, ConvParams& p) { return ad::relu(conv(x, p)); }

}  // namespace npmca
