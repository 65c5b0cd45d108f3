#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "npmca/graph.hpp"
#include "npmca/tensor.hpp"

namespace npmca {

class Rng;

/// k×k convolution weights (k×k×Cin×Cout) and bias (Cout).
struct ConvParams {
  ParamTensor weight;
  ParamTensor bias;
  std::size_t stride = 1;
  std::size_t pad = 1;

  /// He-uniform weights (limit sqrt(6 / fan_in)), zero bias.
  static ConvParams he_uniform(std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride, Rng& rng);

  std::size_t in_channels() const { return weight.value.dim(2); }
  std::size_t out_channels() const { return weight.value.dim(3); }
};

Var conv(Var x, ConvParams& p);
Var conv_relu(Var x, ConvParams& p);

using NamedParams = std::vector<std::pair<std::string, ParamTensor*>>;

inline void append_conv(NamedParams& out, const std::string& prefix, ConvParams& p) {
  out.emplace_back(prefix + ".weight", &p.weight);
  out.emplace_back(prefix + ".bias", &p.bias);
}

}  // namespace npmca
