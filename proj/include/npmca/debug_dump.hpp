#pragma once

#include <filesystem>

#include "npmca/tensor.hpp"

namespace npmca {

/// Channel-wise L2 norm of an H×W×C feature map, as H×W.
Tensor matched_energy(const Tensor& matched);

/// Rescale to [0,1] by the maximum magnitude (all-zero stays zero).
Tensor normalize_for_display(const Tensor& map);

// Grayscale dumps for inspection. Each image is normalized independently.
void dump_similarity(const std::filesystem::path& path, const Tensor& s_norm);
void dump_matched_energy(const std::filesystem::path& path, const Tensor& matched);
void dump_attention_map(const std::filesystem::path& path, const Tensor& attention);

}  // namespace npmca
