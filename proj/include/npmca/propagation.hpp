#pragma once

#include <vector>

#include "npmca/datagen.hpp"
#include "npmca/model.hpp"
#include "npmca/raster.hpp"
#include "npmca/tensor.hpp"

namespace npmca {

/// Probabilities are clamped to [ε, 1 − ε] before taking odds.
inline constexpr double kProbabilityClamp = 1e-7;

/// maps[0] is the background, maps[m] object m; each H×W×1.
struct ProbabilityStack {
  std::vector<Tensor> maps;
  std::size_t num_objects() const { return maps.empty() ? 0 : maps.size() - 1; }
};

struct Aggregation {
  ProbabilityStack probs;
  LabelMask labels;
};

/// Zeroes every pixel whose label differs from object_id (object_id ≥ 1).
Tensor mask_out_background(const Tensor& rgb, const LabelMask& mask, int object_id);

/// Odds-ratio aggregation of per-object probabilities with background
/// p₀ = Π(1 − p_m); labels are the argmax with ties toward the smaller id.
Aggregation aggregate_multi_object(const std::vector<Tensor>& object_probs);

/// One-hot stack for a given label mask (frame 0 of a sequence).
ProbabilityStack one_hot_stack(const LabelMask& mask, std::size_t num_objects);

struct InferenceOptions {
  std::vector<double> scales{0.75, 1.0, 1.25};
  /// Previous-frame branch sees frame 0 instead of frame t−1.
  bool first_frame_only = false;
  /// Target mask channel: aggregated soft probability (true) or the hard argmax mask.
  bool soft_prev_prob = true;
  /// Encode each object's first-frame reference once per scale.
  bool cache_first_features = true;
};

struct SequenceInference {
  std::vector<LabelMask> masks;
  std::vector<ProbabilityStack> probs;
};

/// Image size used at a given scale: rounded to a multiple of 4, at least 4.
std::size_t scaled_extent(std::size_t extent, double scale);

SequenceInference infer_sequence(const VideoSequence& video, const LabelMask& first_mask, const ModelParams& params,
                                 const InferenceOptions& opts = {});

}  // namespace npmca
