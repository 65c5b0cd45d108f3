#pragma once

#include <string>
#include <vector>

#include "npmca/graph.hpp"
#include "npmca/raster.hpp"
#include "npmca/tensor.hpp"

namespace npmca {

/// Smoothing constant of the soft-Jaccard loss.
inline constexpr double kIouSmoothing = 1.0;

/// L = 1 − (Σp·y + ε)/(Σp + Σy − Σp·y + ε); differentiable in pred.
Var iou_loss(Var pred, const Tensor& gt, double eps = kIouSmoothing);
double iou_loss(const Tensor& pred, const Tensor& gt, double eps = kIouSmoothing);

/// Region similarity J: |pred ∩ gt| / |pred ∪ gt| for one object; 1 when both are empty.
double region_j(const LabelMask& pred, const LabelMask& gt, int object_id);

/// Object pixels 4-adjacent to a non-object pixel or to the image border.
std::vector<bool> boundary_map(const LabelMask& mask, int object_id);
/// Boundary tolerance max(1, round(0.0075 · image diagonal)).
int contour_radius(std::size_t height, std::size_t width);
/// Contour accuracy F with disk matching of radius r (r < 0 → contour_radius).
double contour_f(const LabelMask& pred, const LabelMask& gt, int object_id, int radius = -1);

struct ObjectScore {
  std::string sequence;
  int object = 0;
  double j = 0.0, f = 0.0;
};

struct SequenceScore {
  std::string sequence;
  double j = 0.0, f = 0.0;
};

struct EvalReport {
  std::vector<ObjectScore> objects;
  std::vector<SequenceScore> sequences;
  double mean_j = 0.0, mean_f = 0.0;
  double jf = 0.0;

  /// "J: x.xxx F: x.xxx J&F: x.xxx"
  std::string summary_line() const;
  /// One "sequence object J F" row per object, then the summary line.
  std::string to_table() const;
  std::string to_json() const;
};

struct SequencePrediction {
  std::string name;
  std::vector<LabelMask> preds;
  std::vector<LabelMask> gts;
};

/// Scores frames 1..T−1; averages frames → objects → sequences.
EvalReport evaluate_sequence(const std::vector<LabelMask>& preds, const std::vector<LabelMask>& gts,
                             const std::string& name = "sequence");
EvalReport evaluate(const std::vector<SequencePrediction>& sequences);

}  // namespace npmca
