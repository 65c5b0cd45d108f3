#include "npmca/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"

namespace npmca {

Tensor mask_out_background(const Tensor& rgb, const LabelMask& mask, int object_id) {
  if (object_id < 1 || object_id > 255) throw ArgumentError("mask_out_background: invalid object id " + std::to_string(object_id));
  if (rgb.rank() != 3 || rgb.dim(0) != mask.height() || rgb.dim(1) != mask.width())
    throw ShapeError("mask_out_background: image " + shape_str(rgb.shape()) + " does not match mask");
  Tensor out = rgb;
  const std::size_t c = rgb.dim(2);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != object_id) std::fill_n(out.ptr() + i * c, c, 0.0);
  return out;
}

Aggregation aggregate_multi_object(const std::vector<Tensor>& object_probs) {
  if (object_probs.empty()) throw ArgumentError("aggregate_multi_object: no objects");
  const Shape& shape = object_probs[0].shape();
  if (shape.size() != 3 || shape[2] != 1) throw ShapeError("aggregate_multi_object: maps must be H×W×1");
  for (const auto& p : object_probs)
    if (p.shape() != shape) throw ShapeError("aggregate_multi_object: maps differ in shape");
  const std::size_t m = object_probs.size(), n = object_probs[0].size();
  const double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;

  Aggregation out;
  out.probs.maps.assign(m + 1, Tensor(shape));
  out.labels = LabelMask(shape[0], shape[1]);
  std::vector<double> odds(m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double bg = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double p = std::clamp(object_probs[k][i], lo, hi);
      bg *= 1.0 - p;
      odds[k + 1] = p / (1.0 - p);
    }
    bg = std::clamp(bg, lo, hi);
    odds[0] = bg / (1.0 - bg);
    double total = 0.0;
    for (double o : odds) total += o;
    std::size_t best = 0;
    for (std::size_t k = 0; k <= m; ++k) {
      out.probs.maps[k][i] = odds[k] / total;
      if (odds[k] > odds[best]) best = k;
    }
    out.labels[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

ProbabilityStack one_hot_stack(const LabelMask& mask, std::size_t num_objects) {
  ProbabilityStack s;
  for (std::size_t k = 0; k <= num_objects; ++k) s.maps.push_back(mask.binary(static_cast<int>(k)));
  return s;
}

std::size_t scaled_extent(std::size_t extent, double scale) {
  const auto q = static_cast<long>(std::lround(static_cast<double>(extent) * scale / 4.0));
  return static_cast<std::size_t>(std::max(1L, q)) * 4;
}

SequenceInference infer_sequence(const VideoSequence& video, const LabelMask& first_mask, const ModelParams& params,
                                 const InferenceOptions& opts) {
  if (video.frames.empty()) throw ArgumentError("infer_sequence: empty video");
  if (opts.scales.empty()) throw ArgumentError("infer_sequence: no scales given");
  for (double s : opts.scales)
    if (!(s > 0.0)) throw ArgumentError("infer_sequence: scales must be positive");
  const std::size_t h = video.frames[0].dim(0), w = video.frames[0].dim(1);
  for (const auto& f : video.frames)
    if (f.rank() != 3 || f.dim(0) != h || f.dim(1) != w || f.dim(2) != 3)
      throw ArgumentError("infer_sequence: frames differ in size");
  if (first_mask.height() != h || first_mask.width() != w)
    throw ArgumentError("infer_sequence: first mask does not match the frame size");

  const int m = first_mask.max_label();
  SequenceInference out;
  out.masks.push_back(first_mask);
  out.probs.push_back(one_hot_stack(first_mask, static_cast<std::size_t>(m)));
  if (m == 0 || video.frames.size() == 1) {
    for (std::size_t t = 1; t < video.frames.size(); ++t) {
      out.masks.push_back(LabelMask(h, w));
      out.probs.push_back(one_hot_stack(out.masks.back(), 0));
    }
    return out;
  }

  ModelParams model = params;  // private copy: graphs bind parameters by reference
  std::map<std::pair<int, std::size_t>, Tensor> first_features;
  std::vector<Tensor> first_masked(static_cast<std::size_t>(m) + 1);
  for (int obj = 1; obj <= m; ++obj)
    first_masked[static_cast<std::size_t>(obj)] = mask_out_background(video.frames[0], first_mask, obj);

  for (std::size_t t = 1; t < video.frames.size(); ++t) {
    const Tensor& cur = video.frames[t];
    const LabelMask& prev_labels = out.masks[t - 1];
    std::vector<Tensor> object_probs;
    for (int obj = 1; obj <= m; ++obj) {
      const auto o = static_cast<std::size_t>(obj);
      const Tensor prev_masked = opts.first_frame_only ? first_masked[o]
                                                       : mask_out_background(video.frames[t - 1], prev_labels, obj);
      const Tensor prev_prob = opts.soft_prev_prob ? out.probs[t - 1].maps[o] : prev_labels.binary(obj);
      Tensor avg({h, w, 1});
      for (std::size_t si = 0; si < opts.scales.size(); ++si) {
        const std::size_t sh = scaled_extent(h, opts.scales[si]), sw = scaled_extent(w, opts.scales[si]);
        Graph g(false);
        Var first_feat;
        if (opts.cache_first_features) {
          auto key = std::make_pair(obj, si);
          auto it = first_features.find(key);
          if (it == first_features.end())
            it = first_features
                     .emplace(key, encode_reference(g.constant(ops::bilinear_resize(first_masked[o], sh, sw)), model).value())
                     .first;
          first_feat = g.constant(it->second);
        } else {
          first_feat = encode_reference(g.constant(ops::bilinear_resize(first_masked[o], sh, sw)), model);
        }
        Var prob = forward_with_first_features(first_feat, g.constant(ops::bilinear_resize(prev_masked, sh, sw)),
                                               g.constant(ops::bilinear_resize(cur, sh, sw)),
                                               g.constant(ops::bilinear_resize(prev_prob, sh, sw)), model);
        const Tensor native = ops::bilinear_resize(prob.value(), h, w);
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += native[i];
      }
      for (auto& v : avg.data()) v /= static_cast<double>(opts.scales.size());
      object_probs.push_back(std::move(avg));
    }
    Aggregation agg = aggregate_multi_object(object_probs);
    out.masks.push_back(std::move(agg.labels));
    out.probs.push_back(std::move(agg.probs));
  }
  return out;
}

}  // namespace npmca
