#include "npmca/training.hpp"

#include <cmath>

#include "npmca/errors.hpp"
#include "npmca/metrics.hpp"
#include "npmca/propagation.hpp"
#include "npmca/rng.hpp"

namespace npmca {

void Adam::step(const NamedParams& params) {
  if (m_.empty()) {
    for (const auto& [name, p] : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw StateError("Adam: parameter set changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor& p = *params[k].second;
    if (!p.trainable) continue;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      p.value[i] -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
    }
  }
}

const char* stage_name(Stage s) { return s == Stage::Pretrain ? "pretrain" : "finetune"; }

Stage parse_stage(const std::string& s) {
  if (s == "pretrain") return Stage::Pretrain;
  if (s == "finetune") return Stage::Finetune;
  throw ArgumentError("unknown stage '" + s + "' (expected pretrain or finetune)");
}

TrainSample make_sample(const std::array<Tensor, 3>& frames, const std::array<LabelMask, 3>& masks, int object_id) {
  TrainSample s;
  s.first_masked = mask_out_background(frames[0], masks[0], object_id);
  s.prev_masked = mask_out_background(frames[1], masks[1], object_id);
  s.target_rgb = frames[2];
  s.prev_prob = masks[1].binary(object_id);
  s.target_gt = masks[2].binary(object_id);
  return s;
}

namespace {

std::vector<int> present_objects(const LabelMask& mask) {
  std::vector<bool> seen(256, false);
  for (auto v : mask.labels()) seen[v] = true;
  std::vector<int> ids;
  for (int k = 1; k < 256; ++k)
    if (seen[static_cast<std::size_t>(k)]) ids.push_back(k);
  return ids;
}

int pick(const std::vector<int>& ids, Rng& rng) {
  return ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
}

}  // namespace

TrainSample draw_sample(const std::vector<VideoSequence>& data, const TrainConfig& cfg, Rng& rng) {
  if (data.empty()) throw ArgumentError("training data is empty");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const VideoSequence& seq = data[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1))];
    if (cfg.stage == Stage::Pretrain) {
      const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(seq.masks.size()) - 1));
      const auto ids = present_objects(seq.masks[t]);
      if (ids.empty()) continue;
      const int obj = pick(ids, rng);
      LabelMask single(seq.masks[t].height(), seq.masks[t].width());
      for (std::size_t i = 0; i < single.size(); ++i) single[i] = seq.masks[t][i] == obj ? 1 : 0;
      const Triplet trip = synth_pretrain_pair(seq.frames[t], single, rng.next_u64(), cfg.affine);
      if (trip.masks[0].count(1) == 0) continue;
      return make_sample(trip.frames, trip.masks, 1);
    }
    if (seq.frames.size() < 3 || seq.masks.size() != seq.frames.size()) continue;
    const TripletIndices idx = sample_training_triplet(seq.frames.size(), cfg.max_skip, rng);
    const auto ids = present_objects(seq.masks[idx.first]);
    if (ids.empty()) continue;
    const int obj = pick(ids, rng);
    return make_sample({seq.frames[idx.first], seq.frames[idx.previous], seq.frames[idx.target]},
                       {seq.masks[idx.first], seq.masks[idx.previous], seq.masks[idx.target]}, obj);
  }
  throw ArgumentError("could not draw a training sample: no usable sequence/object");
}

namespace {

Var sample_loss(Graph& g, ModelParams& params, const TrainSample& s) {
  Var prob = forward_single_object(g.constant(s.first_masked), g.constant(s.prev_masked), g.constant(s.target_rgb),
                                   g.constant(s.prev_prob), params);
  return iou_loss(prob, s.target_gt);
}

}  // namespace

double evaluate_loss(ModelParams& params, const TrainSample& sample) {
  Graph g(false);
  return sample_loss(g, params, sample).value()[0];
}

double train_step(ModelParams& params, Adam& opt, const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw ArgumentError("train_step: empty batch");
  params.zero_grad();
  double total = 0.0;
  for (const auto& s : batch) {
    Graph g;
    Var loss = sample_loss(g, params, s);
    total += loss.value()[0];
    g.backward(loss);
  }
  const double mean = total / static_cast<double>(batch.size());
  if (!std::isfinite(mean)) throw NumericError("non-finite training loss");
  const auto named = params.named_parameters();
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& [name, p] : named) {
    for (auto& v : p->grad.data()) v *= inv;
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in " + name);
  }
  opt.step(named);
  return mean;
}

std::vector<double> train(ModelParams& params, const std::vector<VideoSequence>& data, const TrainConfig& cfg,
                          const IterationCallback& on_iteration) {
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be positive");
  Rng rng(cfg.seed);
  Adam opt(AdamConfig{cfg.lr});
  std::vector<double> losses;
  losses.reserve(cfg.iterations);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    std::vector<TrainSample> batch;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) batch.push_back(draw_sample(data, cfg, rng));
    double loss;
    try {
      loss = train_step(params, opt, batch);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    losses.push_back(loss);
    if (on_iteration) on_iteration(it, loss);
  }
  return losses;
}

}  // namespace npmca
