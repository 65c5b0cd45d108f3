#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "npmca/datagen.hpp"
#include "npmca/model.hpp"

namespace npmca {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; moment buffers are keyed by parameter order.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  void step(const NamedParams& params);
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

enum class Stage { Pretrain, Finetune };

const char* stage_name(Stage s);
Stage parse_stage(const std::string& s);

/// One single-object training example.
struct TrainSample {
  Tensor first_masked;  // H×W×3
  Tensor prev_masked;   // H×W×3
  Tensor target_rgb;    // H×W×3
  Tensor prev_prob;     // H×W×1
  Tensor target_gt;     // H×W×1
};

TrainSample make_sample(const std::array<Tensor, 3>& frames, const std::array<LabelMask, 3>& masks, int object_id);

struct TrainConfig {
  Stage stage = Stage::Pretrain;
  std::size_t iterations = 100;
  std::size_t batch_size = 4;
  double lr = 1e-4;
  std::size_t max_skip = 5;
  std::uint64_t seed = 0;
  AffineRanges affine;
};

/// Draws one example: a warped static-frame triplet (pretrain) or a
/// temporally ordered video triplet with random skip (finetune).
TrainSample draw_sample(const std::vector<VideoSequence>& data, const TrainConfig& cfg, Rng& rng);

/// Forward + backward over a batch, averaged, followed by one Adam update.
/// Returns the mean loss; throws NumericError on a non-finite loss.
double train_step(ModelParams& params, Adam& opt, const std::vector<TrainSample>& batch);

/// Loss value without touching gradients.
double evaluate_loss(ModelParams& params, const TrainSample& sample);

using IterationCallback = std::function<void(std::size_t iteration, double loss)>;

/// Runs cfg.iterations steps; the callback sees 1-based iteration numbers.
std::vector<double> train(ModelParams& params, const std::vector<VideoSequence>& data, const TrainConfig& cfg,
                          const IterationCallback& on_iteration = {});

}  // namespace npmca
