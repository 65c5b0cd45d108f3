#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "npmca/raster.hpp"
#include "npmca/tensor.hpp"

namespace npmca {

class Rng;

enum class ShapeKind { Disc, Rectangle, Triangle };

const char* shape_kind_name(ShapeKind k);
ShapeKind parse_shape_kind(const std::string& s);

using Color = std::array<double, 3>;

struct ObjectSpec {
  ShapeKind kind = ShapeKind::Disc;
  double cx = 0.0, cy = 0.0;      // center at t = 0, pixel coordinates
  double size_a = 8.0;            // disc radius / half-width / triangle half-size
  double size_b = 8.0;            // rectangle half-height (unused otherwise)
  double vx = 0.0, vy = 0.0;      // pixels per frame
  double scale_rate = 0.0;        // size multiplier (1 + rate)^t
  Color color{1.0, 0.0, 0.0};
  Color color_drift{0.0, 0.0, 0.0};  // per frame, clamped to [0,1]
};

/// Frames [start, end] in which `occluder` is drawn over `occluded`
/// (0-based object indices), regardless of list order.
struct OcclusionEvent {
  int occluder = 0;
  int occluded = 0;
  int start = 0;
  int end = 0;
};

struct SceneConfig {
  std::size_t height = 64;
  std::size_t width = 96;
  std::size_t frames = 8;
  double noise = 0.02;
  std::uint64_t background_seed = 0;
  std::vector<ObjectSpec> objects;
  std::vector<OcclusionEvent> occlusions;

  /// Throws ConfigError on invalid configs (object out of frame at t = 0, M < 1, T < 2, ...).
  void validate() const;
  std::string to_text() const;
  static SceneConfig from_text(const std::string& text);
};

/// Object geometry at one frame.
struct ObjectState {
  ShapeKind kind;
  double cx, cy, a, b;
  Color color;
  double extent_x() const;
  double extent_y() const;
  bool contains(double x, double y) const;
};

ObjectState object_state(const SceneConfig& cfg, std::size_t object, std::size_t frame);
/// Draw order (back to front) of object indices at a frame.
std::vector<std::size_t> draw_order(const SceneConfig& cfg, std::size_t frame);

struct VideoSequence {
  std::string name;
  std::vector<Tensor> frames;      // H×W×3 in [0,1]
  std::vector<LabelMask> masks;    // empty for prediction inputs
  std::size_t num_objects() const;
};

VideoSequence generate_sequence(const SceneConfig& cfg, std::uint64_t seed, const std::string& name = "");

struct SceneOptions {
  std::size_t height = 64, width = 96, frames = 8;
  std::size_t max_objects = 2;
  /// Second object is steered across the first with a scheduled occlusion.
  bool occlusion_heavy = false;
  double crossing_probability = 0.3;
};

SceneConfig random_scene(const SceneOptions& opts, Rng& rng);

// --- static-image pretraining ---

struct AffineRanges {
  double max_rotation_deg = 15.0;
  double min_scale = 0.9, max_scale = 1.1;
  double max_translation = 0.10;  // fraction of width / height
};

/// Rotation + isotropic scale about the image center, then translation.
struct AffineTransform {
  double angle = 0.0, scale = 1.0, tx = 0.0, ty = 0.0;

  static AffineTransform identity() { return {}; }
  static AffineTransform sample(const AffineRanges& r, std::size_t height, std::size_t width, Rng& rng);
  /// Source position for an output pixel (x, y).
  std::array<double, 2> inverse(double x, double y, std::size_t height, std::size_t width) const;
};

Tensor warp_image(const Tensor& rgb, const AffineTransform& t);
LabelMask warp_mask(const LabelMask& mask, const AffineTransform& t);

struct Triplet {
  std::array<Tensor, 3> frames;     // first, previous, target
  std::array<LabelMask, 3> masks;
};

/// Three independently warped copies of one static image/mask pair.
Triplet synth_pretrain_pair(const Tensor& rgb, const LabelMask& mask, std::uint64_t seed,
                            const AffineRanges& ranges = {});
Triplet apply_transforms(const Tensor& rgb, const LabelMask& mask, const std::array<AffineTransform, 3>& t);

// --- video triplet sampling ---

struct TripletIndices {
  std::size_t first = 0, previous = 0, target = 0;
};

/// 0 < t−k < t with k uniform on [1, min(max_skip, T−2)] and t uniform on [k+1, T−1].
TripletIndices sample_training_triplet(std::size_t frame_count, std::size_t max_skip, Rng& rng);
TripletIndices sample_training_triplet(const VideoSequence& video, std::size_t max_skip, std::uint64_t seed);

// --- dataset layout: <root>/<seq>/frames/%05d.ppm, masks/%05d.pgm, scene.cfg ---

std::string frame_file_name(std::size_t index, const char* ext);
void write_sequence(const std::filesystem::path& root, const VideoSequence& seq, const SceneConfig& cfg,
                    std::uint64_t seed);
/// Reads frames and whatever masks exist (at least frame 0 is needed for inference).
VideoSequence read_sequence(const std::filesystem::path& seq_dir);
std::vector<std::string> list_sequences(const std::filesystem::path& root);
/// Empty when the tree is well formed; otherwise one line per problem.
std::vector<std::string> validate_dataset(const std::filesystem::path& root);

}  // namespace npmca
