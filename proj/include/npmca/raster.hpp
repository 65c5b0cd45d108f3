#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "npmca/tensor.hpp"

namespace npmca {

/// Integer label raster: 0 is background, m ≥ 1 is object m.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(std::size_t height, std::size_t width, std::uint8_t fill = 0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  std::uint8_t& at(std::size_t y, std::size_t x) { return labels_[y * width_ + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels_[y * width_ + x]; }
  std::uint8_t& operator[](std::size_t i) { return labels_[i]; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  int max_label() const;
  std::size_t count(int object_id) const;
  /// H×W×1 indicator of object_id.
  Tensor binary(int object_id) const;

  bool operator==(const LabelMask&) const = default;

 private:
  std::size_t height_ = 0, width_ = 0;
  std::vector<std::uint8_t> labels_;
};

enum class RasterKind { RgbPpm, MaskPgm };

// Binary netpbm: P6 (maxval 255) for RGB images stored as H×W×3 tensors in
// [0,1]; P5 (maxval 255) for label masks where the pixel value is the label.
std::string encode_ppm(const Tensor& rgb);
std::string encode_pgm(const LabelMask& mask);
/// 8-bit grayscale of an H×W(×1) map in [0,1] (probability dumps, heatmaps).
std::string encode_gray_pgm(const Tensor& map);

Tensor decode_ppm(std::string_view bytes);
LabelMask decode_pgm(std::string_view bytes);

void write_ppm(const std::filesystem::path& path, const Tensor& rgb);
void write_pgm(const std::filesystem::path& path, const LabelMask& mask);
void write_gray_pgm(const std::filesystem::path& path, const Tensor& map);
Tensor read_ppm(const std::filesystem::path& path);
LabelMask read_pgm(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace npmca
