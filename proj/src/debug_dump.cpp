#include "npmca/debug_dump.hpp"

#include <cmath>

#include "npmca/errors.hpp"
#include "npmca/raster.hpp"

namespace npmca {

Tensor matched_energy(const Tensor& matched) {
  if (matched.rank() != 3) throw ShapeError("matched_energy: expected H×W×C, got " + shape_str(matched.shape()));
  const std::size_t n = matched.dim(0) * matched.dim(1), c = matched.dim(2);
  Tensor out({matched.dim(0), matched.dim(1)});
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += matched[p * c + k] * matched[p * c + k];
    out[p] = std::sqrt(s);
  }
  return out;
}

Tensor normalize_for_display(const Tensor& map) {
  Tensor out = map;
  const double m = map.max_abs();
  if (m > 0.0)
    for (auto& v : out.data()) v = std::abs(v) / m;
  return out;
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected a matrix, got " + shape_str(t.shape()));
}

}  // namespace

void dump_similarity(const std::filesystem::path& path, const Tensor& s_norm) {
  require_matrix(s_norm, "dump_similarity");
  write_gray_pgm(path, normalize_for_display(s_norm));
}

void dump_matched_energy(const std::filesystem::path& path, const Tensor& matched) {
  write_gray_pgm(path, normalize_for_display(matched_energy(matched)));
}

void dump_attention_map(const std::filesystem::path& path, const Tensor& attention) {
  require_matrix(attention, "dump_attention_map");
  if (attention.dim(0) != attention.dim(1))
    throw ShapeError("dump_attention_map: attention map must be square, got " + shape_str(attention.shape()));
  write_gray_pgm(path, normalize_for_display(attention));
}

}  // namespace npmca
