#include "npmca/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "npmca/errors.hpp"

namespace npmca {

LabelMask::LabelMask(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), labels_(height * width, fill) {}

int LabelMask::max_label() const {
  return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

std::size_t LabelMask::count(int object_id) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), object_id));
}

Tensor LabelMask::binary(int object_id) const {
  Tensor t({height_, width_, 1});
  for (std::size_t i = 0; i < labels_.size(); ++i) t[i] = labels_[i] == object_id ? 1.0 : 0.0;
  return t;
}

namespace {

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::string header(const char* magic, std::size_t w, std::size_t h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

struct PnmHeader {
  char kind;
  std::size_t width, height, maxval, payload_offset;
};

class HeaderParser {
 public:
  explicit HeaderParser(std::string_view b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(b_[pos_] - '0');
      if (v > 1'000'000) throw FormatError(std::string("netpbm ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("netpbm header: expected ") + what, start);
    return v;
  }

  PnmHeader parse() {
    if (b_.size() < 2 || b_[0] != 'P') throw FormatError("not a netpbm file (missing 'P' magic)", 0);
    PnmHeader h{b_[1], 0, 0, 0, 0};
    pos_ = 2;
    h.width = number("width");
    h.height = number("height");
    h.maxval = number("maxval");
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
      throw FormatError("netpbm header: expected single whitespace after maxval", pos_);
    h.payload_offset = pos_ + 1;
    if (h.width == 0 || h.height == 0) throw FormatError("netpbm header: zero image dimension", 2);
    if (h.maxval != 255) throw FormatError("netpbm header: only maxval 255 is supported", 2);
    return h;
  }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

void require_payload(std::string_view bytes, const PnmHeader& h, std::size_t channels) {
  const std::size_t need = h.width * h.height * channels;
  if (bytes.size() - h.payload_offset < need)
    throw FormatError("truncated payload: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - h.payload_offset),
                      bytes.size());
}

}  // namespace

std::string encode_ppm(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3) throw ShapeError("encode_ppm: expected H×W×3, got " + shape_str(rgb.shape()));
  std::string out = header("P6", rgb.dim(1), rgb.dim(0));
  out.reserve(out.size() + rgb.size());
  for (double v : rgb.data()) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

std::string encode_pgm(const LabelMask& mask) {
  if (mask.empty()) throw ShapeError("encode_pgm: empty mask");
  std::string out = header("P5", mask.width(), mask.height());
  for (auto v : mask.labels()) out.push_back(static_cast<char>(v));
  return out;
}

std::string encode_gray_pgm(const Tensor& map) {
  if (map.rank() < 2 || (map.rank() == 3 && map.dim(2) != 1) || map.rank() > 3)
    throw ShapeError("encode_gray_pgm: expected H×W or H×W×1, got " + shape_str(map.shape()));
  std::string out = header("P5", map.dim(1), map.dim(0));
  for (double v : map.data()) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

Tensor decode_ppm(std::string_view bytes) {
  const PnmHeader h = HeaderParser(bytes).parse();
  if (h.kind != '6') throw FormatError(std::string("expected P6 RGB image, found P") + h.kind, 1);
  require_payload(bytes, h, 3);
  Tensor t({h.height, h.width, 3});
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(static_cast<unsigned char>(bytes[h.payload_offset + i])) / 255.0;
  return t;
}

LabelMask decode_pgm(std::string_view bytes) {
  const PnmHeader h = HeaderParser(bytes).parse();
  if (h.kind != '5') throw FormatError(std::string("expected P5 mask, found P") + h.kind, 1);
  require_payload(bytes, h, 1);
  LabelMask m(h.height, h.width);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<std::uint8_t>(bytes[h.payload_offset + i]);
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ArgumentError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ArgumentError("failed writing " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Tensor& rgb) { write_file(path, encode_ppm(rgb)); }
void write_pgm(const std::filesystem::path& path, const LabelMask& mask) { write_file(path, encode_pgm(mask)); }
void write_gray_pgm(const std::filesystem::path& path, const Tensor& map) { write_file(path, encode_gray_pgm(map)); }
Tensor read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }
LabelMask read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

}  // namespace npmca
