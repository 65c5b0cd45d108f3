#include "npmca/model.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "npmca/errors.hpp"
#include "npmca/ops.hpp"
#include "npmca/rng.hpp"

namespace npmca {

EncoderParams EncoderParams::init(std::size_t in_channels, const ModelConfig& cfg, Rng& rng) {
  EncoderParams e;
  e.in_channels = in_channels;
  e.stage1 = ConvParams::he_uniform(3, in_channels, cfg.enc1, 1, rng);
  e.stage2 = ConvParams::he_uniform(3, cfg.enc1, cfg.enc2, 1, rng);
  e.stage3 = ConvParams::he_uniform(3, cfg.enc2, cfg.features, 1, rng);
  return e;
}

void EncoderParams::append_to(NamedParams& out, const std::string& prefix) {
  append_conv(out, prefix + ".stage1", stage1);
  append_conv(out, prefix + ".stage2", stage2);
  append_conv(out, prefix + ".stage3", stage3);
}

DecoderParams DecoderParams::init(const ModelConfig& cfg, Rng& rng) {
  DecoderParams d;
  d.refine1 = ConvParams::he_uniform(3, cfg.reduced() + cfg.enc2, cfg.dec1, 1, rng);
  d.refine2 = ConvParams::he_uniform(3, cfg.dec1 + cfg.enc1, cfg.dec2, 1, rng);
  d.head = ConvParams::he_uniform(1, cfg.dec2, 1, 1, rng);
  return d;
}

void DecoderParams::append_to(NamedParams& out, const std::string& prefix) {
  append_conv(out, prefix + ".refine1", refine1);
  append_conv(out, prefix + ".refine2", refine2);
  append_conv(out, prefix + ".head", head);
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.features % 4 != 0) throw ConfigError("feature channels must be divisible by 4");
  Rng rng(seed);
  ModelParams p;
  p.config = cfg;
  p.ref_encoder = EncoderParams::init(3, cfg, rng);
  p.tar_encoder = EncoderParams::init(4, cfg, rng);
  p.nlpmm_first = NlpmmParams::init(cfg.features, rng);
  p.nlpmm_prev = NlpmmParams::init(cfg.features, rng);
  p.cm_first = CmState::init();
  p.cm_prev = CmState::init();
  p.fusion = ConvParams::he_uniform(3, 2 * cfg.reduced(), cfg.reduced(), 1, rng);
  p.decoder = DecoderParams::init(cfg, rng);
  return p;
}

NamedParams ModelParams::named_parameters() {
  NamedParams out;
  ref_encoder.append_to(out, "ref_encoder");
  tar_encoder.append_to(out, "tar_encoder");
  nlpmm_first.append_to(out, "nlpmm_first");
  nlpmm_prev.append_to(out, "nlpmm_prev");
  cm_first.append_to(out, "cm_first");
  cm_prev.append_to(out, "cm_prev");
  append_conv(out, "fusion", fusion);
  decoder.append_to(out, "decoder");
  return out;
}

std::size_t ModelParams::parameter_count() {
  std::size_t n = 0;
  for (auto& [name, p] : named_parameters()) n += p->value.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& [name, p] : named_parameters()) p->zero_grad();
}

namespace {

void require_image(Var x, std::size_t channels, const char* what) {
  const Shape s = x.shape();
  if (s.size() != 3 || s[2] != channels)
    throw ShapeError(std::string(what) + ": expected H×W×" + std::to_string(channels) + ", got " + shape_str(s));
  if (s[0] % 4 != 0 || s[1] % 4 != 0)
    throw ShapeError(std::string(what) + ": image size " + shape_str(s) + " not divisible by 4");
}

struct EncoderTrace {
  Var s1, s2, features;
};

// Halving block: 3×3 conv + relu, then a 2× bilinear downsample, which under
// half-pixel centers is exactly 2×2 mean pooling.
Var down_block(Var x, ConvParams& p) {
  Var y = conv_relu(x, p);
  return ad::bilinear_resize(y, y.shape()[0] / 2, y.shape()[1] / 2);
}

EncoderTrace run_encoder(Var x, EncoderParams& e) {
  Var s1 = down_block(x, e.stage1);
  Var s2 = down_block(s1, e.stage2);
  return {s1, s2, conv_relu(s2, e.stage3)};
}

}  // namespace

Var encode_reference(Var masked_rgb, ModelParams& p) {
  require_image(masked_rgb, 3, "encode_reference");
  if (p.config.single_encoder) {
    const Shape s = masked_rgb.shape();
    Var zeros = masked_rgb.graph->constant(Tensor({s[0], s[1], 1}));
    return run_encoder(ad::concat_channels(masked_rgb, zeros), p.tar_encoder).features;
  }
  return run_encoder(masked_rgb, p.ref_encoder).features;
}

TargetEncoding encode_target(Var rgb, Var prev_prob, ModelParams& p) {
  require_image(rgb, 3, "encode_target");
  const Shape s = rgb.shape();
  const Shape m = prev_prob.shape();
  if (m.size() != 3 || m[0] != s[0] || m[1] != s[1] || m[2] != 1)
    throw ShapeError("encode_target: mask " + shape_str(m) + " does not match image " + shape_str(s));
  const EncoderTrace t = run_encoder(ad::concat_channels(rgb, prev_prob), p.tar_encoder);
  return {t.features, {t.s1, t.s2}};
}

Var reference_branch(Var f_ref, Var f_tar, NlpmmParams& nlpmm, CmState& cm, bool use_cm) {
  Var matched = nlpmm_forward(f_ref, f_tar, nlpmm);
  return use_cm ? cm_forward(matched, cm) : matched;
}

Var fuse(Var m_first, Var m_prev, ConvParams& fusion) {
  if (m_first.shape() != m_prev.shape())
    throw ShapeError("fuse: " + shape_str(m_first.shape()) + " vs " + shape_str(m_prev.shape()));
  return conv(ad::concat_channels(m_first, m_prev), fusion);
}

Var decode(Var fused, const SkipStack& skips, DecoderParams& p, std::size_t out_h, std::size_t out_w) {
  const Shape f = fused.shape();
  const Shape s1 = skips.s1.shape();
  const Shape s2 = skips.s2.shape();
  if (f.size() != 3 || s2.size() != 3 || s1.size() != 3 || s2[0] != f[0] || s2[1] != f[1] || s1[0] != 2 * f[0] ||
      s1[1] != 2 * f[1])
    throw ShapeError("decode: fused " + shape_str(f) + " inconsistent with skips " + shape_str(s1) + ", " +
                     shape_str(s2));
  Var x = conv_relu(ad::concat_channels(fused, skips.s2), p.refine1);
  x = ad::bilinear_resize(x, s1[0], s1[1]);
  x = conv_relu(ad::concat_channels(x, skips.s1), p.refine2);
  Var logits = conv(x, p.head);
  return ad::bilinear_resize(logits, out_h, out_w);
}

Var forward_with_first_features(Var first_features, Var prev_masked, Var cur_rgb, Var prev_prob, ModelParams& p) {
  if (prev_masked.shape() != cur_rgb.shape())
    throw ShapeError("forward: previous frame " + shape_str(prev_masked.shape()) + " vs current " +
                     shape_str(cur_rgb.shape()));
  const TargetEncoding tar = encode_target(cur_rgb, prev_prob, p);
  Var f_prev = encode_reference(prev_masked, p);
  Var m_first = reference_branch(first_features, tar.features, p.nlpmm_first, p.cm_first, p.config.use_cm);
  Var m_prev = reference_branch(f_prev, tar.features, p.nlpmm_prev, p.cm_prev, p.config.use_cm);
  Var fused = fuse(m_first, m_prev, p.fusion);
  const Shape s = cur_rgb.shape();
  return ad::sigmoid(decode(fused, tar.skips, p.decoder, s[0], s[1]));
}

Var forward_single_object(Var first_masked, Var prev_masked, Var cur_rgb, Var prev_prob, ModelParams& p) {
  if (first_masked.shape() != cur_rgb.shape())
    throw ShapeError("forward: first frame " + shape_str(first_masked.shape()) + " vs current " +
                     shape_str(cur_rgb.shape()));
  return forward_with_first_features(encode_reference(first_masked, p), prev_masked, cur_rgb, prev_prob, p);
}

Tensor forward_single_object(const Tensor& first_masked, const Tensor& prev_masked, const Tensor& cur_rgb,
                             const Tensor& prev_prob, ModelParams& p) {
  Graph g(false);
  return forward_single_object(g.constant(first_masked), g.constant(prev_masked), g.constant(cur_rgb),
                               g.constant(prev_prob), p)
      .value();
}

// --- checkpoint ---

namespace {

constexpr char kMagic[] = "NPMCA1";
constexpr std::size_t kMagicLen = 6;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  template <typename T>
  T get_le(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) throw FormatError(std::string("checkpoint truncated reading ") + what, pos_);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated reading ") + what, pos_);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ModelParams& p) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ArgumentError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, kMagicLen);
  for (auto& [name, param] : p.named_parameters()) {
    const Tensor& t = param->value;
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.data()) put_le<double>(os, v);
  }
  if (!os) throw ArgumentError("failed writing checkpoint: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ModelParams& p) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open checkpoint: " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
  if (r.get_bytes(kMagicLen, "magic") != std::string(kMagic, kMagicLen)) throw FormatError("bad checkpoint magic", 0);

  std::map<std::string, Tensor> loaded;
  while (!r.done()) {
    const std::size_t start = r.pos();
    const auto name_len = r.get_le<std::uint32_t>("name length");
    if (name_len == 0 || name_len > 4096) throw FormatError("implausible parameter name length", start);
    std::string name = r.get_bytes(name_len, "name");
    const auto rank = r.get_le<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) throw FormatError("implausible rank for " + name, start);
    Shape shape(rank);
    for (auto& d : shape) {
      d = r.get_le<std::uint64_t>("dims");
      if (d == 0 || d > (1u << 24)) throw FormatError("implausible dimension for " + name, start);
    }
    Tensor t(shape);
    for (auto& v : t.data()) v = r.get_le<double>("payload");
    if (!loaded.emplace(std::move(name), std::move(t)).second) throw FormatError("duplicate parameter", start);
  }

  auto params = p.named_parameters();
  if (loaded.size() != params.size())
    throw FormatError("checkpoint has " + std::to_string(loaded.size()) + " parameters, model expects " +
                          std::to_string(params.size()),
                      r.pos());
  for (auto& [name, param] : params) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw FormatError("checkpoint lacks parameter " + name, r.pos());
    if (it->second.shape() != param->value.shape())
      throw FormatError("parameter " + name + " has shape " + shape_str(it->second.shape()) + ", model expects " +
                            shape_str(param->value.shape()),
                        r.pos());
    param->value = std::move(it->second);
    param->zero_grad();
  }
}

}  // namespace npmca
