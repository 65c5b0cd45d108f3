#include "npmca/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "npmca/errors.hpp"
#include "npmca/rng.hpp"

namespace npmca {

const char* shape_kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Triangle: return "triangle";
  }
  return "?";
}

ShapeKind parse_shape_kind(const std::string& s) {
  if (s == "disc") return ShapeKind::Disc;
  if (s == "rectangle") return ShapeKind::Rectangle;
  if (s == "triangle") return ShapeKind::Triangle;
  throw ConfigError("unknown shape kind '" + s + "'");
}

double ObjectState::extent_x() const { return a; }
double ObjectState::extent_y() const { return kind == ShapeKind::Rectangle ? b : a; }

bool ObjectState::contains(double x, double y) const {
  const double dx = x - cx, dy = y - cy;
  switch (kind) {
    case ShapeKind::Disc: return dx * dx + dy * dy <= a * a;
    case ShapeKind::Rectangle: return std::abs(dx) <= a && std::abs(dy) <= b;
    case ShapeKind::Triangle:
      // Apex (cx, cy − a), base from (cx − a, cy + a) to (cx + a, cy + a).
      return dy <= a && 2.0 * std::abs(dx) <= dy + a;
  }
  return false;
}

void SceneConfig::validate() const {
  if (height < 8 || width < 8) throw ConfigError("scene resolution too small");
  if (frames < 2) throw ConfigError("scene needs at least 2 frames");
  if (objects.empty()) throw ConfigError("scene needs at least one object");
  if (objects.size() > 255) throw ConfigError("at most 255 objects fit in an 8-bit mask");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    // object_state clamps positions, so check the raw t = 0 geometry.
    const ObjectSpec& o = objects[i];
    const double ex = o.size_a, ey = o.kind == ShapeKind::Rectangle ? o.size_b : o.size_a;
    if (ex <= 0.0 || ey <= 0.0) throw ConfigError("object " + std::to_string(i) + " has non-positive size");
    if (o.cx - ex < 0.0 || o.cx + ex > static_cast<double>(width - 1) || o.cy - ey < 0.0 ||
        o.cy + ey > static_cast<double>(height - 1))
      throw ConfigError("object " + std::to_string(i) + " is not inside the frame at t = 0");
  }
  for (const auto& e : occlusions) {
    const auto m = static_cast<int>(objects.size());
    if (e.occluder < 0 || e.occluder >= m || e.occluded < 0 || e.occluded >= m || e.occluder == e.occluded)
      throw ConfigError("occlusion event names invalid objects");
    if (e.start < 0 || e.end < e.start) throw ConfigError("occlusion event has an invalid frame window");
  }
}

ObjectState object_state(const SceneConfig& cfg, std::size_t object, std::size_t frame) {
  const ObjectSpec& o = cfg.objects.at(object);
  const double t = static_cast<double>(frame);
  const double s = std::pow(1.0 + o.scale_rate, t);
  ObjectState st{o.kind, 0.0, 0.0, o.size_a * s, o.size_b * s, {}};
  for (int c = 0; c < 3; ++c) st.color[c] = std::clamp(o.color[c] + o.color_drift[c] * t, 0.0, 1.0);
  // Translation clamps so the shape's extent stays inside the frame.
  const double max_x = static_cast<double>(cfg.width - 1), max_y = static_cast<double>(cfg.height - 1);
  const double ex = std::min(st.extent_x(), max_x / 2.0), ey = std::min(st.extent_y(), max_y / 2.0);
  st.cx = std::clamp(o.cx + o.vx * t, ex, max_x - ex);
  st.cy = std::clamp(o.cy + o.vy * t, ey, max_y - ey);
  return st;
}

std::vector<std::size_t> draw_order(const SceneConfig& cfg, std::size_t frame) {
  std::vector<double> depth(cfg.objects.size());
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = static_cast<double>(i);
  double top = static_cast<double>(depth.size());
  for (const auto& e : cfg.occlusions) {
    if (static_cast<int>(frame) < e.start || static_cast<int>(frame) > e.end) continue;
    if (depth[static_cast<std::size_t>(e.occluder)] < depth[static_cast<std::size_t>(e.occluded)])
      depth[static_cast<std::size_t>(e.occluder)] = top++;
  }
  std::vector<std::size_t> order(depth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return depth[x] < depth[y]; });
  return order;
}

std::size_t VideoSequence::num_objects() const {
  int m = 0;
  for (const auto& mask : masks) m = std::max(m, mask.max_label());
  return static_cast<std::size_t>(m);
}

namespace {

// Smooth multi-frequency texture, one set of waves per channel.
Tensor background_texture(const SceneConfig& cfg) {
  Rng rng(cfg.background_seed);
  Tensor bg({cfg.height, cfg.width, 3});
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::vector<Wave>, 3> waves;
  std::array<double, 3> base{};
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.3, 0.7);
    for (int k = 0; k < 4; ++k)
      waves[c].push_back({rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(0.0, 2.0 * std::numbers::pi),
                          rng.uniform(0.03, 0.09)});
  }
  for (std::size_t y = 0; y < cfg.height; ++y)
    for (std::size_t x = 0; x < cfg.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = base[c];
        for (const auto& w : waves[c])
          v += w.amp * std::sin(w.fx * static_cast<double>(x) + w.fy * static_cast<double>(y) + w.phase);
        bg.at(y, x, static_cast<std::size_t>(c)) = std::clamp(v, 0.0, 1.0);
      }
  return bg;
}

}  // namespace

VideoSequence generate_sequence(const SceneConfig& cfg, std::uint64_t seed, const std::string& name) {
  cfg.validate();
  // Fixed-pattern sensor noise: one field per sequence, so a static scene
  // renders identical frames.
  Rng noise_rng(derive_seed(seed, 0x6e6f697365ULL));
  Tensor noise({cfg.height, cfg.width, 3});
  if (cfg.noise > 0.0)
    for (auto& v : noise.data()) v = cfg.noise * noise_rng.uniform(-1.0, 1.0);
  const Tensor bg = background_texture(cfg);
  VideoSequence seq;
  seq.name = name;
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    Tensor frame = bg;
    LabelMask mask(cfg.height, cfg.width);
    for (std::size_t obj : draw_order(cfg, t)) {
      const ObjectState st = object_state(cfg, obj, t);
      const auto x0 = static_cast<long>(std::floor(st.cx - st.extent_x()));
      const auto x1 = static_cast<long>(std::ceil(st.cx + st.extent_x()));
      const auto y0 = static_cast<long>(std::floor(st.cy - st.extent_y()));
      const auto y1 = static_cast<long>(std::ceil(st.cy + st.extent_y()));
      for (long y = std::max(0L, y0); y <= std::min<long>(y1, static_cast<long>(cfg.height) - 1); ++y)
        for (long x = std::max(0L, x0); x <= std::min<long>(x1, static_cast<long>(cfg.width) - 1); ++x) {
          if (!st.contains(static_cast<double>(x), static_cast<double>(y))) continue;
          const auto uy = static_cast<std::size_t>(y), ux = static_cast<std::size_t>(x);
          mask.at(uy, ux) = static_cast<std::uint8_t>(obj + 1);
          for (std::size_t c = 0; c < 3; ++c) frame.at(uy, ux, c) = st.color[c];
        }
    }
    if (cfg.noise > 0.0)
      for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = std::clamp(frame[i] + noise[i], 0.0, 1.0);
    seq.frames.push_back(std::move(frame));
    seq.masks.push_back(std::move(mask));
  }
  return seq;
}

SceneConfig random_scene(const SceneOptions& opts, Rng& rng) {
  SceneConfig cfg;
  cfg.height = opts.height;
  cfg.width = opts.width;
  cfg.frames = opts.frames;
  cfg.background_seed = rng.next_u64();
  const auto min_objects = opts.occlusion_heavy ? std::min<std::size_t>(2, opts.max_objects) : 1;
  const auto m = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(min_objects),
                                                          static_cast<std::int64_t>(opts.max_objects)));
  const double w = static_cast<double>(opts.width), h = static_cast<double>(opts.height);
  const double base = std::min(w, h);
  for (std::size_t i = 0; i < m; ++i) {
    ObjectSpec o;
    o.kind = static_cast<ShapeKind>(rng.uniform_int(0, 2));
    o.size_a = rng.uniform(0.10, 0.20) * base;
    o.size_b = o.kind == ShapeKind::Rectangle ? rng.uniform(0.10, 0.20) * base : o.size_a;
    const double ex = o.size_a, ey = o.kind == ShapeKind::Rectangle ? o.size_b : o.size_a;
    o.cx = rng.uniform(ex + 1.0, w - 2.0 - ex);
    o.cy = rng.uniform(ey + 1.0, h - 2.0 - ey);
    o.vx = rng.uniform(-2.0, 2.0);
    o.vy = rng.uniform(-1.5, 1.5);
    o.scale_rate = rng.uniform(-0.02, 0.02);
    // Saturated colors: one strong channel, one weak, one random.
    const auto strong = static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t weak = (strong + 1 + static_cast<std::size_t>(rng.uniform_int(0, 1))) % 3;
    for (std::size_t c = 0; c < 3; ++c) o.color[c] = rng.uniform(0.0, 1.0);
    o.color[strong] = rng.uniform(0.85, 1.0);
    o.color[weak] = rng.uniform(0.0, 0.15);
    for (auto& d : o.color_drift) d = rng.uniform(-0.02, 0.02);
    cfg.objects.push_back(o);
  }
  const bool cross = m >= 2 && (opts.occlusion_heavy || rng.uniform() < opts.crossing_probability);
  if (cross) {
    // Steer object 1 so its center meets object 0's around the middle frame.
    const double t_meet = std::max(1.0, std::floor(static_cast<double>(opts.frames - 1) / 2.0));
    ObjectSpec& a = cfg.objects[0];
    ObjectSpec& b = cfg.objects[1];
    const double tx = a.cx + a.vx * t_meet, ty = a.cy + a.vy * t_meet;
    b.vx = std::clamp((tx - b.cx) / t_meet, -4.0, 4.0);
    b.vy = std::clamp((ty - b.cy) / t_meet, -4.0, 4.0);
    const bool front_is_second = rng.uniform() < 0.5;
    const int lo = static_cast<int>(std::max(0.0, t_meet - 2.0));
    const int hi = static_cast<int>(std::min(static_cast<double>(opts.frames - 1), t_meet + 2.0));
    cfg.occlusions.push_back({front_is_second ? 1 : 0, front_is_second ? 0 : 1, lo, hi});
  }
  cfg.validate();
  return cfg;
}

// --- scene.cfg serialization ---

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(std::initializer_list<double> vs) {
  std::string s;
  for (double v : vs) s += (s.empty() ? "" : ",") + fmt_double(v);
  return s;
}

std::vector<double> parse_list(const std::string& s, std::size_t n, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number in '" + key + "'");
    }
  }
  if (out.size() != n) throw ConfigError("expected " + std::to_string(n) + " values for '" + key + "'");
  return out;
}

}  // namespace

std::string SceneConfig::to_text() const {
  std::ostringstream os;
  os << "height=" << height << "\nwidth=" << width << "\nframes=" << frames << "\nnoise=" << fmt_double(noise)
     << "\nbackground_seed=" << background_seed << "\nobjects=" << objects.size() << "\n";
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string p = "object." + std::to_string(i) + ".";
    os << p << "kind=" << shape_kind_name(o.kind) << "\n"
       << p << "center=" << fmt_list({o.cx, o.cy}) << "\n"
       << p << "size=" << fmt_list({o.size_a, o.size_b}) << "\n"
       << p << "velocity=" << fmt_list({o.vx, o.vy}) << "\n"
       << p << "scale_rate=" << fmt_double(o.scale_rate) << "\n"
       << p << "color=" << fmt_list({o.color[0], o.color[1], o.color[2]}) << "\n"
       << p << "color_drift=" << fmt_list({o.color_drift[0], o.color_drift[1], o.color_drift[2]}) << "\n";
  }
  os << "occlusions=" << occlusions.size() << "\n";
  for (std::size_t i = 0; i < occlusions.size(); ++i) {
    const auto& e = occlusions[i];
    os << "occlusion." << i << "=" << e.occluder << "," << e.occluded << "," << e.start << "," << e.end << "\n";
  }
  return os.str();
}

SceneConfig SceneConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("scene.cfg line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("scene.cfg lacks key '" + k + "'");
    return it->second;
  };
  auto get_u = [&](const std::string& k) {
    try {
      return static_cast<std::size_t>(std::stoull(get(k)));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad integer for '" + k + "'");
    }
  };
  SceneConfig cfg;
  cfg.height = get_u("height");
  cfg.width = get_u("width");
  cfg.frames = get_u("frames");
  cfg.noise = parse_list(get("noise"), 1, "noise")[0];
  cfg.background_seed = std::stoull(get("background_seed"));
  const std::size_t m = get_u("objects");
  for (std::size_t i = 0; i < m; ++i) {
    const std::string p = "object." + std::to_string(i) + ".";
    ObjectSpec o;
    o.kind = parse_shape_kind(get(p + "kind"));
    auto c = parse_list(get(p + "center"), 2, p + "center");
    auto s = parse_list(get(p + "size"), 2, p + "size");
    auto v = parse_list(get(p + "velocity"), 2, p + "velocity");
    auto col = parse_list(get(p + "color"), 3, p + "color");
    auto drift = parse_list(get(p + "color_drift"), 3, p + "color_drift");
    o.cx = c[0], o.cy = c[1], o.size_a = s[0], o.size_b = s[1], o.vx = v[0], o.vy = v[1];
    o.scale_rate = parse_list(get(p + "scale_rate"), 1, p + "scale_rate")[0];
    for (int k = 0; k < 3; ++k) o.color[k] = col[k], o.color_drift[k] = drift[k];
    cfg.objects.push_back(o);
  }
  const std::size_t n_occ = get_u("occlusions");
  for (std::size_t i = 0; i < n_occ; ++i) {
    const std::string k = "occlusion." + std::to_string(i);
    auto e = parse_list(get(k), 4, k);
    cfg.occlusions.push_back({static_cast<int>(e[0]), static_cast<int>(e[1]), static_cast<int>(e[2]), static_cast<int>(e[3])});
  }
  cfg.validate();
  return cfg;
}

// --- affine augmentation ---

AffineTransform AffineTransform::sample(const AffineRanges& r, std::size_t height, std::size_t width, Rng& rng) {
  AffineTransform t;
  t.angle = rng.uniform(-r.max_rotation_deg, r.max_rotation_deg) * std::numbers::pi / 180.0;
  t.scale = rng.uniform(r.min_scale, r.max_scale);
  t.tx = rng.uniform(-r.max_translation, r.max_translation) * static_cast<double>(width);
  t.ty = rng.uniform(-r.max_translation, r.max_translation) * static_cast<double>(height);
  return t;
}

std::array<double, 2> AffineTransform::inverse(double x, double y, std::size_t height, std::size_t width) const {
  // forward: p' = c + s·R(p − c) + t, so p = c + Rᵀ(p' − c − t)/s
  const double cx = (static_cast<double>(width) - 1.0) / 2.0, cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double dx = x - cx - tx, dy = y - cy - ty;
  const double c = std::cos(angle), s = std::sin(angle);
  return {cx + (c * dx + s * dy) / scale, cy + (-s * dx + c * dy) / scale};
}

Tensor warp_image(const Tensor& rgb, const AffineTransform& t) {
  const std::size_t h = rgb.dim(0), w = rgb.dim(1), ch = rgb.dim(2);
  Tensor out(rgb.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      auto [sx, sy] = t.inverse(static_cast<double>(x), static_cast<double>(y), h, w);
      sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx)), y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < ch; ++c)
        out.at(y, x, c) = (1.0 - fy) * ((1.0 - fx) * rgb.at(y0, x0, c) + fx * rgb.at(y0, x1, c)) +
                          fy * ((1.0 - fx) * rgb.at(y1, x0, c) + fx * rgb.at(y1, x1, c));
    }
  return out;
}

LabelMask warp_mask(const LabelMask& mask, const AffineTransform& t) {
  const std::size_t h = mask.height(), w = mask.width();
  LabelMask out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto [sx, sy] = t.inverse(static_cast<double>(x), static_cast<double>(y), h, w);
      const long ix = std::lround(sx), iy = std::lround(sy);
      if (ix >= 0 && iy >= 0 && ix < static_cast<long>(w) && iy < static_cast<long>(h))
        out.at(y, x) = mask.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
    }
  return out;
}

Triplet apply_transforms(const Tensor& rgb, const LabelMask& mask, const std::array<AffineTransform, 3>& t) {
  if (rgb.rank() != 3 || rgb.dim(0) != mask.height() || rgb.dim(1) != mask.width())
    throw ShapeError("apply_transforms: image " + shape_str(rgb.shape()) + " does not match mask");
  Triplet out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.frames[i] = warp_image(rgb, t[i]);
    out.masks[i] = warp_mask(mask, t[i]);
  }
  return out;
}

Triplet synth_pretrain_pair(const Tensor& rgb, const LabelMask& mask, std::uint64_t seed, const AffineRanges& ranges) {
  if (mask.max_label() == 0) throw ArgumentError("synth_pretrain_pair: mask has no object pixels");
  Rng rng(seed);
  std::array<AffineTransform, 3> t;
  for (auto& x : t) x = AffineTransform::sample(ranges, mask.height(), mask.width(), rng);
  return apply_transforms(rgb, mask, t);
}

TripletIndices sample_training_triplet(std::size_t frame_count, std::size_t max_skip, Rng& rng) {
  if (frame_count < 3) throw ArgumentError("sample_training_triplet: need at least 3 frames");
  if (max_skip < 1) throw ArgumentError("sample_training_triplet: max_skip must be ≥ 1");
  const std::size_t k_max = std::min(max_skip, frame_count - 2);
  const auto k = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(k_max)));
  const auto t = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(k + 1), static_cast<std::int64_t>(frame_count - 1)));
  return {0, t - k, t};
}

TripletIndices sample_training_triplet(const VideoSequence& video, std::size_t max_skip, std::uint64_t seed) {
  Rng rng(seed);
  return sample_training_triplet(video.frames.size(), max_skip, rng);
}

// --- on-disk layout ---

std::string frame_file_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.%s", index, ext);
  return buf;
}

void write_sequence(const std::filesystem::path& root, const VideoSequence& seq, const SceneConfig& cfg,
                    std::uint64_t seed) {
  namespace fs = std::filesystem;
  const fs::path dir = root / seq.name;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "masks");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) write_ppm(dir / "frames" / frame_file_name(t, "ppm"), seq.frames[t]);
  for (std::size_t t = 0; t < seq.masks.size(); ++t) write_pgm(dir / "masks" / frame_file_name(t, "pgm"), seq.masks[t]);
  write_file(dir / "scene.cfg", "seed=" + std::to_string(seed) + "\n" + cfg.to_text());
}

VideoSequence read_sequence(const std::filesystem::path& seq_dir) {
  namespace fs = std::filesystem;
  VideoSequence seq;
  seq.name = seq_dir.filename().string();
  for (std::size_t t = 0;; ++t) {
    const fs::path f = seq_dir / "frames" / frame_file_name(t, "ppm");
    if (!fs::exists(f)) break;
    seq.frames.push_back(read_ppm(f));
  }
  if (seq.frames.empty()) throw ArgumentError("no frames found under " + (seq_dir / "frames").string());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const fs::path m = seq_dir / "masks" / frame_file_name(t, "pgm");
    if (!fs::exists(m)) break;
    seq.masks.push_back(read_pgm(m));
  }
  return seq;
}

std::vector<std::string> list_sequences(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  if (!fs::is_directory(root)) return names;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::is_directory(e.path() / "frames")) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> validate_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;
  const auto names = list_sequences(root);
  if (names.empty()) problems.push_back("no sequences under " + root.string());
  for (const auto& name : names) {
    const fs::path dir = root / name;
    try {
      const SceneConfig cfg = SceneConfig::from_text(read_file(dir / "scene.cfg"));
      const VideoSequence seq = read_sequence(dir);
      if (seq.frames.size() != cfg.frames)
        problems.push_back(name + ": " + std::to_string(seq.frames.size()) + " frames, scene.cfg says " +
                           std::to_string(cfg.frames));
      if (seq.masks.size() != seq.frames.size())
        problems.push_back(name + ": " + std::to_string(seq.masks.size()) + " masks for " +
                           std::to_string(seq.frames.size()) + " frames");
      for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        if (seq.frames[t].dim(0) != cfg.height || seq.frames[t].dim(1) != cfg.width)
          problems.push_back(name + ": frame " + std::to_string(t) + " has the wrong resolution");
        if (t < seq.masks.size()) {
          if (seq.masks[t].height() != cfg.height || seq.masks[t].width() != cfg.width)
            problems.push_back(name + ": mask " + std::to_string(t) + " has the wrong resolution");
          if (seq.masks[t].max_label() > static_cast<int>(cfg.objects.size()))
            problems.push_back(name + ": mask " + std::to_string(t) + " has labels beyond the object count");
        }
      }
    } catch (const std::exception& e) {
      problems.push_back(name + ": " + e.what());
    }
  }
  return problems;
}

}  // namespace npmca
