#include "npmca/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "npmca/errors.hpp"

namespace npmca::oracle {

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < a.dim(1); ++t) s += a.at(i, t) * b.at(t, j);
      c.at(i, j) = s;
    }
  return c;
}

Tensor softmax_columns(const Tensor& m) {
  Tensor out(m.shape());
  for (std::size_t j = 0; j < m.dim(1); ++j) {
    double mx = m.at(0, j);
    for (std::size_t i = 1; i < m.dim(0); ++i) mx = std::max(mx, m.at(i, j));
    double z = 0.0;
    for (std::size_t i = 0; i < m.dim(0); ++i) z += std::exp(m.at(i, j) - mx);
    for (std::size_t i = 0; i < m.dim(0); ++i) out.at(i, j) = std::exp(m.at(i, j) - mx) / z;
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad) {
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2);
  const std::size_t kh = w.dim(0), kw = w.dim(1), cout = w.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor out({oh, ow, cout});
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t co = 0; co < cout; ++co) {
        double s = b[co];
        for (std::size_t ky = 0; ky < kh; ++ky)
          for (std::size_t kx = 0; kx < kw; ++kx)
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              s += x.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ci) *
                   w[((ky * kw + kx) * cin + ci) * cout + co];
            }
        out.at(oy, ox, co) = s;
      }
  return out;
}

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  Tensor out({out_h, out_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy)
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double sy = std::clamp((oy + 0.5) * static_cast<double>(h) / static_cast<double>(out_h) - 0.5, 0.0,
                                   static_cast<double>(h - 1));
      const double sx = std::clamp((ox + 0.5) * static_cast<double>(w) / static_cast<double>(out_w) - 0.5, 0.0,
                                   static_cast<double>(w - 1));
      for (std::size_t k = 0; k < c; ++k) {
        // Sum of tent weights over all source pixels.
        double v = 0.0;
        for (std::size_t y = 0; y < h; ++y) {
          const double wy = std::max(0.0, 1.0 - std::abs(sy - static_cast<double>(y)));
          if (wy == 0.0) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const double wx = std::max(0.0, 1.0 - std::abs(sx - static_cast<double>(xx)));
            v += wy * wx * x.at(y, xx, k);
          }
        }
        out.at(oy, ox, k) = v;
      }
    }
  return out;
}

Tensor avg_pool2(const Tensor& x) {
  Tensor out({x.dim(0) / 2, x.dim(1) / 2, x.dim(2)});
  for (std::size_t y = 0; y < out.dim(0); ++y)
    for (std::size_t xx = 0; xx < out.dim(1); ++xx)
      for (std::size_t c = 0; c < x.dim(2); ++c)
        out.at(y, xx, c) = 0.25 * (x.at(2 * y, 2 * xx, c) + x.at(2 * y, 2 * xx + 1, c) + x.at(2 * y + 1, 2 * xx, c) +
                                   x.at(2 * y + 1, 2 * xx + 1, c));
  return out;
}

Tensor nlpmm(const Tensor& f_ref, const Tensor& f_tar, const ConvParams& reduce_ref, const ConvParams& reduce_tar) {
  const Tensor r = conv2d(f_ref, reduce_ref.weight.value, reduce_ref.bias.value, 1, 1);
  const Tensor t = conv2d(f_tar, reduce_tar.weight.value, reduce_tar.bias.value, 1, 1);
  const std::size_t h = r.dim(0), w = r.dim(1), c = r.dim(2), n = h * w;
  // S[i][j] = <ref_i, tar_j>
  std::vector<double> s(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < c; ++k) d += r[i * c + k] * t[j * c + k];
      s[i * n + j] = d;
    }
  Tensor out({h, w, c});
  for (std::size_t j = 0; j < n; ++j) {
    double mx = s[j];
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, s[i * n + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(s[i * n + j] - mx);
    for (std::size_t k = 0; k < c; ++k) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += r[i * c + k] * std::exp(s[i * n + j] - mx) / z;
      out[j * c + k] = v;
    }
  }
  return out;
}

Tensor channel_attention(const Tensor& f_in, double gamma) {
  const std::size_t n = f_in.dim(0) * f_in.dim(1), c = f_in.dim(2);
  std::vector<double> a(c * c, 0.0);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t p = 0; p < n; ++p) a[i * c + j] += f_in[p * c + i] * f_in[p * c + j];
  std::vector<double> an(c * c);
  for (std::size_t j = 0; j < c; ++j) {
    double mx = a[j];
    for (std::size_t i = 0; i < c; ++i) mx = std::max(mx, a[i * c + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < c; ++i) z += std::exp(a[i * c + j] - mx);
    for (std::size_t i = 0; i < c; ++i) an[i * c + j] = std::exp(a[i * c + j] - mx) / z;
  }
  Tensor out(f_in.shape());
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t j = 0; j < c; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < c; ++i) v += f_in[p * c + i] * an[i * c + j];
      out[p * c + j] = gamma * v + f_in[p * c + j];
    }
  return out;
}

namespace {

Tensor relu(Tensor x) {
  for (auto& v : x.data()) v = std::max(v, 0.0);
  return x;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  const std::size_t ca = a.dim(2), cb = b.dim(2);
  Tensor out({a.dim(0), a.dim(1), ca + cb});
  for (std::size_t y = 0; y < a.dim(0); ++y)
    for (std::size_t x = 0; x < a.dim(1); ++x) {
      for (std::size_t k = 0; k < ca; ++k) out.at(y, x, k) = a.at(y, x, k);
      for (std::size_t k = 0; k < cb; ++k) out.at(y, x, ca + k) = b.at(y, x, k);
    }
  return out;
}

Tensor conv_layer(const Tensor& x, const ConvParams& p) {
  return conv2d(x, p.weight.value, p.bias.value, p.stride, p.pad);
}

Tensor encode_ref(const Tensor& x, const ModelParams& p) {
  if (p.config.single_encoder) return encode(concat(x, Tensor({x.dim(0), x.dim(1), 1})), p.tar_encoder).features;
  return encode(x, p.ref_encoder).features;
}

}  // namespace

EncoderOutputs encode(const Tensor& x, const EncoderParams& e) {
  EncoderOutputs out;
  out.s1 = avg_pool2(relu(conv_layer(x, e.stage1)));
  out.s2 = avg_pool2(relu(conv_layer(out.s1, e.stage2)));
  out.features = relu(conv_layer(out.s2, e.stage3));
  return out;
}

Tensor decode(const Tensor& fused, const Tensor& s1, const Tensor& s2, const DecoderParams& d, std::size_t out_h,
              std::size_t out_w) {
  Tensor x = relu(conv_layer(concat(fused, s2), d.refine1));
  x = bilinear_resize(x, s1.dim(0), s1.dim(1));
  x = relu(conv_layer(concat(x, s1), d.refine2));
  return bilinear_resize(conv_layer(x, d.head), out_h, out_w);
}

Tensor model_forward(const Tensor& first_masked, const Tensor& prev_masked, const Tensor& cur_rgb,
                     const Tensor& prev_prob, const ModelParams& p) {
  const EncoderOutputs tar = encode(concat(cur_rgb, prev_prob), p.tar_encoder);
  const Tensor f_first = encode_ref(first_masked, p);
  const Tensor f_prev = encode_ref(prev_masked, p);
  Tensor m_first = nlpmm(f_first, tar.features, p.nlpmm_first.reduce_ref, p.nlpmm_first.reduce_tar);
  Tensor m_prev = nlpmm(f_prev, tar.features, p.nlpmm_prev.reduce_ref, p.nlpmm_prev.reduce_tar);
  if (p.config.use_cm) {
    m_first = channel_attention(m_first, p.cm_first.gamma());
    m_prev = channel_attention(m_prev, p.cm_prev.gamma());
  }
  const Tensor fused = conv_layer(concat(m_first, m_prev), p.fusion);
  Tensor logits = decode(fused, tar.s1, tar.s2, p.decoder, cur_rgb.dim(0), cur_rgb.dim(1));
  for (auto& v : logits.data()) v = 1.0 / (1.0 + std::exp(-v));
  return logits;
}

std::vector<double> aggregate_pixel(const std::vector<double>& object_probs) {
  const double eps = 1e-7;
  std::vector<double> p(object_probs.size() + 1);
  double bg = 1.0;
  for (std::size_t m = 0; m < object_probs.size(); ++m) {
    p[m + 1] = std::min(std::max(object_probs[m], eps), 1.0 - eps);
    bg *= 1.0 - p[m + 1];
  }
  p[0] = std::min(std::max(bg, eps), 1.0 - eps);
  double z = 0.0;
  for (double v : p) z += v / (1.0 - v);
  std::vector<double> out(p.size());
  for (std::size_t m = 0; m < p.size(); ++m) out[m] = p[m] / (1.0 - p[m]) / z;
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

double central_difference(const std::function<double()>& f, Tensor& t, std::size_t i, double h) {
  const double orig = t[i];
  t[i] = orig + h;
  const double up = f();
  t[i] = orig - h;
  const double down = f();
  t[i] = orig;
  return (up - down) / (2.0 * h);
}

}  // namespace npmca::oracle
