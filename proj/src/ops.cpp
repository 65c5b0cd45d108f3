#include "npmca/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "npmca/errors.hpp"

namespace npmca::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC as_mat(const Tensor& t) {
  return MapC(t.ptr(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}
Map as_mat(Tensor& t) {
  return Map(t.ptr(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}
MapC as_mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return MapC(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
Map as_mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return Map(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
}

void require_hwc(const Tensor& t, const char* op) {
  if (t.rank() != 3) throw ShapeError(std::string(op) + ": expected H×W×C, got " + shape_str(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " · " + shape_str(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  as_mat(c).noalias() = as_mat(a) * as_mat(b);
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0))
    throw ShapeError("matmul_tn: row counts disagree, " + shape_str(a.shape()) + "ᵀ · " + shape_str(b.shape()));
  Tensor c({a.dim(1), b.dim(1)});
  as_mat(c).noalias() = as_mat(a).transpose() * as_mat(b);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1))
    throw ShapeError("matmul_nt: column counts disagree, " + shape_str(a.shape()) + " · " + shape_str(b.shape()) + "ᵀ");
  Tensor c({a.dim(0), b.dim(0)});
  as_mat(c).noalias() = as_mat(a) * as_mat(b).transpose();
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  as_mat(t) = as_mat(a).transpose();
  return t;
}

Tensor softmax_columns(const Tensor& m) {
  require_matrix(m, "softmax_columns");
  if (!m.all_finite()) throw NumericError("softmax_columns: non-finite input");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out(m.shape());
  std::vector<double> col_max(cols, -INFINITY), col_sum(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) col_max[j] = std::max(col_max[j], m.at(i, j));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = std::exp(m.at(i, j) - col_max[j]);
      out.at(i, j) = e;
      col_sum[j] += e;
    }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) /= col_sum[j];
  return out;
}

Tensor softmax_columns_backward(const Tensor& y, const Tensor& dy) {
  require_same(y, dy, "softmax_columns_backward");
  const std::size_t rows = y.dim(0), cols = y.dim(1);
  std::vector<double> dot(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dot[j] += y.at(i, j) * dy.at(i, j);
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dx.at(i, j) = y.at(i, j) * (dy.at(i, j) - dot[j]);
  return dx;
}

std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t padded = in + 2 * pad;
  if (padded < k || (padded - k) % stride != 0)
    throw ShapeError("conv2d: non-integral output size for input " + std::to_string(in) + ", kernel " +
                     std::to_string(k) + ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
  return (padded - k) / stride + 1;
}

namespace {

struct ConvGeom {
  std::size_t h, w, cin, kh, kw, cout, oh, ow, stride, pad;
  std::size_t patch() const { return kh * kw * cin; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  require_hwc(x, "conv2d");
  if (w.rank() != 4) throw ShapeError("conv2d: weights must be kh×kw×Cin×Cout, got " + shape_str(w.shape()));
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), w.dim(0), w.dim(1), w.dim(3), 0, 0, stride, pad};
  if (g.kh % 2 == 0 || g.kw % 2 == 0) throw ShapeError("conv2d: kernel sizes must be odd, got " + shape_str(w.shape()));
  if (w.dim(2) != g.cin)
    throw ShapeError("conv2d: input has " + std::to_string(g.cin) + " channels, weights " + shape_str(w.shape()));
  g.oh = conv_output_size(g.h, g.kh, stride, pad);
  g.ow = conv_output_size(g.w, g.kw, stride, pad);
  return g;
}

// Rows are output pixels, columns are (ky, kx, ci) taps, matching the weight
// layout so that out = col · W.
Tensor im2col(const Tensor& x, const ConvGeom& g) {
  Tensor col({g.oh * g.ow, g.patch()});
  double* dst = col.ptr();
  const double* src = x.ptr();
  for (std::size_t oy = 0; oy < g.oh; ++oy)
    for (std::size_t ox = 0; ox < g.ow; ++ox)
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.h) || ix >= static_cast<long>(g.w)) {
            std::fill(dst, dst + g.cin, 0.0);
          } else {
            const double* p = src + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.cin;
            std::copy(p, p + g.cin, dst);
          }
          dst += g.cin;
        }
      }
  return col;
}

void col2im_add(const Tensor& col, const ConvGeom& g, Tensor& dx) {
  const double* src = col.ptr();
  double* out = dx.ptr();
  for (std::size_t oy = 0; oy < g.oh; ++oy)
    for (std::size_t ox = 0; ox < g.ow; ++ox)
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
          if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.h) && ix < static_cast<long>(g.w)) {
            double* p = out + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.cin;
            for (std::size_t c = 0; c < g.cin; ++c) p[c] += src[c];
          }
          src += g.cin;
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad) {
  const ConvGeom g = conv_geometry(x, w, stride, pad);
  if (b.size() != g.cout)
    throw ShapeError("conv2d: bias " + shape_str(b.shape()) + " does not match " + std::to_string(g.cout) + " outputs");
  Tensor out({g.oh, g.ow, g.cout});
  auto o = as_mat(out, g.oh * g.ow, g.cout);
  const auto wm = as_mat(w, g.patch(), g.cout);
  if (g.pointwise()) {
    o.noalias() = as_mat(x, g.h * g.w, g.cin) * wm;
  } else {
    const Tensor col = im2col(x, g);
    o.noalias() = as_mat(col) * wm;
  }
  const Eigen::Map<const Eigen::RowVectorXd> bias(b.ptr(), static_cast<Eigen::Index>(g.cout));
  o.rowwise() += bias;
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t stride,
                            std::size_t pad, bool need_dx, bool need_dw, bool need_db) {
  const ConvGeom g = conv_geometry(x, w, stride, pad);
  if (dy.shape() != Shape{g.oh, g.ow, g.cout})
    throw ShapeError("conv2d_backward: upstream gradient has shape " + shape_str(dy.shape()));
  Conv2dGrads grads;
  const auto d = as_mat(dy, g.oh * g.ow, g.cout);
  const auto wm = as_mat(w, g.patch(), g.cout);
  if (need_db) {
    grads.db = Tensor({g.cout});
    Eigen::Map<Eigen::RowVectorXd>(grads.db.ptr(), static_cast<Eigen::Index>(g.cout)) = d.colwise().sum();
  }
  if (g.pointwise()) {
    if (need_dw) {
      grads.dw = Tensor(w.shape());
      as_mat(grads.dw, g.patch(), g.cout).noalias() = as_mat(x, g.h * g.w, g.cin).transpose() * d;
    }
    if (need_dx) {
      grads.dx = Tensor(x.shape());
      as_mat(grads.dx, g.h * g.w, g.cin).noalias() = d * wm.transpose();
    }
    return grads;
  }
  if (need_dw) {
    const Tensor col = im2col(x, g);
    grads.dw = Tensor(w.shape());
    as_mat(grads.dw, g.patch(), g.cout).noalias() = as_mat(col).transpose() * d;
  }
  if (need_dx) {
    Tensor dcol({g.oh * g.ow, g.patch()});
    as_mat(dcol).noalias() = d * wm.transpose();
    grads.dx = Tensor(x.shape());
    col2im_add(dcol, g, grads.dx);
  }
  return grads;
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Tap> resize_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double f = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_hwc(x, "bilinear_resize");
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize: target size must be positive");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (out_h == h && out_w == w) return x;
  const auto ty = resize_taps(h, out_h);
  const auto tx = resize_taps(w, out_w);
  Tensor out({out_h, out_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const Tap& a = ty[oy];
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const Tap& b = tx[ox];
      const double* p00 = &x.at(a.i0, b.i0, 0);
      const double* p01 = &x.at(a.i0, b.i1, 0);
      const double* p10 = &x.at(a.i1, b.i0, 0);
      const double* p11 = &x.at(a.i1, b.i1, 0);
      double* dst = &out.at(oy, ox, 0);
      for (std::size_t k = 0; k < c; ++k)
        dst[k] = a.w0 * (b.w0 * p00[k] + b.w1 * p01[k]) + a.w1 * (b.w0 * p10[k] + b.w1 * p11[k]);
    }
  }
  return out;
}

Tensor bilinear_resize_backward(const Tensor& dy, std::size_t in_h, std::size_t in_w) {
  require_hwc(dy, "bilinear_resize_backward");
  const std::size_t out_h = dy.dim(0), out_w = dy.dim(1), c = dy.dim(2);
  if (out_h == in_h && out_w == in_w) return dy;
  const auto ty = resize_taps(in_h, out_h);
  const auto tx = resize_taps(in_w, out_w);
  Tensor dx({in_h, in_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const Tap& a = ty[oy];
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const Tap& b = tx[ox];
      const double* g = &dy.at(oy, ox, 0);
      double* p00 = &dx.at(a.i0, b.i0, 0);
      double* p01 = &dx.at(a.i0, b.i1, 0);
      double* p10 = &dx.at(a.i1, b.i0, 0);
      double* p11 = &dx.at(a.i1, b.i1, 0);
      for (std::size_t k = 0; k < c; ++k) {
        p00[k] += a.w0 * b.w0 * g[k];
        p01[k] += a.w0 * b.w1 * g[k];
        p10[k] += a.w1 * b.w0 * g[k];
        p11[k] += a.w1 * b.w1 * g[k];
      }
    }
  }
  return dx;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s;
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Tensor sigmoid(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = sigmoid(a[i]);
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_hwc(a, "concat_channels");
  require_hwc(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
    throw ShapeError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t n = a.dim(0) * a.dim(1), ca = a.dim(2), cb = b.dim(2);
  Tensor out({a.dim(0), a.dim(1), ca + cb});
  for (std::size_t p = 0; p < n; ++p) {
    std::copy_n(a.ptr() + p * ca, ca, out.ptr() + p * (ca + cb));
    std::copy_n(b.ptr() + p * cb, cb, out.ptr() + p * (ca + cb) + ca);
  }
  return out;
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t end) {
  require_hwc(x, "slice_channels");
  const std::size_t c = x.dim(2);
  if (begin >= end || end > c) throw ShapeError("slice_channels: bad channel range for " + shape_str(x.shape()));
  const std::size_t n = x.dim(0) * x.dim(1), k = end - begin;
  Tensor out({x.dim(0), x.dim(1), k});
  for (std::size_t p = 0; p < n; ++p) std::copy_n(x.ptr() + p * c + begin, k, out.ptr() + p * k);
  return out;
}

}  // namespace npmca::ops
