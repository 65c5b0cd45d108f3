#include "npmca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "npmca/errors.hpp"

namespace npmca {

namespace {

struct IouTerms {
  double inter = 0.0, pred_sum = 0.0, gt_sum = 0.0;
};

IouTerms iou_terms(const Tensor& pred, const Tensor& gt) {
  if (pred.size() != gt.size() || pred.dim(0) != gt.dim(0))
    throw ShapeError("iou_loss: prediction " + shape_str(pred.shape()) + " vs ground truth " + shape_str(gt.shape()));
  IouTerms t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    t.inter += pred[i] * gt[i];
    t.pred_sum += pred[i];
    t.gt_sum += gt[i];
  }
  return t;
}

}  // namespace

double iou_loss(const Tensor& pred, const Tensor& gt, double eps) {
  const IouTerms t = iou_terms(pred, gt);
  return 1.0 - (t.inter + eps) / (t.pred_sum + t.gt_sum - t.inter + eps);
}

Var iou_loss(Var pred, const Tensor& gt, double eps) {
  Graph& g = *pred.graph;
  const IouTerms t = iou_terms(pred.value(), gt);
  const double num = t.inter + eps, den = t.pred_sum + t.gt_sum - t.inter + eps;
  const int ip = pred.id;
  return g.record(OpKind::Custom, {ip}, Tensor::scalar(1.0 - num / den), [ip, gt, num, den](Graph& gr, const Tensor& d) {
    // ∂L/∂p_i = −(y_i·den − num·(1 − y_i)) / den²
    Tensor dp(gr.value(ip).shape());
    const double inv = 1.0 / (den * den);
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = -d[0] * (gt[i] * den - num * (1.0 - gt[i])) * inv;
    gr.accumulate(ip, dp);
  });
}

double region_j(const LabelMask& pred, const LabelMask& gt, int object_id) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) throw ShapeError("region_j: mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == object_id, g = gt[i] == object_id;
    inter += (p && g);
    uni += (p || g);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<bool> boundary_map(const LabelMask& mask, int object_id) {
  const std::size_t h = mask.height(), w = mask.width();
  std::vector<bool> b(h * w, false);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (mask.at(y, x) != object_id) continue;
      const bool edge = y == 0 || x == 0 || y + 1 == h || x + 1 == w || mask.at(y - 1, x) != object_id ||
                        mask.at(y + 1, x) != object_id || mask.at(y, x - 1) != object_id ||
                        mask.at(y, x + 1) != object_id;
      b[y * w + x] = edge;
    }
  return b;
}

int contour_radius(std::size_t height, std::size_t width) {
  const double diag = std::hypot(static_cast<double>(height), static_cast<double>(width));
  return std::max(1, static_cast<int>(std::lround(0.0075 * diag)));
}

namespace {

// Fraction of `from` boundary pixels with an `to` boundary pixel inside the disk of radius r.
double matched_fraction(const std::vector<bool>& from, const std::vector<bool>& to, std::size_t h, std::size_t w,
                        int r, std::size_t& count) {
  count = 0;
  std::size_t hit = 0;
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  for (long y = 0; y < lh; ++y)
    for (long x = 0; x < lw; ++x) {
      if (!from[static_cast<std::size_t>(y * lw + x)]) continue;
      ++count;
      bool found = false;
      for (long dy = -r; dy <= r && !found; ++dy)
        for (long dx = -r; dx <= r && !found; ++dx) {
          if (dx * dx + dy * dy > static_cast<long>(r) * r) continue;
          const long yy = y + dy, xx = x + dx;
          if (yy >= 0 && xx >= 0 && yy < lh && xx < lw && to[static_cast<std::size_t>(yy * lw + xx)]) found = true;
        }
      hit += found;
    }
  return count == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(count);
}

}  // namespace

double contour_f(const LabelMask& pred, const LabelMask& gt, int object_id, int radius) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) throw ShapeError("contour_f: mask sizes differ");
  const std::size_t h = gt.height(), w = gt.width();
  const int r = radius < 0 ? contour_radius(h, w) : radius;
  const auto pb = boundary_map(pred, object_id);
  const auto gb = boundary_map(gt, object_id);
  std::size_t n_pred = 0, n_gt = 0;
  double precision = matched_fraction(pb, gb, h, w, r, n_pred);
  double recall = matched_fraction(gb, pb, h, w, r, n_gt);
  if (n_pred == 0 && n_gt == 0) return 1.0;
  if (n_pred == 0) precision = 1.0, recall = 0.0;
  if (n_gt == 0) precision = 0.0, recall = 1.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::string EvalReport::summary_line() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "J: %.3f F: %.3f J&F: %.3f", mean_j, mean_f, jf);
  return buf;
}

std::string EvalReport::to_table() const {
  std::string out = "sequence object J F\n";
  char buf[256];
  for (const auto& o : objects) {
    std::snprintf(buf, sizeof buf, "%s %d %.6f %.6f\n", o.sequence.c_str(), o.object, o.j, o.f);
    out += buf;
  }
  return out + summary_line() + "\n";
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["objects"] = nlohmann::json::array();
  for (const auto& o : objects) j["objects"].push_back({{"sequence", o.sequence}, {"object", o.object}, {"J", o.j}, {"F", o.f}});
  j["sequences"] = nlohmann::json::array();
  for (const auto& s : sequences) j["sequences"].push_back({{"sequence", s.sequence}, {"J", s.j}, {"F", s.f}});
  j["mean"] = {{"J", mean_j}, {"F", mean_f}, {"J&F", jf}};
  return j.dump(2) + "\n";
}

EvalReport evaluate(const std::vector<SequencePrediction>& sequences) {
  if (sequences.empty()) throw ArgumentError("evaluate: no sequences");
  EvalReport report;
  for (const auto& seq : sequences) {
    if (seq.preds.size() != seq.gts.size())
      throw ArgumentError("evaluate: " + seq.name + " has " + std::to_string(seq.preds.size()) + " predictions for " +
                          std::to_string(seq.gts.size()) + " ground-truth frames");
    if (seq.gts.size() < 2) throw ArgumentError("evaluate: " + seq.name + " has no frames beyond the given one");
    int m = 0;
    for (const auto& g : seq.gts) m = std::max(m, g.max_label());
    SequenceScore sscore{seq.name, 0.0, 0.0};
    for (int obj = 1; obj <= m; ++obj) {
      ObjectScore o{seq.name, obj, 0.0, 0.0};
      for (std::size_t t = 1; t < seq.gts.size(); ++t) {
        o.j += region_j(seq.preds[t], seq.gts[t], obj);
        o.f += contour_f(seq.preds[t], seq.gts[t], obj);
      }
      const auto frames = static_cast<double>(seq.gts.size() - 1);
      o.j /= frames;
      o.f /= frames;
      sscore.j += o.j;
      sscore.f += o.f;
      report.objects.push_back(o);
    }
    if (m > 0) {
      sscore.j /= m;
      sscore.f /= m;
    } else {
      sscore.j = sscore.f = 1.0;
    }
    report.sequences.push_back(sscore);
  }
  for (const auto& s : report.sequences) {
    report.mean_j += s.j;
    report.mean_f += s.f;
  }
  report.mean_j /= static_cast<double>(report.sequences.size());
  report.mean_f /= static_cast<double>(report.sequences.size());
  report.jf = (report.mean_j + report.mean_f) / 2.0;
  return report;
}

EvalReport evaluate_sequence(const std::vector<LabelMask>& preds, const std::vector<LabelMask>& gts,
                             const std::string& name) {
  return evaluate({SequencePrediction{name, preds, gts}});
}

}  // namespace npmca
