#include "npmca/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>

#include "npmca/attention.hpp"
#include "npmca/datagen.hpp"
#include "npmca/graph.hpp"
#include "npmca/matching.hpp"
#include "npmca/metrics.hpp"
#include "npmca/ops.hpp"
#include "npmca/oracles.hpp"
#include "npmca/propagation.hpp"
#include "npmca/rng.hpp"

namespace npmca {

std::string CheckResult::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s  %-28s measured=%.3e  threshold=%.3e", passed ? "PASS" : "FAIL", name.c_str(),
                measured, threshold);
  std::string s = buf;
  if (!detail.empty()) s += "  " + detail;
  return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// NaN compares false, so treat it as an infinite error.
double worse(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return kInf;
  return std::max(a, b);
}

CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  const bool ok = !std::isnan(measured) && measured <= threshold;
  return {std::move(name), measured, threshold, ok, std::move(detail)};
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

Tensor naive_softmax_columns(const Tensor& m) {
  Tensor out(m.shape());
  for (std::size_t j = 0; j < m.dim(1); ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < m.dim(0); ++i) z += std::exp(m.at(i, j));
    for (std::size_t i = 0; i < m.dim(0); ++i) out.at(i, j) = std::exp(m.at(i, j)) / z;
  }
  return out;
}

double column_sum_error(const Tensor& m) {
  double err = 0.0;
  for (std::size_t j = 0; j < m.dim(1); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.dim(0); ++i) {
      if (!(m.at(i, j) >= 0.0)) return kInf;
      s += m.at(i, j);
    }
    err = worse(err, std::abs(s - 1.0));
  }
  return err;
}

CheckResult check_matmul(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = pick(rng, 1, 12), k = pick(rng, 1, 12), n = pick(rng, 1, 12);
    const Tensor a = Tensor::uniform({m, k}, rng, -1, 1), b = Tensor::uniform({k, n}, rng, -1, 1);
    const Tensor c = oracle::matmul(a, b);
    err = worse(err, max_abs_diff(ops::matmul(a, b), c));
    err = worse(err, max_abs_diff(ops::matmul_tn(ops::transpose(a), b), c));
    err = worse(err, max_abs_diff(ops::matmul_nt(a, ops::transpose(b)), c));
  }
  return at_most("matmul_vs_loops", err, 1e-10);
}

CheckResult check_conv(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t k = trial % 2 == 0 ? 3 : 1, stride = trial % 3 == 0 ? 2 : 1, pad = (k - 1) / 2;
    std::size_t h = pick(rng, 3, 9), w = pick(rng, 3, 9);
    if (stride == 2) h |= 1, w |= 1;
    const std::size_t cin = pick(rng, 1, 5), cout = pick(rng, 1, 5);
    const Tensor x = Tensor::uniform({h, w, cin}, rng, -1, 1);
    const Tensor wt = Tensor::uniform({k, k, cin, cout}, rng, -1, 1), b = Tensor::uniform({cout}, rng, -1, 1);
    err = worse(err, max_abs_diff(ops::conv2d(x, wt, b, stride, pad), oracle::conv2d(x, wt, b, stride, pad)));
  }
  return at_most("conv2d_vs_loops", err, 1e-10);
}

CheckResult check_resize(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = Tensor::uniform({pick(rng, 1, 8), pick(rng, 1, 8), 2}, rng, -1, 1);
    const std::size_t oh = pick(rng, 1, 12), ow = pick(rng, 1, 12);
    err = worse(err, max_abs_diff(ops::bilinear_resize(x, oh, ow), oracle::bilinear_resize(x, oh, ow)));
  }
  return at_most("bilinear_vs_tent_sum", err, 1e-12);
}

CheckResult check_softmax(Rng& rng, bool naive) {
  double err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor m = Tensor::uniform({pick(rng, 1, 16), pick(rng, 1, 16)}, rng, -1000, 1000);
    err = worse(err, column_sum_error(naive ? naive_softmax_columns(m) : ops::softmax_columns(m)));
  }
  return at_most("softmax_column_sums", err, 1e-9, naive ? "(naive softmax injected)" : "");
}

CheckResult check_nlpmm(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NlpmmParams p = NlpmmParams::init(8, rng);
    const Tensor r = Tensor::uniform({4, 5, 8}, rng, -1, 1), t = Tensor::uniform({4, 5, 8}, rng, -1, 1);
    err = worse(err, max_abs_diff(nlpmm_forward(r, t, p), oracle::nlpmm(r, t, p.reduce_ref, p.reduce_tar)));
  }
  return at_most("nlpmm_vs_loops", err, 1e-10);
}

CheckResult check_similarity_stochastic(Rng& rng, double& hull_violation) {
  double err = 0.0;
  hull_violation = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = pick(rng, 1, 20), c = pick(rng, 1, 6);
    const double scale = trial % 10 == 0 ? 30.0 : 2.0;
    const Tensor r = Tensor::uniform({n, c}, rng, -scale, scale), t = Tensor::uniform({n, c}, rng, -scale, scale);
    const Tensor s = normalize_similarity(similarity(r, t));
    err = worse(err, column_sum_error(s));
    const Tensor m = match(r, s);  // C×N: column j is target pixel j
    for (std::size_t k = 0; k < c; ++k) {
      double lo = kInf, hi = -kInf;
      for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, r.at(i, k)), hi = std::max(hi, r.at(i, k));
      for (std::size_t j = 0; j < n; ++j)
        hull_violation = worse(hull_violation, std::max(lo - m.at(k, j), m.at(k, j) - hi));
    }
  }
  return at_most("similarity_column_sums", err, 1e-9);
}

CheckResult check_cm(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor f = Tensor::uniform({pick(rng, 1, 5), pick(rng, 1, 5), pick(rng, 1, 8)}, rng, -1, 1);
    const double gamma = rng.uniform(0.0, 2.0);
    err = worse(err, max_abs_diff(cm_forward(f, gamma), oracle::channel_attention(f, gamma)));
  }
  return at_most("cm_vs_loops", err, 1e-10);
}

CheckResult check_cm_identity(Rng& rng) {
  double err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor f = Tensor::uniform({3, 4, 8}, rng, -5, 5);
    err = worse(err, max_abs_diff(cm_forward(f, 0.0), f));
  }
  return at_most("cm_gamma_zero_identity", err, 0.0);
}

CheckResult check_attention_stochastic(Rng& rng, double& gram_asym) {
  double err = 0.0;
  gram_asym = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = pick(rng, 1, 20), c = pick(rng, 1, 12);
    const Tensor f = Tensor::uniform({n, c}, rng, -3, 3);
    err = worse(err, column_sum_error(channel_attention_map(f)));
    const Tensor a = channel_gram(f);
    gram_asym = worse(gram_asym, max_abs_diff(a, ops::transpose(a)));
  }
  return at_most("attention_column_sums", err, 1e-9);
}

// Gradient of Σ w·op(inputs) w.r.t. every input, analytic vs central differences.
using Builder = std::function<Var(std::vector<Var>&)>;

double op_gradient_error(const Builder& build, std::vector<Tensor> inputs, Rng& rng) {
  auto run = [&](Graph& g, const Tensor* w, std::vector<Var>& vars) {
    vars.clear();
    for (const Tensor& t : inputs) vars.push_back(g.input(t));
    const Var y = build(vars);
    return ad::sum(ad::mul(y, g.constant(w ? *w : Tensor(y.shape(), 1.0))));
  };
  Tensor w;
  {
    Graph g(false);
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(g.input(t));
    w = Tensor::uniform(build(vars).shape(), rng, -1, 1);
  }
  std::vector<Tensor> grads;
  {
    Graph g;
    std::vector<Var> vars;
    const Var loss = run(g, &w, vars);
    g.backward(loss);
    for (const Var& v : vars) grads.push_back(g.grad(v));
  }
  auto f = [&] {
    Graph g(false);
    std::vector<Var> vars;
    return g.value(run(g, &w, vars))[0];
  };
  double err = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (std::size_t i = 0; i < inputs[k].size(); i += std::max<std::size_t>(1, inputs[k].size() / 25))
      err = worse(err, oracle::relative_error(grads[k][i], oracle::central_difference(f, inputs[k], i), 1e-6));
  return err;
}

Tensor away_from_zero(Tensor t) {
  for (auto& v : t.data()) v = v < 0 ? v - 0.1 : v + 0.1;
  return t;
}

CheckResult check_op_gradients(Rng& rng) {
  auto u = [&](Shape s, double lo = -1, double hi = 1) { return Tensor::uniform(std::move(s), rng, lo, hi); };
  double err = 0.0;
  std::string worst;
  auto track = [&](const char* name, double e) {
    if (!(e <= err)) err = worse(err, e), worst = name;
  };
  track("matmul", op_gradient_error([](auto& v) { return ad::matmul(v[0], v[1]); }, {u({3, 4}), u({4, 2})}, rng));
  track("matmul_tn",
        op_gradient_error([](auto& v) { return ad::matmul_tn(v[0], v[1]); }, {u({4, 3}), u({4, 2})}, rng));
  track("matmul_nt",
        op_gradient_error([](auto& v) { return ad::matmul_nt(v[0], v[1]); }, {u({3, 4}), u({2, 4})}, rng));
  track("transpose", op_gradient_error([](auto& v) { return ad::transpose(v[0]); }, {u({3, 4})}, rng));
  track("softmax_columns",
        op_gradient_error([](auto& v) { return ad::softmax_columns(v[0]); }, {u({5, 3}, -3, 3)}, rng));
  track("conv2d_3x3", op_gradient_error([](auto& v) { return ad::conv2d(v[0], v[1], v[2], 1, 1); },
                                        {u({5, 6, 2}), u({3, 3, 2, 3}), u({3})}, rng));
  track("conv2d_stride2", op_gradient_error([](auto& v) { return ad::conv2d(v[0], v[1], v[2], 2, 1); },
                                            {u({5, 7, 2}), u({3, 3, 2, 2}), u({2})}, rng));
  track("conv2d_1x1", op_gradient_error([](auto& v) { return ad::conv2d(v[0], v[1], v[2], 1, 0); },
                                        {u({4, 3, 3}), u({1, 1, 3, 2}), u({2})}, rng));
  track("resize_up", op_gradient_error([](auto& v) { return ad::bilinear_resize(v[0], 7, 9); }, {u({3, 4, 2})}, rng));
  track("resize_down",
        op_gradient_error([](auto& v) { return ad::bilinear_resize(v[0], 3, 2); }, {u({8, 6, 2})}, rng));
  track("add", op_gradient_error([](auto& v) { return ad::add(v[0], v[1]); }, {u({3, 3}), u({3, 3})}, rng));
  track("mul", op_gradient_error([](auto& v) { return ad::mul(v[0], v[1]); }, {u({3, 3}), u({3, 3})}, rng));
  track("scale", op_gradient_error([](auto& v) { return ad::scale(v[0], -1.7); }, {u({3, 3})}, rng));
  track("scale_by",
        op_gradient_error([](auto& v) { return ad::scale_by(v[0], v[1]); }, {u({3, 3}), u({1})}, rng));
  track("relu", op_gradient_error([](auto& v) { return ad::relu(v[0]); }, {away_from_zero(u({4, 4}))}, rng));
  track("sigmoid", op_gradient_error([](auto& v) { return ad::sigmoid(v[0]); }, {u({4, 4}, -4, 4)}, rng));
  track("softplus", op_gradient_error([](auto& v) { return ad::softplus(v[0]); }, {u({4, 4}, -4, 4)}, rng));
  track("concat",
        op_gradient_error([](auto& v) { return ad::concat_channels(v[0], v[1]); }, {u({2, 3, 2}), u({2, 3, 1})},
                          rng));
  track("reshape", op_gradient_error([](auto& v) { return ad::reshape(v[0], {6, 2}); }, {u({2, 3, 2})}, rng));
  return at_most("op_gradients", err, 1e-6, worst.empty() ? "" : "worst op: " + worst);
}

CheckResult check_iou_gradient(Rng& rng) {
  Tensor pred = Tensor::uniform({8, 8, 1}, rng, 0.05, 0.95);
  Tensor gt({8, 8, 1});
  for (auto& v : gt.data()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  Graph g;
  const Var p = g.input(pred);
  g.backward(iou_loss(p, gt));
  const Tensor grad = g.grad(p);
  double err = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    err = worse(err, oracle::relative_error(
                         grad[i], oracle::central_difference([&] { return iou_loss(pred, gt); }, pred, i), 1e-8));
  return at_most("iou_loss_gradient", err, 1e-6);
}

CheckResult check_model_gradients() {
  ModelConfig cfg;
  ModelParams p = ModelParams::init(cfg, 11);
  // Lift γ off its near-zero initial value so the attention path carries gradient.
  p.cm_first.gamma_raw.value[0] = 0.3;
  p.cm_prev.gamma_raw.value[0] = -0.4;
  const auto groups = audit_model_gradients(p);
  double err = 0.0;
  std::size_t kinks = 0, checked = 0;
  std::string worst;
  for (const auto& gr : groups) {
    if (!(gr.max_rel_error <= err)) err = worse(err, gr.max_rel_error), worst = gr.name;
    kinks += gr.skipped_kinks;
    checked += gr.checked;
  }
  return at_most("model_gradient_audit", err, 1e-5,
                 std::to_string(groups.size()) + " tensors, " + std::to_string(checked) + " entries, " +
                     std::to_string(kinks) + " kinks skipped, worst " + worst);
}

CheckResult check_aggregation(Rng& rng, std::size_t& argmax_mismatches) {
  double err = 0.0;
  argmax_mismatches = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = static_cast<std::size_t>(trial % 3) + 1;
    std::vector<Tensor> maps;
    for (std::size_t k = 0; k < m; ++k) {
      Tensor t = Tensor::uniform({6, 7, 1}, rng, 0, 1);
      if (trial % 5 == 0) t[0] = 0.0, t[1] = 1.0;  // clamp edges
      maps.push_back(std::move(t));
    }
    const Aggregation agg = aggregate_multi_object(maps);
    for (std::size_t i = 0; i < maps[0].size(); ++i) {
      double s = 0.0;
      for (const Tensor& pm : agg.probs.maps) {
        if (!(pm[i] >= 0.0)) err = kInf;
        s += pm[i];
      }
      err = worse(err, std::abs(s - 1.0));
      std::vector<double> px;
      for (const Tensor& t : maps) px.push_back(t[i]);
      const std::vector<double> ref = oracle::aggregate_pixel(px);
      const auto best = static_cast<std::size_t>(std::max_element(ref.begin(), ref.end()) - ref.begin());
      if (agg.labels[i] != best) ++argmax_mismatches;
      // Among objects, P and p rank the same.
      const auto obj_p = std::max_element(px.begin(), px.end()) - px.begin();
      const auto obj_big = std::max_element(ref.begin() + 1, ref.end()) - ref.begin() - 1;
      if (std::clamp(px[static_cast<std::size_t>(obj_p)], kProbabilityClamp, 1 - kProbabilityClamp) !=
          std::clamp(px[static_cast<std::size_t>(obj_big)], kProbabilityClamp, 1 - kProbabilityClamp))
        ++argmax_mismatches;
    }
  }
  return at_most("aggregation_sums", err, 1e-9);
}

CheckResult check_hand_case() {
  const Aggregation agg = aggregate_multi_object({Tensor({1, 1, 1}, 0.2), Tensor({1, 1, 1}, 0.8)});
  const double expect[3] = {0.16 / 0.84 / (0.16 / 0.84 + 0.25 + 4.0), 0.25 / (0.16 / 0.84 + 0.25 + 4.0),
                            4.0 / (0.16 / 0.84 + 0.25 + 4.0)};
  double err = 0.0;
  for (std::size_t m = 0; m < 3; ++m) err = worse(err, std::abs(agg.probs.maps[m][0] - expect[m]));
  // Rounded published values.
  const double rounded[3] = {0.0429, 0.0563, 0.9008};
  double rerr = 0.0;
  for (std::size_t m = 0; m < 3; ++m) rerr = worse(rerr, std::abs(agg.probs.maps[m][0] - rounded[m]));
  return at_most("aggregation_hand_case", err, 1e-6, rerr < 5e-5 ? "matches 4-digit values" : "4-digit mismatch");
}

LabelMask rect_mask(std::size_t h, std::size_t w, std::size_t y0, std::size_t x0, std::size_t y1, std::size_t x1,
                    int id = 1) {
  LabelMask m(h, w);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) m.at(y, x) = static_cast<std::uint8_t>(id);
  return m;
}

CheckResult check_metrics() {
  const LabelMask a = rect_mask(20, 30, 4, 4, 12, 16);
  const LabelMask disjoint = rect_mask(20, 30, 14, 18, 18, 28);
  const LabelMask half = rect_mask(20, 30, 4, 4, 12, 10);
  const LabelMask empty(20, 30);
  double err = 0.0;
  err = worse(err, std::abs(region_j(a, a, 1) - 1.0));
  err = worse(err, std::abs(contour_f(a, a, 1) - 1.0));
  err = worse(err, std::abs(region_j(disjoint, a, 1)));
  err = worse(err, std::abs(contour_f(disjoint, a, 1)));
  err = worse(err, std::abs(region_j(empty, a, 1)));
  err = worse(err, std::abs(contour_f(empty, a, 1)));
  err = worse(err, std::abs(region_j(half, a, 1) - 0.5));
  const EvalReport r = evaluate_sequence({a, half, a}, {a, a, a});
  err = worse(err, std::abs(r.jf - (r.mean_j + r.mean_f) / 2.0));
  return at_most("metrics_constructions", err, 0.0);
}

CheckResult check_checkpoint() {
  ModelParams p = ModelParams::init(ModelConfig{}, 3), q = ModelParams::init(ModelConfig{}, 4);
  const auto path = std::filesystem::temp_directory_path() / "npmca_verify_roundtrip.ckpt";
  save_checkpoint(path, p);
  load_checkpoint(path, q);
  std::filesystem::remove(path);
  const auto a = p.named_parameters(), b = q.named_parameters();
  double mismatched = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].first != b[i].first || !identical(a[i].second->value, b[i].second->value)) ++mismatched;
  return at_most("checkpoint_roundtrip", mismatched, 0.0, std::to_string(a.size()) + " tensors");
}

CheckResult check_datagen(Rng& rng, double& determinism_diffs) {
  SceneOptions so;
  so.height = 32, so.width = 48, so.frames = 4;
  double wrong = 0;
  determinism_diffs = 0;
  for (int s = 0; s < 4; ++s) {
    so.occlusion_heavy = s % 2 == 1;
    const SceneConfig cfg = random_scene(so, rng);
    const VideoSequence v = generate_sequence(cfg, 100 + static_cast<std::uint64_t>(s));
    const VideoSequence again = generate_sequence(cfg, 100 + static_cast<std::uint64_t>(s));
    for (std::size_t t = 0; t < cfg.frames; ++t) {
      if (!identical(v.frames[t], again.frames[t]) || !(v.masks[t] == again.masks[t])) ++determinism_diffs;
      const auto order = draw_order(cfg, t);
      for (int k = 0; k < 200; ++k) {
        const std::size_t y = pick(rng, 0, cfg.height - 1), x = pick(rng, 0, cfg.width - 1);
        int expect = 0;
        for (std::size_t obj : order)
          if (object_state(cfg, obj, t).contains(static_cast<double>(x), static_cast<double>(y)))
            expect = static_cast<int>(obj) + 1;
        if (v.masks[t].at(y, x) != expect) ++wrong;
      }
    }
  }
  return at_most("datagen_mask_exactness", wrong, 0.0);
}

CheckResult check_feature_cache(Rng& rng) {
  SceneOptions so;
  so.height = 32, so.width = 32, so.frames = 3;
  const SceneConfig cfg = random_scene(so, rng);
  const VideoSequence v = generate_sequence(cfg, 5);
  const ModelParams p = ModelParams::init(ModelConfig{}, 9);
  InferenceOptions on, off;
  on.scales = off.scales = {1.0};
  off.cache_first_features = false;
  const SequenceInference a = infer_sequence(v, v.masks[0], p, on), b = infer_sequence(v, v.masks[0], p, off);
  double diffs = 0;
  for (std::size_t t = 0; t < a.masks.size(); ++t) {
    if (!(a.masks[t] == b.masks[t])) ++diffs;
    for (std::size_t m = 0; m < a.probs[t].maps.size(); ++m)
      if (!identical(a.probs[t].maps[m], b.probs[t].maps[m])) ++diffs;
  }
  return at_most("first_feature_cache", diffs, 0.0);
}

}  // namespace

std::vector<GradientGroupResult> audit_model_gradients(ModelParams& p, const GradientAuditOptions& o) {
  Rng rng(o.seed);
  const std::size_t h = o.height, w = o.width;
  const Tensor first = Tensor::uniform({h, w, 3}, rng, 0, 1), prev = Tensor::uniform({h, w, 3}, rng, 0, 1);
  const Tensor cur = Tensor::uniform({h, w, 3}, rng, 0, 1), prob = Tensor::uniform({h, w, 1}, rng, 0.05, 0.95);
  Tensor gt({h, w, 1});
  for (std::size_t y = h / 4; y < 3 * h / 4; ++y)
    for (std::size_t x = w / 3; x < 5 * w / 6; ++x) gt[y * w + x] = 1.0;

  p.zero_grad();
  {
    Graph g;
    const Var out = forward_single_object(g.constant(first), g.constant(prev), g.constant(cur), g.constant(prob), p);
    g.backward(iou_loss(out, gt));
  }

  // Loss plus the sign pattern of every ReLU input, to spot kinks crossed by a step.
  auto evaluate = [&](std::vector<bool>* signs) {
    Graph g(false);
    const Var out = forward_single_object(g.constant(first), g.constant(prev), g.constant(cur), g.constant(prob), p);
    if (signs) {
      signs->clear();
      for (std::size_t id = 0; id < g.size(); ++id)
        if (g.kind(static_cast<int>(id)) == OpKind::Relu)
          for (double v : g.value(g.inputs_of(static_cast<int>(id))[0]).data()) signs->push_back(v > 0.0);
    }
    return iou_loss(out.value(), gt);
  };
  std::vector<bool> base_signs, signs;
  evaluate(&base_signs);

  std::vector<GradientGroupResult> results;
  for (auto& [name, param] : p.named_parameters()) {
    GradientGroupResult r;
    r.name = name;
    Tensor& value = param->value;
    const Tensor& grad = param->grad;
    std::set<std::size_t> entries;
    std::size_t biggest = 0;
    for (std::size_t i = 1; i < grad.size(); ++i)
      if (std::abs(grad[i]) > std::abs(grad[biggest])) biggest = i;
    entries.insert(biggest);
    for (std::size_t k = 0; k < o.random_entries && entries.size() < value.size(); ++k)
      entries.insert(pick(rng, 0, value.size() - 1));
    for (std::size_t i : entries) {
      const double orig = value[i];
      value[i] = orig + o.h;
      const double up = evaluate(&signs);
      bool kink = signs != base_signs;
      value[i] = orig - o.h;
      const double down = evaluate(&signs);
      kink = kink || signs != base_signs;
      value[i] = orig;
      if (kink) {
        ++r.skipped_kinks;
        continue;
      }
      ++r.checked;
      r.max_rel_error =
          worse(r.max_rel_error, oracle::relative_error(grad[i], (up - down) / (2.0 * o.h), o.floor));
    }
    results.push_back(std::move(r));
  }
  p.zero_grad();
  return results;
}

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
  Rng rng(opts.seed);
  std::vector<CheckResult> out;
  out.push_back(check_matmul(rng));
  out.push_back(check_conv(rng));
  out.push_back(check_resize(rng));
  out.push_back(check_softmax(rng, opts.naive_softmax));
  out.push_back(check_nlpmm(rng));
  double hull = 0.0;
  out.push_back(check_similarity_stochastic(rng, hull));
  out.push_back(at_most("convex_hull_bound", hull, 1e-9));
  out.push_back(check_cm(rng));
  out.push_back(check_cm_identity(rng));
  double asym = 0.0;
  out.push_back(check_attention_stochastic(rng, asym));
  out.push_back(at_most("gram_symmetry", asym, 1e-10));
  out.push_back(check_op_gradients(rng));
  out.push_back(check_iou_gradient(rng));
  out.push_back(check_model_gradients());
  std::size_t mismatches = 0;
  out.push_back(check_aggregation(rng, mismatches));
  out.push_back(at_most("odds_argmax_bruteforce", static_cast<double>(mismatches), 0.0));
  out.push_back(check_hand_case());
  out.push_back(check_metrics());
  out.push_back(check_checkpoint());
  double det = 0.0;
  out.push_back(check_datagen(rng, det));
  out.push_back(at_most("generation_determinism", det, 0.0));
  out.push_back(check_feature_cache(rng));
  return out;
}

}  // namespace npmca
