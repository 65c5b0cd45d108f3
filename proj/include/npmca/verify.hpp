#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npmca/model.hpp"

namespace npmca {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;

  /// "PASS name  measured=… threshold=…  detail"
  std::string line() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240607;
  /// Fault injection: the stochasticity check uses a softmax without
  /// max-subtraction. Used to show the suite catches a broken kernel.
  bool naive_softmax = false;
};

std::vector<CheckResult> run_verification(const VerifyOptions& opts = {});

struct GradientAuditOptions {
  std::size_t height = 32, width = 48;
  double h = 1e-6;
  std::size_t random_entries = 3;  // per parameter tensor, plus its largest-gradient entry
  std::uint64_t seed = 7;
  /// Relative-error floor. Central differences at h = 1e-6 carry ~1e-10 of
  /// absolute roundoff, so tiny gradients are judged on absolute error instead.
  double floor = 1e-4;
};

struct GradientGroupResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Entries where the one-sided differences disagree, i.e. a ReLU kink lies
  /// within ±h. Not differentiable there, so they are left out.
  std::size_t skipped_kinks = 0;
};

/// Reverse-mode vs central differences on the IoU loss of one forward pass,
/// for every parameter tensor of p. p must be built for the audit size.
std::vector<GradientGroupResult> audit_model_gradients(ModelParams& p, const GradientAuditOptions& opts = {});

}  // namespace npmca
