#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "npmca/verify.hpp"

using namespace npmca;

namespace {

const CheckResult* find(const std::vector<CheckResult>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return &r;
  return nullptr;
}

}  // namespace

TEST(Verify, AllChecksPass) {
  const auto results = run_verification();
  EXPECT_GE(results.size(), 12u);
  std::set<std::string> names;
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.line();
    EXPECT_TRUE(names.insert(r.name).second) << "duplicate check " << r.name;
    EXPECT_EQ(r.line().rfind("PASS", 0), 0u) << r.line();
  }
}

TEST(Verify, InjectedSoftmaxFaultIsCaught) {
  VerifyOptions opts;
  opts.naive_softmax = true;
  const auto results = run_verification(opts);
  const CheckResult* r = find(results, "softmax_column_sums");
  ASSERT_NE(r, nullptr);
  EXPECT_FALSE(r->passed);
  EXPECT_EQ(r->line().rfind("FAIL", 0), 0u);
  // The fault is local: nothing else should break.
  for (const auto& other : results)
    if (other.name != "softmax_column_sums") EXPECT_TRUE(other.passed) << other.line();
}

TEST(Verify, SeedChangesInputsNotVerdicts) {
  VerifyOptions opts;
  opts.seed = 99;
  for (const auto& r : run_verification(opts)) EXPECT_TRUE(r.passed) << r.line();
}

TEST(Verify, LineFormat) {
  CheckResult r{"demo", 1.5e-12, 1e-9, true, "note"};
  const std::string l = r.line();
  EXPECT_NE(l.find("demo"), std::string::npos);
  EXPECT_NE(l.find("measured=1.500e-12"), std::string::npos);
  EXPECT_NE(l.find("threshold=1.000e-09"), std::string::npos);
  EXPECT_NE(l.find("note"), std::string::npos);
}

TEST(GradientAudit, CoversEveryParameterTensor) {
  GradientAuditOptions opts;
  opts.height = 16, opts.width = 24, opts.random_entries = 1;
  ModelConfig cfg;
  cfg.enc1 = 4, cfg.enc2 = 4, cfg.features = 8, cfg.dec1 = 4, cfg.dec2 = 4;
  ModelParams p = ModelParams::init(cfg, 5);
  const auto groups = audit_model_gradients(p, opts);
  EXPECT_EQ(groups.size(), p.named_parameters().size());
  for (const auto& g : groups) {
    EXPECT_GE(g.checked + g.skipped_kinks, 1u) << g.name;
    EXPECT_LT(g.max_rel_error, 1e-4) << g.name;
  }
}
