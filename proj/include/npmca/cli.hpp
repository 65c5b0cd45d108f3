#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace npmca {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitNumeric = 3 };

/// Fully resolved settings of one invocation; written to <out>/run.cfg.
struct RunConfig {
  std::string command;
  std::string data, checkpoint, init_checkpoint, out, pred;
  std::string stage = "pretrain";
  std::size_t n = 0;
  std::size_t iters = 2000;
  std::size_t batch = 4;
  std::size_t max_skip = 5;
  double lr = 0.0;  // 0 → stage default
  std::vector<double> scales{0.75, 1.0, 1.25};
  std::uint64_t seed = 0;
  bool dump_probs = false;
  bool disable_cm = false;
  bool first_frame_only = false;
  bool single_encoder = false;
  bool occlusion_heavy = false;
  bool inject_naive_softmax = false;

  std::string to_text() const;
};

/// Default learning rate per training stage.
double default_lr(const std::string& stage);

/// Entry point of the npmca tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace npmca
