#include "npmca/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "npmca/datagen.hpp"
#include "npmca/errors.hpp"
#include "npmca/metrics.hpp"
#include "npmca/model.hpp"
#include "npmca/propagation.hpp"
#include "npmca/raster.hpp"
#include "npmca/rng.hpp"
#include "npmca/training.hpp"
#include "npmca/verify.hpp"

namespace npmca {

namespace fs = std::filesystem;

namespace {

// Command-level failure with an exit code attached.
struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

std::string join_scales(const std::vector<double>& scales) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < scales.size(); ++i) os << (i ? "," : "") << scales[i];
  return os.str();
}

void write_run_config(const RunConfig& rc) {
  if (rc.out.empty()) return;
  fs::create_directories(rc.out);
  write_file(fs::path(rc.out) / "run.cfg", rc.to_text());
}

ModelConfig model_config(const RunConfig& rc) {
  ModelConfig cfg;
  cfg.use_cm = !rc.disable_cm;
  cfg.single_encoder = rc.single_encoder;
  return cfg;
}

std::vector<VideoSequence> load_dataset(const std::string& root) {
  if (root.empty()) throw CliError(kExitUsage, "--data is required");
  const auto names = list_sequences(root);
  if (names.empty()) throw CliError(kExitUsage, "no sequences found under " + root);
  std::vector<VideoSequence> out;
  for (const auto& name : names) out.push_back(read_sequence(fs::path(root) / name));
  return out;
}

int cmd_gen(const RunConfig& rc) {
  if (rc.n == 0) throw CliError(kExitUsage, "--n must be at least 1");
  fs::create_directories(rc.out);
  SceneOptions opts;
  opts.occlusion_heavy = rc.occlusion_heavy;
  for (std::size_t i = 0; i < rc.n; ++i) {
    Rng scene_rng(derive_seed(rc.seed, 2 * i));
    const SceneConfig cfg = random_scene(opts, scene_rng);
    const std::uint64_t seq_seed = derive_seed(rc.seed, 2 * i + 1);
    char name[32];
    std::snprintf(name, sizeof name, "seq_%04zu", i);
    write_sequence(rc.out, generate_sequence(cfg, seq_seed, name), cfg, seq_seed);
  }
  write_run_config(rc);
  std::cout << "wrote " << rc.n << " sequences to " << rc.out << "\n";
  return kExitOk;
}

int cmd_train(RunConfig rc) {
  const Stage stage = parse_stage(rc.stage);
  if (stage == Stage::Finetune && rc.init_checkpoint.empty())
    throw CliError(kExitUsage, "--stage finetune requires --init-checkpoint");
  if (rc.iters == 0 || rc.batch == 0) throw CliError(kExitUsage, "--iters and --batch must be positive");
  if (rc.checkpoint.empty()) rc.checkpoint = (fs::path(rc.out) / "model.ckpt").string();
  const std::vector<VideoSequence> data = load_dataset(rc.data);

  ModelParams params = ModelParams::init(model_config(rc), rc.seed);
  if (!rc.init_checkpoint.empty()) load_checkpoint(rc.init_checkpoint, params);

  TrainConfig tc;
  tc.stage = stage;
  tc.iterations = rc.iters;
  tc.batch_size = rc.batch;
  tc.lr = rc.lr;
  tc.max_skip = rc.max_skip;
  tc.seed = rc.seed;
  write_run_config(rc);

  std::string log = "iter,loss\n";
  const auto on_iter = [&](std::size_t it, double loss) {
    char line[64];
    std::snprintf(line, sizeof line, "%zu,%.17g\n", it, loss);
    log += line;
    if (it % 100 == 0 || it == rc.iters) std::cerr << "iter " << it << " loss " << loss << "\n";
  };
  try {
    train(params, data, tc, on_iter);
  } catch (const NumericError& e) {
    write_file(fs::path(rc.out) / "loss.csv", log);
    throw;
  }
  write_file(fs::path(rc.out) / "loss.csv", log);
  save_checkpoint(rc.checkpoint, params);
  std::cout << "saved " << rc.checkpoint << "\n";
  return kExitOk;
}

int cmd_infer(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw CliError(kExitUsage, "--checkpoint is required");
  if (rc.scales.empty()) throw CliError(kExitUsage, "--scales must list at least one scale");
  for (double s : rc.scales)
    if (!(s > 0.0)) throw CliError(kExitUsage, "scales must be positive");
  const std::vector<VideoSequence> data = load_dataset(rc.data);
  ModelParams params = ModelParams::init(model_config(rc), 0);
  load_checkpoint(rc.checkpoint, params);

  InferenceOptions opts;
  opts.scales = rc.scales;
  opts.first_frame_only = rc.first_frame_only;
  write_run_config(rc);
  for (const VideoSequence& seq : data) {
    if (seq.masks.empty()) throw CliError(kExitUsage, seq.name + ": first-frame mask is missing");
    const SequenceInference r = infer_sequence(seq, seq.masks[0], params, opts);
    const fs::path dir = fs::path(rc.out) / seq.name;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < r.masks.size(); ++t) write_pgm(dir / frame_file_name(t, "pgm"), r.masks[t]);
    if (rc.dump_probs)
      for (std::size_t m = 1; m < r.probs[0].maps.size(); ++m) {
        const fs::path pdir = dir / "probs" / ("object_" + std::to_string(m));
        fs::create_directories(pdir);
        for (std::size_t t = 0; t < r.probs.size(); ++t)
          write_gray_pgm(pdir / frame_file_name(t, "pgm"), r.probs[t].maps[m]);
      }
  }
  std::cout << "wrote predictions for " << data.size() << " sequences to " << rc.out << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.pred.empty()) throw CliError(kExitUsage, "--pred is required");
  if (!fs::is_directory(rc.pred) || fs::is_empty(rc.pred))
    throw CliError(kExitUsage, "prediction directory is empty or missing: " + rc.pred);
  const std::vector<VideoSequence> gts = load_dataset(rc.data);

  std::vector<std::string> missing;
  std::vector<SequencePrediction> seqs;
  for (const VideoSequence& gt : gts) {
    if (gt.masks.size() != gt.frames.size()) {
      missing.push_back(gt.name + ": ground truth has " + std::to_string(gt.masks.size()) + " masks for " +
                        std::to_string(gt.frames.size()) + " frames");
      continue;
    }
    SequencePrediction sp{gt.name, {}, gt.masks};
    for (std::size_t t = 0; t < gt.masks.size(); ++t) {
      const fs::path f = fs::path(rc.pred) / gt.name / frame_file_name(t, "pgm");
      if (!fs::exists(f)) {
        missing.push_back(f.string());
        continue;
      }
      sp.preds.push_back(read_pgm(f));
      if (sp.preds.back().height() != gt.masks[t].height() || sp.preds.back().width() != gt.masks[t].width())
        missing.push_back(f.string() + " (size mismatch)");
    }
    seqs.push_back(std::move(sp));
  }
  if (!missing.empty()) {
    std::string msg = "prediction tree does not match ground truth:";
    for (const auto& m : missing) msg += "\n  missing " + m;
    throw CliError(kExitUsage, msg);
  }
  const EvalReport report = evaluate(seqs);
  write_run_config(rc);
  if (!rc.out.empty()) {
    write_file(fs::path(rc.out) / "eval.txt", report.to_table());
    write_file(fs::path(rc.out) / "eval.json", report.to_json());
  }
  std::cout << report.summary_line() << "\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& rc) {
  VerifyOptions opts;
  opts.seed = rc.seed;
  opts.naive_softmax = rc.inject_naive_softmax;
  const auto results = run_verification(opts);
  std::size_t passed = 0;
  std::string report;
  for (const auto& r : results) {
    report += r.line() + "\n";
    passed += r.passed ? 1 : 0;
  }
  report += std::to_string(passed) + "/" + std::to_string(results.size()) + " checks passed\n";
  std::cout << report;
  write_run_config(rc);
  if (!rc.out.empty()) write_file(fs::path(rc.out) / "verify.txt", report);
  return passed == results.size() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

double default_lr(const std::string& stage) { return parse_stage(stage) == Stage::Finetune ? 1e-4 : 1e-3; }

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "command=" << command << "\n"
     << "data=" << data << "\n"
     << "pred=" << pred << "\n"
     << "checkpoint=" << checkpoint << "\n"
     << "init_checkpoint=" << init_checkpoint << "\n"
     << "out=" << out << "\n"
     << "stage=" << stage << "\n"
     << "n=" << n << "\n"
     << "iters=" << iters << "\n"
     << "batch=" << batch << "\n"
     << "max_skip=" << max_skip << "\n"
     << "lr=" << lr << "\n"
     << "scales=" << join_scales(scales) << "\n"
     << "seed=" << seed << "\n"
     << "dump_probs=" << dump_probs << "\n"
     << "disable_cm=" << disable_cm << "\n"
     << "first_frame_only=" << first_frame_only << "\n"
     << "single_encoder=" << single_encoder << "\n"
     << "occlusion_heavy=" << occlusion_heavy << "\n";
  return os.str();
}

int run_cli(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Non-local pixel matching with channel attention for video object segmentation"};
  app.require_subcommand(1);
  std::string scales_text;

  auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", rc.seed, "Master seed (NPMCA_SEED overrides)"); };
  auto arch_flags = [&](CLI::App* sub) {
    sub->add_flag("--disable-cm", rc.disable_cm, "Drop the channel attention modules");
    sub->add_flag("--single-encoder", rc.single_encoder, "Encode references with the target encoder");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--out", rc.out, "Dataset root")->required();
  gen->add_option("--n", rc.n, "Number of sequences")->required();
  gen->add_flag("--occlusion-heavy", rc.occlusion_heavy, "Force a scheduled crossing in every sequence");
  seed_opt(gen);

  CLI::App* trn = app.add_subcommand("train", "Train the model");
  trn->add_option("--data", rc.data, "Dataset root")->required();
  trn->add_option("--out", rc.out, "Output directory")->required();
  trn->add_option("--checkpoint", rc.checkpoint, "Checkpoint to write (default <out>/model.ckpt)");
  trn->add_option("--init-checkpoint", rc.init_checkpoint, "Start from these weights");
  trn->add_option("--stage", rc.stage, "pretrain | finetune")->check(CLI::IsMember({"pretrain", "finetune"}));
  trn->add_option("--iters", rc.iters, "Iterations");
  trn->add_option("--lr", rc.lr, "Learning rate (default 1e-3 pretrain, 1e-4 finetune)");
  trn->add_option("--batch", rc.batch, "Triplets per iteration");
  trn->add_option("--max-skip", rc.max_skip, "Largest gap between previous and target frame");
  seed_opt(trn);
  arch_flags(trn);

  CLI::App* inf = app.add_subcommand("infer", "Propagate first-frame masks through sequences");
  inf->add_option("--data", rc.data, "Dataset root")->required();
  inf->add_option("--checkpoint", rc.checkpoint, "Model weights")->required();
  inf->add_option("--out", rc.out, "Prediction root")->required();
  inf->add_option("--scales", scales_text, "Comma-separated inference scales (default 0.75,1.0,1.25)");
  inf->add_flag("--dump-probs", rc.dump_probs, "Also write per-object probability maps");
  inf->add_flag("--first-frame-only", rc.first_frame_only, "Use frame 0 for both reference branches");
  arch_flags(inf);

  CLI::App* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("--data", rc.data, "Ground-truth dataset root")->required();
  ev->add_option("--pred", rc.pred, "Prediction root")->required();
  ev->add_option("--out", rc.out, "Report directory");

  CLI::App* ver = app.add_subcommand("verify", "Run the self-check suite");
  ver->add_option("--out", rc.out, "Report directory");
  ver->add_flag("--inject-naive-softmax", rc.inject_naive_softmax, "Fault injection: unstabilized softmax");
  seed_opt(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (const char* env = std::getenv("NPMCA_SEED")) {
      try {
        rc.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw CliError(kExitUsage, std::string("NPMCA_SEED is not an unsigned integer: ") + env);
      }
    }
    if (!scales_text.empty()) {
      rc.scales.clear();
      std::stringstream ss(scales_text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          rc.scales.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw CliError(kExitUsage, "bad scale '" + item + "'");
        }
      }
    }
    CLI::App* sub = app.get_subcommands().front();
    rc.command = sub->get_name();
    if (rc.command == "train" && rc.lr == 0.0) rc.lr = default_lr(rc.stage);
    if (sub == gen) return cmd_gen(rc);
    if (sub == trn) return cmd_train(rc);
    if (sub == inf) return cmd_infer(rc);
    if (sub == ev) return cmd_eval(rc);
    return cmd_verify(rc);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace npmca
