// Trainer, checkpoints, run configs and the command layer.

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "litemind/cli/commands.hpp"

using namespace litemind;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / "litemind_tests" / (std::string(info->test_suite_name()) + "." +
                                                            info->name() + "." + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small learnable problem: 32 voxels, 2 x 8 targets.
RunConfig small_config() {
  RunConfig c;
  c.backbone.voxel_len = 32;
  c.backbone.patch_size = 4;
  c.backbone.embed_dim = 8;
  c.backbone.out_dim = 8;
  c.backbone.depth = 2;
  c.backbone.filter_count = 2;
  c.backbone.out_tokens = 2;
  c.projector.dim = 8;
  c.loss.tau = 0.1;
  c.optimizer.lr = 1e-2;
  c.optimizer.weight_decay = 0.0;
  c.train.epochs = 3;
  c.train.batch_size = 50;
  c.train.eval_pool = 50;
  c.train.log_wall_time = false;
  c.synth.n_train = 200;
  c.synth.n_test = 50;
  c.synth.voxel_len = 32;
  c.synth.embed_tokens = 2;
  c.synth.embed_dim = 8;
  c.synth.noise_sigma = 0.05;
  c.eval.pool_size = 50;
  c.eval.n_seeds = 3;
  return c;
}

template <typename T>
PairedSet<T> paired(const SyntheticSplit<T>& s, const std::string& kind = "hidden") {
  const std::size_t n = s.ids.size();
  const auto& t = kind == "cls" ? s.cls : s.hidden;
  return {s.ids, s.voxels, RealTensor<T>({n, t.size() / n}, t.data)};
}

template <typename T>
std::vector<T> flatten(const LiteMindModel<T>& m) {
  std::vector<T> out;
  m.visit([&](const std::string&, const Shape&, const std::vector<T>& v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

}  // namespace

TEST(Trainer, ZeroLearningRateLeavesParametersUnchanged) {
  auto cfg = small_config();
  cfg.optimizer.lr = 0.0;
  cfg.optimizer.weight_decay = 0.0;
  const auto data = make_synthetic<double>(cfg.synth);
  const auto set = paired(data.train);
  const auto init = init_model<double>(cfg);
  const auto r = train<double>(init, set, nullptr, cfg);
  EXPECT_EQ(flatten(r.last), flatten(init));

  // Full-batch epochs: every epoch's loss is the initial full-set loss.
  cfg.train.batch_size = set.size();
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const double initial = batch_objective<double>(init, set, all, cfg.loss, 1, nullptr);
  const auto full = train<double>(init, set, nullptr, cfg);
  for (const auto& e : full.curve) EXPECT_NEAR(e.train_loss, initial, 1e-12 * std::abs(initial));
}

TEST(Trainer, LossDecreasesOnLearnableData) {
  auto cfg = small_config();
  cfg.train.epochs = 10;
  const auto data = make_synthetic<float>(cfg.synth);
  const auto r = train<float>(init_model<float>(cfg), paired(data.train), nullptr, cfg);
  ASSERT_EQ(r.curve.size(), 10u);
  EXPECT_LT(r.curve.back().train_loss, 0.8 * r.curve.front().train_loss);
}

TEST(Trainer, SameSeedIsBitIdentical) {
  auto cfg = small_config();
  const auto data = make_synthetic<float>(cfg.synth);
  const auto tr = paired(data.train), te = paired(data.test);
  const auto a = train<float>(init_model<float>(cfg), tr, &te, cfg);
  const auto b = train<float>(init_model<float>(cfg), tr, &te, cfg);
  EXPECT_EQ(flatten(a.last), flatten(b.last));
  std::string ca, cb;
  for (const auto& e : a.curve) ca += loss_csv_row(e);
  for (const auto& e : b.curve) cb += loss_csv_row(e);
  EXPECT_EQ(ca, cb);

  cfg.train.seed = 1;
  const auto c = train<float>(init_model<float>(cfg), tr, &te, cfg);
  EXPECT_NE(flatten(a.last), flatten(c.last));
}

TEST(Trainer, ThreadCountOnlyChangesReductionOrder) {
  auto cfg = small_config();
  const auto data = make_synthetic<double>(cfg.synth);
  const auto tr = paired(data.train);
  const auto one = train<double>(init_model<double>(cfg), tr, nullptr, cfg);
  cfg.train.threads = 4;
  const auto four = train<double>(init_model<double>(cfg), tr, nullptr, cfg);
  const auto a = flatten(one.last), b = flatten(four.last);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * (1.0 + std::abs(a[i])));
}

TEST(Trainer, TrailingSingletonBatchIsSkipped) {
  auto cfg = small_config();
  cfg.synth.n_train = 101;
  cfg.optimizer.lr = 0.0;
  cfg.train.batch_size = 50;
  cfg.train.epochs = 1;
  const auto data = make_synthetic<double>(cfg.synth);
  const auto r = train<double>(init_model<double>(cfg), paired(data.train), nullptr, cfg);
  EXPECT_TRUE(std::isfinite(r.curve[0].train_loss));
  EXPECT_GT(r.curve[0].train_loss, 0.0);
}

TEST(Trainer, EvalTop1NonDecreasingOnSeparableData) {
  // Realizable targets: a teacher backbone of the same shape labels Gaussian
  // inputs. Eval items are kept only if their targets are pairwise cosine <= 0.6,
  // so every eval pair is separable by the student.
  auto cfg = small_config();
  cfg.loss.tau = 0.1;
  cfg.optimizer.lr = 2e-2;
  cfg.train.batch_size = 100;
  cfg.train.epochs = 10;
  const auto teacher = init_backbone<float>(cfg.backbone, 1004);
  auto make = [&](std::uint64_t seed, std::size_t n) {
    SplitMix64 rng(seed);
    RealTensor<float> x({n, cfg.backbone.voxel_len});
    for (auto& v : x.data) v = static_cast<float>(rng.normal());
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
    return PairedSet<float>{ids, x, embed_all(teacher, x, 1)};
  };
  const auto tr = make(1, 2000);
  const auto pool = make(2, 1000);
  auto cosine = [&](std::size_t a, std::size_t b) {
    const auto ra = pool.targets.row(a), rb = pool.targets.row(b);
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      d += ra[i] * rb[i];
      na += ra[i] * ra[i];
      nb += rb[i] * rb[i];
    }
    return d / std::sqrt(na * nb);
  };
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pool.size() && keep.size() < 50; ++i)
    if (std::all_of(keep.begin(), keep.end(), [&](std::size_t k) { return cosine(i, k) <= 0.6; })) keep.push_back(i);
  ASSERT_GE(keep.size(), 10u);
  PairedSet<float> te{{}, RealTensor<float>({keep.size(), pool.x.cols()}),
                      RealTensor<float>({keep.size(), pool.targets.cols()})};
  for (std::size_t j = 0; j < keep.size(); ++j) {
    te.ids.push_back(pool.ids[keep[j]]);
    std::ranges::copy(pool.x.row(keep[j]), te.x.row(j).begin());
    std::ranges::copy(pool.targets.row(keep[j]), te.targets.row(j).begin());
  }
  cfg.train.eval_pool = keep.size();

  std::size_t monotone = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.train.seed = seed;
    const auto r = train<float>(init_model<float>(cfg), tr, &te, cfg);
    bool ok = true;
    for (std::size_t e = 1; e < r.curve.size(); ++e) {
      const auto& p = r.curve[e - 1];
      const auto& c = r.curve[e];
      ok = ok && c.eval_top1_fwd >= p.eval_top1_fwd && c.eval_top1_bwd >= p.eval_top1_bwd;
    }
    monotone += ok ? 1 : 0;
  }
  EXPECT_GE(monotone, 9u);
}

TEST(Trainer, BestCheckpointTracksEvalMetric) {
  auto cfg = small_config();
  cfg.train.epochs = 6;
  const auto data = make_synthetic<float>(cfg.synth);
  const auto tr = paired(data.train), te = paired(data.test);
  std::vector<double> metric;
  std::vector<std::vector<float>> snapshots;
  const auto r = train<float>(init_model<float>(cfg), tr, &te, cfg,
                              [&](const EpochLog& e, bool, const LiteMindModel<float>& m) {
                                metric.push_back(0.5 * (e.eval_top1_fwd + e.eval_top1_bwd));
                                snapshots.push_back(flatten(m));
                              });
  ASSERT_EQ(metric.size(), 6u);
  if (r.best_epoch > 0) {
    const double best = metric[r.best_epoch - 1];
    for (std::size_t e = 0; e < r.best_epoch - 1; ++e) EXPECT_LT(metric[e], best);
    for (std::size_t e = r.best_epoch; e < metric.size(); ++e) EXPECT_LE(metric[e], best);
    EXPECT_EQ(flatten(r.best), snapshots[r.best_epoch - 1]);
  }
}

TEST(Trainer, ProjectorLearnsOnlyWhenAlphaPositive) {
  auto cfg = small_config();
  cfg.backbone.variant = Variant::cls;
  cfg.backbone.out_tokens = 1;
  cfg.data.target = "cls";
  cfg.loss.alpha = 0.5;
  const auto data = make_synthetic<double>(cfg.synth);
  const auto tr = paired(data.train, "cls");
  auto m = init_model<double>(cfg);
  ASSERT_TRUE(m.projector.has_value());
  const auto r = train<double>(m, tr, nullptr, cfg);
  std::vector<double> before, after;
  m.projector->visit([&](const std::string&, const Shape&, const std::vector<double>& v) {
    before.insert(before.end(), v.begin(), v.end());
  });
  r.last.projector->visit([&](const std::string&, const Shape&, const std::vector<double>& v) {
    after.insert(after.end(), v.begin(), v.end());
  });
  EXPECT_NE(before, after);

  cfg.loss.alpha = 0.0;
  EXPECT_FALSE(init_model<double>(cfg).projector.has_value());
}

TEST(Trainer, ProjectorObjectiveExplainsHeldOutTargets) {
  // Projector alone under the combined objective on fixed inputs: f is a noisy
  // linear image of v, both unit rows. Held-out R^2 of the projection > 0.5.
  const std::size_t D = 16, N = 600, n_train = 500;
  SplitMix64 rng(7);
  RealTensor<double> map({D, D});
  for (auto& a : map.data) a = rng.normal() / std::sqrt(static_cast<double>(D));
  RealTensor<double> F({N, D}), V({N, D});
  auto unit = [](std::span<double> r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    for (double& x : r) x /= std::sqrt(s);
  };
  for (std::size_t s = 0; s < N; ++s) {
    auto v = V.row(s), f = F.row(s);
    for (auto& x : v) x = rng.normal();
    unit(v);
    for (std::size_t i = 0; i < D; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < D; ++k) acc += map.data[i * D + k] * v[k];
      f[i] = acc + 0.05 * rng.normal() / std::sqrt(static_cast<double>(D));
    }
    unit(f);
  }
  auto rows = [&](const RealTensor<double>& t, std::size_t a, std::size_t b) {
    return RealTensor<double>({b - a, D}, std::vector<double>(t.data.begin() + a * D, t.data.begin() + b * D));
  };
  const auto Ftr = rows(F, 0, n_train), Vtr = rows(V, 0, n_train);
  const auto Fte = rows(F, n_train, N), Vte = rows(V, n_train, N);

  ClsProjectorConfig pc;
  pc.dim = D;
  pc.blocks = 2;
  auto proj = init_projector<double>(pc, 3);
  OptimizerConfig oc;
  oc.lr = 3e-3;
  oc.weight_decay = 0.0;
  AdamW<double> opt(oc);
  LossConfig lc;
  lc.tau = 0.1;
  lc.alpha = 0.5;
  for (int step = 0; step < 1500; ++step) {
    ProjectorCache<double> cache;
    const auto Vhat = project_cls(Ftr, proj, &cache);
    const auto tl = total_loss(Ftr, Vtr, &Vhat, &Vtr, lc);
    auto grad = zeros_like(proj);
    project_cls_backward(tl.grad_projection, proj, cache, grad);
    opt.step_model(proj, grad);
  }
  const auto pred = project_cls(Fte, proj);
  double sse = 0.0, sst = 0.0;
  std::vector<double> mean(D, 0.0);
  for (std::size_t s = 0; s < Vte.rows(); ++s)
    for (std::size_t i = 0; i < D; ++i) mean[i] += Vte.row(s)[i] / static_cast<double>(Vte.rows());
  for (std::size_t s = 0; s < Vte.rows(); ++s) {
    for (std::size_t i = 0; i < D; ++i) {
      sse += std::pow(pred.row(s)[i] - Vte.row(s)[i], 2);
      sst += std::pow(Vte.row(s)[i] - mean[i], 2);
    }
  }
  EXPECT_GT(1.0 - sse / sst, 0.5);
}

TEST(Trainer, RejectsMismatchedData) {
  auto cfg = small_config();
  const auto data = make_synthetic<float>(cfg.synth);
  auto set = paired(data.train);
  auto wrong = cfg;
  wrong.backbone.voxel_len = 40;
  EXPECT_THROW(train<float>(init_model<float>(wrong), set, nullptr, cfg), DataError);
  set.targets = RealTensor<float>({set.size(), 7});
  EXPECT_THROW(train<float>(init_model<float>(cfg), set, nullptr, cfg), DataError);
}

TEST(LossCsv, FormatWithAndWithoutEval) {
  EpochLog e;
  e.epoch = 3;
  e.train_loss = 0.5;
  EXPECT_EQ(loss_csv_row(e), "3,0.5,,,0\n");
  e.has_eval = true;
  e.eval_top1_fwd = 0.25;
  e.eval_top1_bwd = 1.0;
  EXPECT_EQ(loss_csv_row(e), "3,0.5,0.25,1,0\n");
  EXPECT_EQ(loss_csv_header(), "epoch,train_loss,eval_top1_fwd,eval_top1_bwd,wall_seconds\n");
}

TEST(RunConfig, JsonRoundTrip) {
  auto c = small_config();
  c.backbone.variant = Variant::cls;
  c.backbone.out_tokens = 1;
  c.loss.alpha = 0.5;
  c.eval.top_k = {1, 3, 7};
  c.retrieve.endpoint = "http://127.0.0.1:9/v1";
  const auto j = to_json(c);
  const auto back = parse_run_config(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_NO_THROW(back.validate());
}

TEST(RunConfig, DefaultsAreTheReferenceHyperparameters) {
  const auto c = parse_run_config(nlohmann::json::object());
  EXPECT_EQ(c.train.batch_size, 500u);
  EXPECT_DOUBLE_EQ(c.optimizer.lr, 1e-3);
  EXPECT_DOUBLE_EQ(c.optimizer.weight_decay, 7.0);
  EXPECT_EQ(c.backbone.patch_size, 480u);
  EXPECT_EQ(c.backbone.filter_count, 4u);
  EXPECT_DOUBLE_EQ(c.loss.tau, std::exp(-8.0));
  EXPECT_EQ(c.projector.dim, c.backbone.out_dim);
}

TEST(RunConfig, PartialDocumentOverlaysBase) {
  auto base = small_config();
  const auto c = parse_run_config(nlohmann::json::parse(R"({"train": {"epochs": 7}})"), base);
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.train.batch_size, base.train.batch_size);
  EXPECT_EQ(c.backbone.voxel_len, base.backbone.voxel_len);
}

TEST(RunConfig, RejectsUnknownAndMistypedFields) {
  using nlohmann::json;
  auto msg = [](const json& j) -> std::string {
    try {
      parse_run_config(j);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(msg(json::parse(R"({"train": {"epoch": 3}})")).find("train.epoch"), std::string::npos);
  EXPECT_NE(msg(json::parse(R"({"trian": {}})")).find("trian"), std::string::npos);
  EXPECT_NE(msg(json::parse(R"({"train": {"epochs": -1}})")).find("train.epochs"), std::string::npos);
  EXPECT_NE(msg(json::parse(R"({"loss": {"tau": "small"}})")).find("loss.tau"), std::string::npos);
  EXPECT_NE(msg(json::parse(R"({"backbone": {"variant": "pooled"}})")), "");
}

TEST(RunConfig, ValidateCrossFieldRules) {
  auto c = small_config();
  c.loss.alpha = 0.5;  // hidden variant with a projector
  EXPECT_THROW(c.validate(), ConfigError);
  c.backbone.variant = Variant::cls;
  c.backbone.out_tokens = 1;
  EXPECT_NO_THROW(c.validate());
  c.projector.dim = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.data.target = "pixels";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, FileResolvesRelativePaths) {
  const auto dir = scratch_dir("cfg");
  fs::create_directories(dir / "sub");
  write_text((dir / "sub" / "run.json").string(),
             R"({"data": {"train_manifest": "../d/train.json", "test_manifest": "/abs/test.json"}})");
  const auto c = read_run_config((dir / "sub" / "run.json").string());
  EXPECT_EQ(fs::path(c.data.train_manifest), fs::absolute(dir / "d" / "train.json").lexically_normal());
  EXPECT_EQ(c.data.test_manifest, "/abs/test.json");

  write_text((dir / "bad.json").string(), "{\"train\": ");
  try {
    read_run_config((dir / "bad.json").string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(CommittedConfigs, ParseAndValidate) {
  const fs::path root = LITEMIND_SOURCE_DIR "/configs";
  for (const char* name : {"nsd_subj1.json", "god_subj.json", "tiny.json", "synth.json"}) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(read_run_config((root / name).string()).validate());
  }
  const auto tiny = read_run_config((root / "tiny.json").string());
  EXPECT_EQ(tiny.backbone.voxel_len, 10u);
  EXPECT_EQ(tiny.backbone.patch_size, 2u);
  EXPECT_EQ(tiny.backbone.embed_dim, 4u);
  EXPECT_EQ(tiny.backbone.depth, 2u);
  EXPECT_EQ(tiny.backbone.filter_count, 2u);
  EXPECT_EQ(tiny.backbone.out_tokens, 3u);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = scratch_dir("ck");
  auto cfg = small_config();
  cfg.backbone.variant = Variant::cls;
  cfg.backbone.out_tokens = 1;
  cfg.loss.alpha = 1.0;
  const auto m = init_model<float>(cfg);
  save_checkpoint((dir / "a").string(), m, cfg, 4);
  const auto ck = load_checkpoint<float>((dir / "a").string());
  EXPECT_EQ(ck.epoch, 4u);
  EXPECT_EQ(to_json(ck.config), to_json(cfg));
  EXPECT_EQ(flatten(ck.model), flatten(m));
  ASSERT_TRUE(ck.model.projector.has_value());

  // Same model, same bytes.
  save_checkpoint((dir / "b").string(), ck.model, ck.config, 4);
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / fs::relative(e.path(), dir / "a"))) << e.path();
  }
}

TEST(Checkpoint, CorruptionIsReported) {
  const auto dir = scratch_dir("ck");
  const auto cfg = small_config();
  save_checkpoint((dir / "c").string(), init_model<float>(cfg), cfg, 1);

  write_text((dir / "c" / "INCOMPLETE").string(), "");
  EXPECT_THROW(load_checkpoint<float>((dir / "c").string()), DataError);
  fs::remove(dir / "c" / "INCOMPLETE");

  // Swap one parameter file for a tensor of the wrong shape.
  const auto manifest = nlohmann::json::parse(slurp(dir / "c" / "manifest.json"));
  const auto victim = manifest["params"][0]["file"].get<std::string>();
  write_tensor((dir / "c" / victim).string(), RealTensor<float>({1, 1}));
  try {
    load_checkpoint<float>((dir / "c").string());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(manifest["params"][0]["name"].get<std::string>()), std::string::npos);
  }
  EXPECT_THROW(load_checkpoint<float>((dir / "missing").string()), DataError);
}

TEST(Commands, TrainWritesCompleteRunDirectory) {
  const auto dir = scratch_dir("run");
  auto cfg = small_config();
  const auto paths = cli::cmd_synth(cfg, (dir / "data").string());
  EXPECT_FALSE(fs::exists(dir / "data" / "INCOMPLETE"));
  cfg.data.train_manifest = paths["train_manifest"];
  cfg.data.test_manifest = paths["test_manifest"];
  const auto report = cli::cmd_train(cfg, (dir / "run").string());
  for (const char* f : {"loss.csv", "run_config.json", "train_report.json", "checkpoint/manifest.json",
                        "last/manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "run" / "INCOMPLETE"));
  const auto csv = slurp(dir / "run" / "loss.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + static_cast<long>(cfg.train.epochs));

  // The provenance file reproduces the run.
  const auto again = read_run_config((dir / "run" / "run_config.json").string());
  EXPECT_EQ(to_json(again), to_json(cfg));
  cli::cmd_train(again, (dir / "rerun").string());
  EXPECT_EQ(slurp(dir / "rerun" / "loss.csv"), csv);

  const auto best = load_checkpoint<float>((dir / "run" / "checkpoint").string());
  EXPECT_EQ(best.epoch, report["best_epoch"].get<std::size_t>());

  const auto ev = cli::cmd_eval(cfg, {(dir / "run" / "checkpoint").string(), "", "", ""}, "");
  EXPECT_EQ(ev["n"], cfg.synth.n_test);
}

TEST(Commands, FailedRunStaysMarkedIncomplete) {
  const auto dir = scratch_dir("run");
  auto cfg = small_config();
  cli::cmd_synth(cfg, (dir / "data").string());
  cfg.data.train_manifest = (dir / "data" / "train_manifest.json").string();
  cfg.data.test_manifest = (dir / "data" / "test_manifest.json").string();
  auto bad = cfg;
  bad.backbone.voxel_len = 40;  // data has 32 voxels
  bad.synth.voxel_len = 40;
  EXPECT_THROW(cli::cmd_train(bad, (dir / "run").string()), DataError);
  EXPECT_TRUE(fs::exists(dir / "run" / "INCOMPLETE"));
}

TEST(Commands, EvalOnSelfPairedStoresIsPerfect) {
  const auto dir = scratch_dir("eval");
  const std::size_t N = 400;
  SplitMix64 rng(5);
  RealTensor<float> E({N, 12});
  for (auto& v : E.data) v = static_cast<float>(rng.normal());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < N; ++i) ids.push_back("s" + std::to_string(i));
  write_tensor((dir / "e.lmnd").string(), E);
  std::string id_text;
  for (const auto& id : ids) id_text += id + "\n";
  write_text((dir / "ids.txt").string(), id_text);

  auto cfg = small_config();
  cfg.eval.pool_size = 300;
  cfg.eval.n_seeds = 30;
  const auto r = cli::cmd_eval(cfg, {"", (dir / "e.lmnd").string(), (dir / "e.lmnd").string(),
                                     (dir / "ids.txt").string()},
                               (dir / "out").string());
  for (const auto& rep : r["pool"]["reports"]) EXPECT_EQ(rep["acc_mean"].get<double>(), 1.0);
  EXPECT_EQ(r["full_rank"]["voxel_to_image"]["1"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "eval_report.json"));
  EXPECT_THROW(cli::cmd_eval(cfg, {}, ""), ConfigError);
}

TEST(Commands, GradcheckOnTinyConfigPasses) {
  const auto cfg = read_run_config(LITEMIND_SOURCE_DIR "/configs/tiny.json");
  const auto r = cli::cmd_gradcheck(cfg, 1e-6, "");
  EXPECT_TRUE(r.pass) << r.report.dump();
  EXPECT_EQ(r.report["nonsmooth"], 0);
}

TEST(Commands, ParamsReportsBreakdown) {
  const auto cfg = read_run_config(LITEMIND_SOURCE_DIR "/configs/nsd_subj1.json");
  const auto j = cli::cmd_params(cfg);
  const auto& p = j["params"];
  EXPECT_EQ(p["total"].get<std::size_t>(),
            p["embedder"].get<std::size_t>() + p["blocks"].get<std::size_t>() + p["projector"].get<std::size_t>());
  EXPECT_EQ(p["blocks"].get<std::size_t>(), 21 * p["per_block"].get<std::size_t>());
}

TEST(Commands, RetrieveLocalAndRemoteAgree) {
  const auto dir = scratch_dir("ret");
  auto cfg = small_config();
  cfg.synth.n_test = 40;
  cli::cmd_synth(cfg, (dir / "data").string());
  cfg.data.test_manifest = (dir / "data" / "test_manifest.json").string();

  auto hid = cfg;
  save_checkpoint((dir / "hid").string(), init_model<float>(hid), hid, 0);
  auto cls = cfg;
  cls.backbone.variant = Variant::cls;
  cls.backbone.out_tokens = 1;
  cls.loss.alpha = 0.5;
  save_checkpoint((dir / "cls").string(), init_model<float>(cls), cls, 0);

  cfg.retrieve.candidates = 5;
  cli::RetrieveInputs in{(dir / "hid").string(), (dir / "cls").string(), "", (dir / "index").string()};
  const auto local = cli::cmd_retrieve(cfg, in, (dir / "local").string());
  EXPECT_EQ(local["queries"].size(), 40u);

  const auto index = load_knn_index<float>((dir / "index").string());
  KnnServer<float> server(index);
  const int port = server.start();
  auto remote_cfg = cfg;
  remote_cfg.retrieve.endpoint = "http://127.0.0.1:" + std::to_string(port);
  in.save_index.clear();
  const auto remote = cli::cmd_retrieve(remote_cfg, in, "");
  EXPECT_EQ(remote["queries"].dump(), local["queries"].dump());
  server.stop();

  in.cls_checkpoint = in.hidden_checkpoint;  // no projector
  EXPECT_THROW(cli::cmd_retrieve(cfg, in, ""), ConfigError);
}

TEST(Commands, ClassifyNoiselessClassesIsPerfect) {
  const auto dir = scratch_dir("cls");
  auto cfg = small_config();
  cfg.synth.class_count = 5;
  cfg.synth.class_spread = 0.0;
  cfg.synth.noise_sigma = 0.0;
  cli::cmd_synth(cfg, (dir / "data").string());
  cfg.data.test_manifest = (dir / "data" / "test_manifest.json").string();
  save_checkpoint((dir / "ck").string(), init_model<float>(cfg), cfg, 0);
  // An untrained backbone does not map voxels to targets; this checks wiring
  // and the report layout, not accuracy.
  const auto r = cli::cmd_classify(cfg, (dir / "ck").string(), (dir / "out").string());
  EXPECT_TRUE(r.contains("top1"));
  EXPECT_TRUE(fs::exists(dir / "out" / "classify_report.json"));
}
