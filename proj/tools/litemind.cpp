// litemind: train, evaluate, retrieve, classify, verify and inspect.
//
//   litemind <command> [--config run.json] [--set section.field=value]... [flags]
//
// The config file is read first, then --set overlays, then the named flags.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "litemind/cli/commands.hpp"

namespace {

using namespace litemind;
using nlohmann::json;

struct Overrides {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, epochs, batch_size, pool, seeds, candidates;
  std::optional<double> lr, tau, alpha, timeout;
  std::optional<std::string> train_manifest, test_manifest, index_dir, endpoint, target;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Run config JSON");
  app->add_option("--set", o.sets, "Override one field, e.g. --set train.epochs=5 (value parsed as JSON)");
  app->add_option("--seed", o.seed, "train.seed");
  app->add_option("--threads", o.threads, "Worker threads for training and evaluation (0 = all cores)");
  app->add_option("--epochs", o.epochs, "train.epochs");
  app->add_option("--batch-size", o.batch_size, "train.batch_size");
  app->add_option("--lr", o.lr, "optimizer.lr");
  app->add_option("--tau", o.tau, "loss.tau");
  app->add_option("--alpha", o.alpha, "loss.alpha");
  app->add_option("--pool", o.pool, "eval.pool_size");
  app->add_option("--seeds", o.seeds, "eval.n_seeds");
  app->add_option("--train-manifest", o.train_manifest, "data.train_manifest");
  app->add_option("--test-manifest", o.test_manifest, "data.test_manifest");
  app->add_option("--target", o.target, "data.target (hidden | cls)");
  app->add_option("--index-dir", o.index_dir, "retrieve.index_dir");
  app->add_option("--endpoint", o.endpoint, "retrieve.endpoint");
  app->add_option("--candidates", o.candidates, "retrieve.candidates");
  app->add_option("--timeout", o.timeout, "retrieve.timeout_seconds");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? parse_run_config(json::object()) : read_run_config(o.config);
  if (!o.sets.empty()) {
    json overlay = json::object();
    for (const auto& s : o.sets) {
      const auto eq = s.find('=');
      const auto dot = s.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("--set expects section.field=value, got '" + s + "'");
      }
      const auto value = s.substr(eq + 1);
      json v = json::parse(value, nullptr, false);
      if (v.is_discarded()) v = value;
      overlay[s.substr(0, dot)][s.substr(dot + 1, eq - dot - 1)] = v;
    }
    if (!overlay.contains("projector") || !overlay["projector"].contains("dim")) {
      overlay["projector"]["dim"] = c.projector.dim;
    }
    c = parse_run_config(overlay, c);
  }
  if (o.seed) c.train.seed = *o.seed;
  if (o.threads) c.train.threads = c.eval.threads = *o.threads;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.lr) c.optimizer.lr = *o.lr;
  if (o.tau) c.loss.tau = *o.tau;
  if (o.alpha) c.loss.alpha = *o.alpha;
  if (o.pool) c.eval.pool_size = *o.pool;
  if (o.seeds) c.eval.n_seeds = *o.seeds;
  if (o.train_manifest) c.data.train_manifest = *o.train_manifest;
  if (o.test_manifest) c.data.test_manifest = *o.test_manifest;
  if (o.target) c.data.target = *o.target;
  if (o.index_dir) c.retrieve.index_dir = *o.index_dir;
  if (o.endpoint) c.retrieve.endpoint = *o.endpoint;
  if (o.candidates) c.retrieve.candidates = *o.candidates;
  if (o.timeout) c.retrieve.timeout_seconds = *o.timeout;
  c.validate();
  return c;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lite-Mind DFT backbone: training, retrieval and verification"};
  app.require_subcommand(1);
  Overrides o;
  std::string out;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (train/test manifests)");
  auto* train = app.add_subcommand("train", "Train a backbone; writes loss.csv and checkpoints");
  auto* eval = app.add_subcommand("eval", "Pool and full-rank retrieval report");
  auto* retrieve = app.add_subcommand("retrieve", "Two-stage CLS KNN + hidden re-rank retrieval");
  auto* classify = app.add_subcommand("classify", "Retrieval-based zero-shot classification");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check of the configured backbone");
  auto* params = app.add_subcommand("params", "Parameter count and FLOPs estimate");
  auto* serve = app.add_subcommand("serve-knn", "Serve a KNN index over HTTP");

  for (auto* sub : {synth, train, eval, retrieve, classify, gradcheck, params, serve}) add_config_flags(sub, o);
  for (auto* sub : {synth, train, eval, retrieve, classify, gradcheck}) {
    sub->add_option("--out", out, "Output directory");
  }
  synth->get_option("--out")->required();
  train->get_option("--out")->required();

  cli::EvalInputs ein;
  eval->add_option("--checkpoint", ein.checkpoint, "Checkpoint to embed data.test_manifest with");
  eval->add_option("--voxel-embeddings", ein.voxel_embeddings, "Precomputed voxel embeddings (.lmnd, N x E)");
  eval->add_option("--image-embeddings", ein.image_embeddings, "Precomputed image embeddings (.lmnd, N x E)");
  eval->add_option("--ids", ein.ids_file, "Stimulus ids, one per line, matching both stores");

  cli::RetrieveInputs rin;
  retrieve->add_option("--hidden-checkpoint", rin.hidden_checkpoint, "Backbone trained on hidden targets")->required();
  retrieve->add_option("--cls-checkpoint", rin.cls_checkpoint, "CLS backbone with projector")->required();
  retrieve->add_option("--index-manifest", rin.index_manifest, "Manifest whose cls store builds the index");
  retrieve->add_option("--save-index", rin.save_index, "Write the built index to this directory");

  std::string class_checkpoint;
  classify->add_option("--checkpoint", class_checkpoint, "Trained checkpoint")->required();

  double tolerance = 1e-6;
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  std::string host = "127.0.0.1", prefix, serve_manifest;
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--prefix", prefix, "URL prefix, e.g. /v1 serves /v1/knn");
  serve->add_option("--manifest", serve_manifest, "Build the index from this manifest's cls store");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    const RunConfig cfg = resolve(o);
    if (*synth) {
      print(cli::cmd_synth(cfg, out));
    } else if (*train) {
      print(cli::cmd_train(cfg, out));
    } else if (*eval) {
      print(cli::cmd_eval(cfg, ein, out));
    } else if (*retrieve) {
      auto report = cli::cmd_retrieve(cfg, rin, out);
      report.erase("queries");
      print(report);
    } else if (*classify) {
      print(cli::cmd_classify(cfg, class_checkpoint, out));
    } else if (*gradcheck) {
      const auto r = cli::cmd_gradcheck(cfg, tolerance, out);
      print(r.report);
      if (!r.pass) {
        std::cerr << "gradcheck failed: max relative error " << r.report["max_rel_err"].get<double>() << " > "
                  << tolerance << "\n";
        return static_cast<int>(ExitCode::verification);
      }
    } else if (*params) {
      print(cli::cmd_params(cfg));
    } else if (*serve) {
      const auto index = cli::index_from(cfg, serve_manifest.empty() ? cfg.data.test_manifest : serve_manifest);
      KnnServer<float> server(index, prefix);
      std::cout << "serving " << index.size() << " items on http://" << host << ":" << port << prefix << "/knn"
                << std::endl;
      server.run(host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data);
  }
  return 0;
}
