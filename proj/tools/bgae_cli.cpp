// bgae command-line interface.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bgae/bgae.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kValidation = 2, kDivergence = 3, kIo = 4 };

struct DiffusionFlags {
  std::string method = "auto";
  int order = 0;
  std::string sparsify = "topk";
  long topk = 128;
  double epsilon = 1e-4;
  bool renormalize = false;
  bool symmetrize = false;
  std::string kernel = "symmetric";
  bool self_loops = false;

  void attach(CLI::App& app, bgae::DiffusionConfig& config) {
    app.add_option("--alpha", config.alpha, "Teleport probability of the PPR diffusion")->capture_default_str();
    app.add_option("--diffusion-method", method, "auto | exact | series")->capture_default_str();
    app.add_option("--truncation-order", order, "Series order K (0 = derive from tolerance)")->capture_default_str();
    app.add_option("--sparsify", sparsify, "none | topk | threshold")->capture_default_str();
    app.add_option("--topk", topk, "Entries kept per row with --sparsify topk")->capture_default_str();
    app.add_option("--epsilon", epsilon, "Cutoff with --sparsify threshold")->capture_default_str();
    app.add_flag("--renormalize", renormalize, "Restore row sums after sparsification");
    app.add_flag("--symmetrize", symmetrize, "Replace S by (S + S^T) / 2 after sparsification");
    app.add_option("--kernel", kernel, "symmetric | column")->capture_default_str();
    app.add_flag("--diffusion-self-loops", self_loops, "Add self loops before building T");
  }

  void apply(bgae::DiffusionConfig& config) const {
    config.method = bgae::parse_diffusion_method(method);
    config.truncation_order = order;
    config.sparsify.mode = bgae::parse_sparsification(sparsify);
    config.sparsify.k = topk;
    config.sparsify.epsilon = epsilon;
    config.renormalize_after_sparsify = renormalize;
    config.symmetrize = symmetrize;
    config.kernel = bgae::parse_transition_kind(kernel);
    config.self_loops = self_loops;
  }
};

struct ExperimentFlags {
  bgae::ExperimentConfig config;
  DiffusionFlags diffusion;
  std::string task = "linkpred";
  std::string variant = "bgae";
  std::string fusion = "fixed";
  std::string config_file;
  bool no_encoder_self_loops = false;
  int log_every = 10;
  CLI::Option* patience_option = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "Load settings from a config or manifest JSON (other flags ignored)");
    app.add_option("--dataset", config.dataset, "Dataset bundle directory");
    app.add_option("--variant", variant, "bgae | bvgae")->capture_default_str();
    app.add_option("--fusion", fusion, "fixed | attention")->capture_default_str();
    app.add_option("--task", task, "linkpred | embed")->capture_default_str();
    app.add_option("--beta", config.beta, "Weight of the covariance loss")->capture_default_str();
    app.add_option("--lambda", config.lambda, "Off-diagonal weight inside the covariance loss")->capture_default_str();
    app.add_option("--dim", config.dim, "Embedding dimension")->capture_default_str();
    app.add_option("--lr", config.train.learning_rate, "Adam learning rate")->capture_default_str();
    app.add_option("--weight-decay", config.train.weight_decay, "Decoupled weight decay")->capture_default_str();
    app.add_option("--lr-decay", config.train.lr_decay, "lr / (1 + decay * step) schedule (0 = off)")
        ->capture_default_str();
    app.add_option("--epochs", config.train.max_epochs, "Maximum epochs")->capture_default_str();
    patience_option = app.add_option("--patience", config.train.patience,
                                     "Early-stopping patience in epochs (capped at --epochs unless given)")
                          ->capture_default_str();
    app.add_option("--seed", config.train.seed, "Training seed")->capture_default_str();
    app.add_option("--split-seed", config.split_seed, "Seed of the link-prediction edge split")
        ->capture_default_str();
    app.add_option("--edge-batch", config.edge_batch, "Positive pairs per epoch (0 = all)")->capture_default_str();
    app.add_flag("--row-normalize", config.row_normalize_features, "Scale feature rows to unit L1 norm");
    app.add_flag("--no-encoder-self-loops", no_encoder_self_loops, "Use D^-1/2 A D^-1/2 without A + I");
    app.add_option("--out", config.out, "Output directory");
    app.add_option("--log-every", log_every, "Log the loss every N epochs (0 = never)")->capture_default_str();
    diffusion.attach(app, config.diffusion);
  }

  bgae::ExperimentConfig resolve() const {
    bgae::ExperimentConfig c;
    if (!config_file.empty()) {
      std::ifstream in(config_file, std::ios::binary);
      if (!in) throw bgae::IoError("cannot open " + config_file);
      std::stringstream text;
      text << in.rdbuf();
      auto j = nlohmann::json::parse(text.str(), nullptr, false);
      if (j.is_discarded()) throw bgae::ValidationError(config_file + " is not valid JSON");
      if (j.contains("config")) j = j.at("config");
      c = bgae::ExperimentConfig::from_json(j.dump());
      if (!config.out.empty()) c.out = config.out;
    } else {
      c = config;
      c.task = bgae::parse_task(task);
      c.variant = bgae::parse_variant(variant);
      c.fusion = bgae::parse_fusion(fusion);
      c.encoder_self_loops = !no_encoder_self_loops;
      if (patience_option != nullptr && patience_option->count() == 0)
        c.train.patience = std::min(c.train.patience, c.train.max_epochs);
      diffusion.apply(c.diffusion);
    }
    c.validate();
    return c;
  }

  bgae::EpochCallback epoch_logger() const {
    if (log_every <= 0) return {};
    const int every = log_every;
    return [every](const bgae::LossRecord& r) {
      if (r.iteration % every != 0 && r.iteration != 1) return;
      if (std::isnan(r.validation)) {
        spdlog::info("epoch {:4d}  loss {:.6f}  bce_a {:.5f}  bce_s {:.5f}  cov {:.5f}/{:.5f}", r.iteration, r.total,
                     r.bce_a, r.bce_s, r.cov_diag, r.cov_offdiag);
      } else {
        spdlog::info("epoch {:4d}  loss {:.6f}  bce_a {:.5f}  bce_s {:.5f}  val_auc {:.4f}", r.iteration, r.total,
                     r.bce_a, r.bce_s, r.validation);
      }
    };
  }
};

void print_metrics(const bgae::MetricsReport& report) { std::cout << report.to_json() << '\n'; }

int cmd_validate(const std::string& dataset) {
  const auto bundle = bgae::load_bundle(dataset);
  std::cout << bundle.num_nodes() << " nodes, " << bundle.edges().size() << " edges, " << bundle.num_features()
            << " features, " << bundle.num_classes() << " classes\n";
  const auto& m = bundle.masks();
  std::cout << "split: " << m.train_ids().size() << " train, " << m.val_ids().size() << " val, "
            << m.test_ids().size() << " test\n";
  return kOk;
}

int cmd_diffuse(const std::string& dataset, bgae::DiffusionConfig config, const DiffusionFlags& flags,
                const std::string& out) {
  flags.apply(config);
  config.validate();
  const auto bundle = bgae::load_bundle(dataset);
  const auto s = bgae::diffuse(bundle.num_nodes(), bundle.edges(), config);
  bgae::write_diffusion(s, out);
  spdlog::info("wrote {} ({} nonzeros, approximation bound {:.3g})", out, s.matrix.nonZeros(), s.approximation_bound);
  return kOk;
}

int cmd_train(const ExperimentFlags& flags) {
  const auto config = flags.resolve();
  const auto data = bgae::prepare(config);
  spdlog::info("diffusion {} ({})", data.diffusion_cache_hit ? "loaded from cache" : "computed",
               data.diffusion_path.string());
  const auto outcome = bgae::run_training(config, data, flags.epoch_logger());
  bgae::write_run_artifacts(config, data, outcome);
  spdlog::info("trained {} epochs in {:.1f}s, best epoch {} (metric {:.6f}); artifacts in {}",
               outcome.state.epochs_run, outcome.seconds, outcome.state.best_epoch, outcome.state.best_metric,
               config.out.string());
  return kOk;
}

int cmd_evaluate(const std::string& run_dir, const std::string& dataset_override, const std::string& csv) {
  std::ifstream in(std::filesystem::path(run_dir) / "manifest.json", std::ios::binary);
  if (!in) throw bgae::IoError("cannot open " + (std::filesystem::path(run_dir) / "manifest.json").string());
  std::stringstream text;
  text << in.rdbuf();
  const auto manifest = nlohmann::json::parse(text.str(), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("config"))
    throw bgae::ValidationError("manifest.json in " + run_dir + " is malformed");
  auto config = bgae::ExperimentConfig::from_json(manifest.at("config").dump());
  if (!dataset_override.empty()) config.dataset = dataset_override;
  config.out = run_dir;
  const auto params = bgae::ModelParams::from_named(bgae::load_checkpoint(run_dir));
  const auto data = bgae::prepare(config);
  const auto report = bgae::evaluate(config, data, params);
  {
    std::ofstream out(std::filesystem::path(run_dir) / "metrics.json", std::ios::binary | std::ios::trunc);
    if (!out) throw bgae::IoError("cannot write metrics.json in " + run_dir);
    out << report.to_json() << '\n';
  }
  bgae::append_metrics_csv(report, config,
                           csv.empty() ? std::filesystem::path(run_dir) / "metrics.csv" : std::filesystem::path(csv));
  print_metrics(report);
  return kOk;
}

int cmd_pipeline(const ExperimentFlags& flags) {
  const auto config = flags.resolve();
  const auto result = bgae::run_pipeline(config, flags.epoch_logger());
  spdlog::info("diffusion {}; trained {} epochs", result.diffusion_cache_hit ? "loaded from cache" : "computed",
               result.training.state.epochs_run);
  print_metrics(result.report);
  return kOk;
}

int cmd_sweep(const ExperimentFlags& flags, bgae::SweepOptions options, const std::string& tasks) {
  const auto config = flags.resolve();
  options.link_prediction = tasks == "both" || tasks == "linkpred";
  options.embedding = tasks == "both" || tasks == "embed";
  if (!options.link_prediction && !options.embedding)
    throw bgae::ValidationError("--tasks must be linkpred, embed or both");
  const auto rows = bgae::run_sweep(config, options, [](const std::string& msg) { spdlog::info("{}", msg); });
  std::filesystem::create_directories(config.out);
  const auto path = config.out / "sweep.csv";
  bgae::write_sweep_csv(rows, options.reference_beta, path);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      spdlog::warn("beta {} failed: {}", r.beta, r.error);
    }
  }
  spdlog::info("wrote {} ({} rows, {} failed)", path.string(), rows.size() - failed, failed);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("bgae"));
  spdlog::set_pattern("[%H:%M:%S] %v");

  CLI::App app{"Dual-view graph autoencoder: training, diffusion and evaluation"};
  app.require_subcommand(1);

  std::string dataset;
  auto* validate = app.add_subcommand("validate", "Check a dataset bundle and print its statistics");
  validate->add_option("--dataset", dataset, "Dataset bundle directory")->required();

  bgae::DiffusionConfig diffusion_config;
  DiffusionFlags diffusion_flags;
  std::string diffusion_out;
  auto* diffuse = app.add_subcommand("diffuse", "Compute the sparsified PPR diffusion of a bundle");
  diffuse->add_option("--dataset", dataset, "Dataset bundle directory")->required();
  diffuse->add_option("--out", diffusion_out, "Output TSV (a .json sidecar is written next to it)")->required();
  diffusion_flags.attach(*diffuse, diffusion_config);

  ExperimentFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoint, losses and manifest");
  train_flags.attach(*train);

  std::string run_dir;
  std::string csv;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained run directory");
  evaluate->add_option("--run", run_dir, "Run directory written by train")->required();
  evaluate->add_option("--dataset", dataset, "Override the dataset path stored in the manifest");
  evaluate->add_option("--csv", csv, "CSV file to append the metrics row to (default RUN/metrics.csv)");

  ExperimentFlags pipeline_flags;
  auto* pipeline = app.add_subcommand("pipeline", "Diffuse, train and evaluate in one go");
  pipeline_flags.attach(*pipeline);

  ExperimentFlags sweep_flags;
  bgae::SweepOptions sweep_options;
  std::string sweep_tasks = "both";
  auto* sweep = app.add_subcommand("sweep", "Run the pipeline over a list of beta values");
  sweep_flags.attach(*sweep);
  sweep->add_option("--betas", sweep_options.betas, "Beta values")->delimiter(',')->capture_default_str();
  sweep->add_option("--workers", sweep_options.workers, "Worker threads (0 = available cores)")
      ->capture_default_str();
  sweep->add_option("--reference-beta", sweep_options.reference_beta, "Baseline of the relative columns")
      ->capture_default_str();
  sweep->add_option("--tasks", sweep_tasks, "linkpred | embed | both")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*validate) return cmd_validate(dataset);
    if (*diffuse) return cmd_diffuse(dataset, diffusion_config, diffusion_flags, diffusion_out);
    if (*train) return cmd_train(train_flags);
    if (*evaluate) return cmd_evaluate(run_dir, dataset, csv);
    if (*pipeline) return cmd_pipeline(pipeline_flags);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_options, sweep_tasks);
  } catch (const bgae::ValidationError& e) {
    for (const auto& v : e.violations()) spdlog::error("{}", v);
    return kValidation;
  } catch (const bgae::ParseError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const bgae::DivergenceError& e) {
    spdlog::error("{} (last finite epoch {})", e.what(), e.last_finite_epoch());
    return kDivergence;
  } catch (const bgae::IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kFailure;
}
