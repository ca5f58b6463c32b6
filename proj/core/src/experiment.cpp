#include "bgae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "bgae/checkpoint.hpp"
#include "bgae/errors.hpp"
#include "json_io.hpp"

namespace bgae {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t edge_digest(Index num_nodes, std::span<const Edge> edges) {
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (auto& e : sorted) e = Edge::canonical(e.u, e.v);
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = fnv1a(std::to_string(num_nodes));
  for (const auto& e : sorted) {
    const std::uint64_t pair[2] = {static_cast<std::uint64_t>(e.u), static_cast<std::uint64_t>(e.v)};
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(pair), sizeof(pair)), h);
  }
  return h;
}

std::string dataset_id(const std::filesystem::path& dir) {
  auto p = dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  auto name = p.filename().string();
  return name.empty() ? "dataset" : name;
}

detail::json config_json(const ExperimentConfig& c, bool with_out) {
  detail::json j{{"dataset", c.dataset.string()},
                 {"task", to_string(c.task)},
                 {"variant", to_string(c.variant)},
                 {"fusion", to_string(c.fusion)},
                 {"diffusion", detail::to_json(c.diffusion)},
                 {"beta", c.beta},
                 {"lambda", c.lambda},
                 {"edge_batch", c.edge_batch},
                 {"dim", c.dim},
                 {"train", detail::to_json(c.train)},
                 {"encoder_self_loops", c.encoder_self_loops},
                 {"row_normalize_features", c.row_normalize_features},
                 {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
                 {"split_seed", c.split_seed}};
  if (with_out) j["out"] = c.out.string();
  return j;
}

SparseOperand share(SparseMatrix m) { return std::make_shared<const SparseMatrix>(std::move(m)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Task task) { return task == Task::LinkPrediction ? "linkpred" : "embed"; }
std::string to_string(Variant variant) { return variant == Variant::Bgae ? "bgae" : "bvgae"; }
std::string to_string(FusionMode mode) { return mode == FusionMode::Fixed ? "fixed" : "attention"; }

Task parse_task(std::string_view text) {
  if (text == "linkpred") return Task::LinkPrediction;
  if (text == "embed") return Task::Embedding;
  throw ValidationError("unknown task '" + std::string(text) + "' (expected linkpred or embed)");
}

Variant parse_variant(std::string_view text) {
  if (text == "bgae") return Variant::Bgae;
  if (text == "bvgae") return Variant::Bvgae;
  throw ValidationError("unknown variant '" + std::string(text) + "' (expected bgae or bvgae)");
}

FusionMode parse_fusion(std::string_view text) {
  if (text == "fixed") return FusionMode::Fixed;
  if (text == "attention") return FusionMode::Attention;
  throw ValidationError("unknown fusion '" + std::string(text) + "' (expected fixed or attention)");
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto absorb = [&](auto&& check) {
    try {
      check();
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.violations().begin(), e.violations().end());
    }
  };
  if (dataset.empty()) problems.push_back("dataset path is required");
  if (out.empty()) problems.push_back("output directory is required");
  if (dim < 1) problems.push_back("dim must be positive");
  if (edge_batch < 0) problems.push_back("edge_batch must be non-negative");
  const double total = split.train + split.val + split.test;
  if (!(split.val >= 0.0 && split.test >= 0.0 && split.train > 0.0) || std::abs(total - 1.0) > 1e-9)
    problems.push_back("split fractions must be non-negative and sum to 1");
  if (task == Task::LinkPrediction && !(split.val > 0.0 && split.test > 0.0))
    problems.push_back("link prediction needs non-empty validation and test fractions");
  absorb([&] { diffusion.validate(); });
  absorb([&] { loss().validate(); });
  absorb([&] { train.validate(); });
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

LossConfig ExperimentConfig::loss() const {
  LossConfig c;
  c.beta = beta;
  c.lambda = lambda;
  c.variational = variant == Variant::Bvgae;
  c.edge_batch = edge_batch;
  return c;
}

std::string ExperimentConfig::to_json() const { return config_json(*this, true).dump(2); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ExperimentConfig c;
    c.dataset = j.at("dataset").get<std::string>();
    c.task = parse_task(j.value("task", to_string(c.task)));
    c.variant = parse_variant(j.value("variant", to_string(c.variant)));
    c.fusion = parse_fusion(j.value("fusion", to_string(c.fusion)));
    if (j.contains("diffusion")) c.diffusion = detail::diffusion_config_from_json(j.at("diffusion"));
    c.beta = j.value("beta", c.beta);
    c.lambda = j.value("lambda", c.lambda);
    c.edge_batch = j.value("edge_batch", c.edge_batch);
    c.dim = j.value("dim", c.dim);
    if (j.contains("train")) c.train = detail::train_config_from_json(j.at("train"));
    c.encoder_self_loops = j.value("encoder_self_loops", c.encoder_self_loops);
    c.row_normalize_features = j.value("row_normalize_features", c.row_normalize_features);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split = {s.value("train", c.split.train), s.value("val", c.split.val), s.value("test", c.split.test)};
    }
    c.split_seed = j.value("split_seed", c.split_seed);
    c.out = j.value("out", std::string{});
    return c;
  } catch (const detail::json::exception& e) {
    throw ValidationError(std::string("config field has the wrong type: ") + e.what());
  }
}

std::string ExperimentConfig::hash() const { return hex16(fnv1a(config_json(*this, false).dump())); }

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("BGAE_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0')
    return std::filesystem::path(xdg) / "bgae";
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0')
    return std::filesystem::path(home) / ".cache" / "bgae";
  return std::filesystem::temp_directory_path() / "bgae-cache";
}

DiffusionMatrix cached_diffusion(Index num_nodes, std::span<const Edge> edges, const DiffusionConfig& config,
                                 const std::string& id, const std::filesystem::path& cache_dir, bool* cache_hit,
                                 std::filesystem::path* path) {
  const std::string key = hex16(fnv1a(detail::to_json(config).dump(), edge_digest(num_nodes, edges)));
  const auto file = cache_dir / (id + "-" + key + ".tsv");
  if (path != nullptr) *path = file;
  auto sidecar = file;
  sidecar += ".json";
  std::error_code ec;
  if (std::filesystem::exists(file, ec) && std::filesystem::exists(sidecar, ec)) {
    if (cache_hit != nullptr) *cache_hit = true;
    return read_diffusion(file);
  }
  if (cache_hit != nullptr) *cache_hit = false;
  DiffusionMatrix s = diffuse(num_nodes, edges, config);

  // Write under a private name, then rename: the sidecar first, the matrix
  // last, so a visible matrix always has its sidecar.
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) throw IoError("cannot create cache directory " + cache_dir.string() + ": " + ec.message());
  std::random_device rd;
  const auto tmp = cache_dir / (id + "-" + key + ".tmp" + hex16((std::uint64_t{rd()} << 32) | rd()) + ".tsv");
  auto tmp_sidecar = tmp;
  tmp_sidecar += ".json";
  write_diffusion(s, tmp);
  std::filesystem::rename(tmp_sidecar, sidecar, ec);
  if (!ec) std::filesystem::rename(tmp, file, ec);
  if (ec) throw IoError("cannot finalize cache entry " + file.string() + ": " + ec.message());
  return s;
}

PreparedData prepare(const ExperimentConfig& config) {
  config.validate();
  return prepare(config, load_bundle(config.dataset));
}

PreparedData prepare(const ExperimentConfig& config, const DatasetBundle& loaded) {
  config.validate();
  const DatasetBundle bundle = config.row_normalize_features ? loaded.with_row_normalized_features() : loaded;
  std::optional<EdgeSplit> split;
  std::vector<Edge> train_edges(bundle.edges().begin(), bundle.edges().end());
  if (config.task == Task::LinkPrediction) {
    split = split_edges(bundle, config.split, config.split_seed);
    train_edges = split->train_pos;
  }

  TrainingData training;
  training.num_nodes = bundle.num_nodes();
  training.features = share(bundle.features());
  training.local_view =
      share(normalize_adjacency(bundle.num_nodes(), train_edges, config.encoder_self_loops).matrix);
  bool hit = false;
  std::filesystem::path path;
  DiffusionMatrix s = cached_diffusion(bundle.num_nodes(), train_edges, config.diffusion, dataset_id(config.dataset),
                                       default_cache_dir(), &hit, &path);
  training.diffused_view = share(std::move(s.matrix));
  training.train_edges = std::move(train_edges);
  if (split) training.validation = ValidationEdges{split->val_pos, split->val_neg};

  return PreparedData{bundle, std::move(split), std::move(training), s.approximation_bound, hit, path};
}

TrainOutcome run_training(const ExperimentConfig& config, const PreparedData& data, const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  std::mt19937_64 init_rng(config.train.seed * 0x9E3779B97F4A7C15ULL + 1);
  auto params = ModelParams::init(config.variant, config.fusion, data.bundle.num_features(), config.dim, init_rng);
  TrainOutcome out;
  out.state = train(data.training, std::move(params), config.loss(), config.train, on_epoch);
  out.seconds = seconds_since(start);
  return out;
}

MetricsReport evaluate(const ExperimentConfig& config, const PreparedData& data, const ModelParams& params) {
  const auto start = Clock::now();
  MetricsReport report;
  report.task = to_string(config.task);
  report.dataset = dataset_id(config.dataset);
  report.seed = config.train.seed;
  report.config_hash = config.hash();

  const Matrix z = embed(params, data.training.local_view, data.training.diffused_view, data.training.features);
  if (!z.allFinite()) throw NumericError("embedding contains non-finite values");

  if (config.task == Task::LinkPrediction) {
    if (!data.split) throw ValidationError("link-prediction evaluation needs an edge split");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& e : data.split->test_pos) {
      scores.push_back(z.row(e.u).dot(z.row(e.v)));
      labels.push_back(1);
    }
    for (const auto& e : data.split->test_neg) {
      scores.push_back(z.row(e.u).dot(z.row(e.v)));
      labels.push_back(0);
    }
    report.metrics["auc"] = auc(scores, labels);
    report.metrics["ap"] = average_precision(scores, labels);
  } else {
    const auto truth = data.bundle.labels();
    KMeansOptions km;
    km.seed = config.train.seed;
    const auto clusters = kmeans(z, static_cast<int>(data.bundle.num_classes()), km);
    const auto scores = clustering_metrics(clusters.assignments, truth);
    report.metrics["acc"] = scores.accuracy;
    report.metrics["nmi"] = scores.nmi;
    report.metrics["ari"] = scores.ari;

    const auto train_ids = data.bundle.masks().train_ids();
    const auto test_ids = data.bundle.masks().test_ids();
    if (!train_ids.empty() && !test_ids.empty()) {
      auto gather = [&](const std::vector<Index>& ids, Matrix& x, std::vector<int>& y) {
        x.resize(static_cast<Index>(ids.size()), z.cols());
        y.resize(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
          x.row(static_cast<Index>(i)) = z.row(ids[i]);
          y[i] = truth[static_cast<std::size_t>(ids[i])];
        }
      };
      Matrix train_x;
      Matrix test_x;
      std::vector<int> train_y;
      std::vector<int> test_y;
      gather(train_ids, train_x, train_y);
      gather(test_ids, test_x, test_y);
      const auto model = fit_logistic(train_x, train_y, static_cast<int>(data.bundle.num_classes()));
      report.metrics["accuracy"] = accuracy(model.predict(test_x), test_y);
    }
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

void write_run_artifacts(const ExperimentConfig& config, const PreparedData& data, const TrainOutcome& outcome) {
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw IoError("cannot create " + config.out.string() + ": " + ec.message());
  save_checkpoint(outcome.state.params.named(), config.out);
  write_loss_csv(outcome.state.history, config.out / "losses.csv");

  detail::json manifest{
      {"config", config_json(config, true)},
      {"config_hash", config.hash()},
      {"epochs_run", outcome.state.epochs_run},
      {"best_epoch", outcome.state.best_epoch},
      {"best_metric", outcome.state.best_metric},
      {"early_stopped", outcome.state.early_stopped},
      {"train_seconds", outcome.seconds},
      {"diffusion",
       {{"cache_hit", data.diffusion_cache_hit},
        {"path", data.diffusion_path.string()},
        {"approximation_bound", data.approximation_bound},
        {"nnz", data.training.diffused_view->nonZeros()}}},
      {"num_train_edges", data.training.train_edges.size()},
  };
  write_text(config.out / "manifest.json", manifest.dump(2) + "\n");
}

void append_metrics_csv(const MetricsReport& report, const ExperimentConfig& config,
                        const std::filesystem::path& path) {
  static const std::vector<std::string> metric_columns = {"auc", "ap", "acc", "nmi", "ari", "accuracy"};
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  if (fresh) {
    out << "config_hash,dataset,task,variant,fusion,seed,beta,lambda,alpha";
    for (const auto& m : metric_columns) out << ',' << m;
    out << ",wall_seconds\n";
  }
  out << report.config_hash << ',' << report.dataset << ',' << report.task << ',' << to_string(config.variant) << ','
      << to_string(config.fusion) << ',' << report.seed << ',' << format_double(config.beta) << ','
      << format_double(config.lambda) << ',' << format_double(config.diffusion.alpha);
  for (const auto& m : metric_columns) {
    out << ',';
    if (auto it = report.metrics.find(m); it != report.metrics.end()) out << format_double(it->second);
  }
  out << ',' << format_double(report.wall_seconds) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

PipelineResult run_pipeline(const ExperimentConfig& config, const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  const auto data = prepare(config);
  auto outcome = run_training(config, data, on_epoch);
  write_run_artifacts(config, data, outcome);
  auto report = evaluate(config, data, outcome.state.params);
  report.wall_seconds = seconds_since(start);
  write_text(config.out / "metrics.json", report.to_json() + "\n");
  append_metrics_csv(report, config, config.out / "metrics.csv");
  return {std::move(report), std::move(outcome), data.diffusion_cache_hit};
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepOptions& options,
                                const std::function<void(const std::string&)>& log) {
  if (options.betas.empty()) throw ValidationError("sweep needs at least one beta value");
  if (!options.link_prediction && !options.embedding) throw ValidationError("sweep needs at least one task");
  base.validate();
  for (double b : options.betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("sweep beta values must be finite and non-negative");
  }

  // Load the bundle and fill the diffusion cache once, before any worker starts.
  const DatasetBundle bundle = load_bundle(base.dataset);
  std::vector<Task> tasks;
  if (options.link_prediction) tasks.push_back(Task::LinkPrediction);
  if (options.embedding) tasks.push_back(Task::Embedding);
  std::vector<PreparedData> prepared;
  for (Task t : tasks) {
    auto cfg = base;
    cfg.task = t;
    prepared.push_back(prepare(cfg, bundle));
  }

  std::vector<SweepRow> rows(options.betas.size());
  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(msg);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      row.beta = options.betas[i];
      row.seed = base.train.seed + i;
      try {
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          auto cfg = base;
          cfg.task = tasks[t];
          cfg.beta = row.beta;
          cfg.train.seed = row.seed;
          cfg.out = base.out / ("beta_" + std::to_string(i)) / to_string(tasks[t]);
          const auto outcome = run_training(cfg, prepared[t], {});
          write_run_artifacts(cfg, prepared[t], outcome);
          const auto report = evaluate(cfg, prepared[t], outcome.state.params);
          write_text(cfg.out / "metrics.json", report.to_json() + "\n");
          if (tasks[t] == Task::LinkPrediction) {
            row.auc = report.metrics.at("auc");
          } else {
            row.nmi = report.metrics.at("nmi");
            if (auto it = report.metrics.find("accuracy"); it != report.metrics.end()) row.accuracy = it->second;
          }
        }
        say("beta " + format_double(row.beta) + " done");
      } catch (const std::exception& e) {
        row.error = e.what();
        say("beta " + format_double(row.beta) + " failed: " + row.error);
      }
    }
  };

  unsigned workers = options.workers > 0 ? static_cast<unsigned>(options.workers) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(rows.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, double reference_beta, const std::filesystem::path& path) {
  const SweepRow* ref = nullptr;
  for (const auto& r : rows) {
    if (r.error.empty() && r.beta == reference_beta) {
      ref = &r;
      break;
    }
  }
  auto value = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  auto relative = [&](const std::optional<double>& v, const std::optional<double>& base) {
    if (!v || !base || *base == 0.0) return std::string{};
    return format_double(100.0 * (*v - *base) / *base);
  };
  std::string text = "beta,auc,nmi,accuracy,auc_rel_pct,nmi_rel_pct,accuracy_rel_pct\n";
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    text += format_double(r.beta) + ',' + value(r.auc) + ',' + value(r.nmi) + ',' + value(r.accuracy) + ',';
    text += (ref ? relative(r.auc, ref->auc) : "") + ',';
    text += (ref ? relative(r.nmi, ref->nmi) : "") + ',';
    text += (ref ? relative(r.accuracy, ref->accuracy) : "") + '\n';
  }
  write_text(path, text);
}

}  // namespace bgae
