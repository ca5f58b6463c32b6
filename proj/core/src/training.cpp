#include "bgae/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"

namespace bgae {
namespace {

/// Off-diagonal entries of the diffusion matrix, drawn proportionally to weight.
struct DiffusionSampler {
  std::vector<Edge> pairs;
  std::vector<double> weights;
  std::discrete_distribution<std::size_t> pick;
  EdgeSet support;

  explicit DiffusionSampler(const SparseMatrix& s) {
    for (Index r = 0; r < s.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(s, r); it; ++it) {
        if (it.col() == r || it.value() <= 0.0) continue;
        pairs.push_back(Edge::canonical(r, it.col()));
        weights.push_back(it.value());
        support.insert(r, it.col());
      }
    }
    if (!pairs.empty()) pick = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  LabeledPairs sample(Index num_nodes, std::size_t count, std::mt19937_64& rng) {
    std::vector<Edge> positives;
    std::vector<double> targets;
    positives.reserve(count);
    targets.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto k = pick(rng);
      positives.push_back(pairs[k]);
      targets.push_back(weights[k]);
    }
    const auto negatives = sample_negative_edges(num_nodes, support, count, EdgeSet{}, rng);
    return LabeledPairs::soft(positives, targets, negatives);
  }
};

double validation_auc(const ValidationEdges& val, const Matrix& z) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(val.positives.size() + val.negatives.size());
  labels.reserve(scores.capacity());
  for (const auto& e : val.positives) {
    scores.push_back(z.row(e.u).dot(z.row(e.v)));
    labels.push_back(1);
  }
  for (const auto& e : val.negatives) {
    scores.push_back(z.row(e.u).dot(z.row(e.v)));
    labels.push_back(0);
  }
  return auc(scores, labels);
}

void check_data(const TrainingData& data, const ModelParams& params, const LossConfig& loss) {
  std::vector<std::string> problems;
  const Index n = data.num_nodes;
  if (n < 2) problems.push_back("training needs at least two nodes");
  if (!data.features || !data.local_view || !data.diffused_view) {
    problems.push_back("features and both views must be set");
  } else {
    if (data.features->rows() != n) problems.push_back("feature rows differ from num_nodes");
    if (data.local_view->rows() != n || data.local_view->cols() != n) problems.push_back("local view is not N x N");
    if (data.diffused_view->rows() != n || data.diffused_view->cols() != n)
      problems.push_back("diffused view is not N x N");
    const Matrix& w = params.encoder.variant == Variant::Bgae ? params.encoder.weight : params.encoder.weight_mu;
    if (w.rows() != data.features->cols()) problems.push_back("encoder weight rows differ from feature count");
  }
  if (data.train_edges.empty()) problems.push_back("no training edges");
  if (loss.variational != (params.encoder.variant == Variant::Bvgae))
    problems.push_back("loss.variational must match the encoder variant");
  if (data.validation && (data.validation->positives.empty() || data.validation->negatives.empty()))
    problems.push_back("validation edges need positives and negatives");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

}  // namespace

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) problems.push_back("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) problems.push_back("weight_decay must be non-negative");
  if (!(lr_decay >= 0.0)) problems.push_back("lr_decay must be non-negative");
  if (max_epochs < 1) problems.push_back("max_epochs must be at least 1");
  if (patience < 1) problems.push_back("patience must be at least 1");
  if (patience > max_epochs) problems.push_back("patience must not exceed max_epochs");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) problems.push_back("adam beta1 must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) problems.push_back("adam beta2 must be in [0, 1)");
  if (!(adam.eps > 0.0)) problems.push_back("adam eps must be positive");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

RunState train(const TrainingData& data, ModelParams params, const LossConfig& loss,
               const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  loss.validate();
  check_data(data, params, loss);

  RunState state;
  state.rng.seed(config.seed);
  state.params = params;

  const Index n = data.num_nodes;
  const EdgeSet train_graph(data.train_edges);
  DiffusionSampler diffusion(*data.diffused_view);
  if (diffusion.pairs.empty()) throw ValidationError("diffusion matrix has no off-diagonal entries");
  const std::size_t batch = loss.edge_batch > 0
                                ? std::min<std::size_t>(static_cast<std::size_t>(loss.edge_batch), data.train_edges.size())
                                : data.train_edges.size();
  const bool variational = params.encoder.variant == Variant::Bvgae;
  AdamState adam;
  int last_finite = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Tape tape(false);
    const auto leaves = bind(tape, params, true);
    const auto views = encode_views(data.local_view, data.diffused_view, data.features, leaves,
                                    variational ? &state.rng : nullptr);
    const Tensor z = fuse(views.local.z, views.diffused.z, params.fusion.mode, leaves.fusion);
    // The deterministic embedding of the current parameters (what embed() returns).
    double val_metric = std::nan("");
    if (data.validation) {
      val_metric = variational
                       ? validation_auc(*data.validation,
                                        fuse(views.local.mu, views.diffused.mu, params.fusion.mode, leaves.fusion).value())
                       : validation_auc(*data.validation, z.value());
    }

    std::vector<Edge> positives;
    if (batch == data.train_edges.size()) {
      positives = data.train_edges;
    } else {
      positives.reserve(batch);
      std::uniform_int_distribution<std::size_t> pick(0, data.train_edges.size() - 1);
      for (std::size_t i = 0; i < batch; ++i) positives.push_back(data.train_edges[pick(state.rng)]);
    }
    const auto negatives = sample_negative_edges(n, train_graph, positives.size(), EdgeSet{}, state.rng);
    const auto a_samples = LabeledPairs::binary(positives, negatives);
    const auto s_samples = diffusion.sample(n, batch, state.rng);

    VariationalTerms terms;
    if (variational) {
      terms = {views.local.mu, views.local.log_var, views.diffused.mu, views.diffused.log_var};
    }
    const auto recon = reconstruction_loss(z, a_samples, s_samples, variational ? &terms : nullptr);
    const auto cov = covariance_loss(covariance_entries(views.local.z, views.diffused.z), loss.lambda, n);
    const Tensor total = total_loss(recon.total, cov.total, loss.beta);

    LossRecord record;
    record.iteration = epoch;
    record.bce_a = recon.bce_adjacency.item();
    record.bce_s = recon.bce_diffusion.item();
    record.kl_local = recon.kl_local ? recon.kl_local->item() : 0.0;
    record.kl_diffused = recon.kl_diffused ? recon.kl_diffused->item() : 0.0;
    record.cov_diag = cov.diagonal.item();
    record.cov_offdiag = cov.off_diagonal.item();
    record.total = total.item();
    record.validation = val_metric;
    if (!std::isfinite(record.total)) {
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch), last_finite);
    }
    last_finite = epoch;

    const double metric = data.validation ? val_metric : -record.total;
    if (metric > state.best_metric) {
      state.best_metric = metric;
      state.best_epoch = epoch;
      state.params = params;
    }
    state.history.push_back(record);
    state.epochs_run = epoch;
    if (on_epoch) on_epoch(record);

    tape.backward(total);
    const auto grads = gradients(leaves);
    const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(epoch - 1));
    auto trainable = params.trainable();
    try {
      adam_step(trainable, grads, adam, config.adam, lr, config.weight_decay);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("non-finite gradient at epoch ") + std::to_string(epoch) + ": " + e.what(),
                            last_finite);
    }

    if (epoch - state.best_epoch >= config.patience) {
      state.early_stopped = true;
      break;
    }
  }
  return state;
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,bce_a,bce_s,kl_local,kl_diffused,cov_diag,cov_offdiag,total\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.iteration << ',' << r.bce_a << ',' << r.bce_s << ',' << r.kl_local << ',' << r.kl_diffused << ','
        << r.cov_diag << ',' << r.cov_offdiag << ',' << r.total << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bgae
