// Acceptance gate. `bgae_acceptance <criterion>` prints one line
//   [PASS] <criterion>: ...   exit 0
//   [FAIL] <criterion>: ...   exit 1
//   [SKIP] <criterion>: ...   exit 77 (dataset directory not provided)
// `bgae_acceptance all` runs every criterion in turn.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bgae/bgae.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

#ifndef BGAE_TEST_DATA_DIR
#error "BGAE_TEST_DATA_DIR must point at tests/data"
#endif

namespace bgae {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Status { Pass, Fail, Skip };

struct Result {
  Status status = Status::Fail;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

Result verdict(bool ok, const Detail& d) { return {ok ? Status::Pass : Status::Fail, d.str()}; }
Result skipped(const std::string& why) { return {Status::Skip, why}; }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Matrix uniform(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

Matrix away_from_zero(Index r, Index c, std::mt19937_64& rng) {
  Matrix m = uniform(r, c, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (Index i = 0; i < m.size(); ++i) {
    if (sign(rng)) m(i) = -m(i);
  }
  return m;
}

Tensor project(const Tensor& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(t, t.tape().constant(uniform(t.rows(), t.cols(), rng))));
}

/// Scratch directory of the criterion being run.
fs::path g_work;

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v && *v) ? v : nullptr;
}

// ---------------------------------------------------------------- gradients

using GradFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

/// Full training loss on a fixed 5-node graph with fixed samples and noise,
/// as a function of the trainable matrices.
GradFn full_loss(Variant variant, FusionMode mode, std::uint64_t seed) {
  const Index n = 5;
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}};
  std::mt19937_64 rng(seed);
  auto features = std::make_shared<const SparseMatrix>(uniform(n, 4, rng, 0.0, 1.0).sparseView());
  auto local = std::make_shared<const SparseMatrix>(normalize_adjacency(n, edges, true).matrix);
  DiffusionConfig dc;
  dc.sparsify = Sparsification::none();
  auto diffused = std::make_shared<const SparseMatrix>(diffuse(n, edges, dc).matrix);
  const Matrix noise_local = uniform(n, 3, rng);
  const Matrix noise_diffused = uniform(n, 3, rng);
  const std::vector<Edge> neg{{0, 3}, {1, 4}, {0, 4}};
  const std::vector<Edge> s_pos{{0, 1}, {2, 4}, {1, 3}};
  const std::vector<double> s_w{0.3, 0.05, 0.12};
  const auto a_samples = LabeledPairs::binary(edges, neg);
  const auto s_samples = LabeledPairs::soft(s_pos, s_w, neg);

  return [=](Tape&, const std::vector<Tensor>& v) {
    ModelLeaves leaves;
    leaves.variant = variant;
    leaves.fusion_mode = mode;
    std::size_t k = 0;
    if (variant == Variant::Bgae) {
      leaves.encoder.weight = v[k++];
    } else {
      leaves.encoder.weight_mu = v[k++];
      leaves.encoder.weight_logvar = v[k++];
    }
    if (mode == FusionMode::Attention) leaves.fusion = {v[k], v[k + 1]};
    auto views = encode_views(local, diffused, features, leaves, nullptr);
    VariationalTerms terms;
    if (variant == Variant::Bvgae) {
      views.local.z = reparameterize(views.local.mu, views.local.log_var, noise_local);
      views.diffused.z = reparameterize(views.diffused.mu, views.diffused.log_var, noise_diffused);
      terms = {views.local.mu, views.local.log_var, views.diffused.mu, views.diffused.log_var};
    }
    const Tensor z = fuse(views.local.z, views.diffused.z, mode, leaves.fusion);
    const auto recon =
        reconstruction_loss(z, a_samples, s_samples, variant == Variant::Bvgae ? &terms : nullptr);
    const auto cov = covariance_loss(covariance_entries(views.local.z, views.diffused.z), 5e-3, n);
    return total_loss(recon.total, cov.total, 1.0);
  };
}

Result gradients() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  struct Case {
    std::string name;
    GradFn f;
    std::vector<Matrix> inputs;
  };
  std::vector<Case> cases;
  auto sparse = std::make_shared<const SparseMatrix>([&] {
    Matrix d = uniform(5, 4, rng);
    d(0, 1) = d(2, 2) = d(4, 0) = 0.0;
    return SparseMatrix(d.sparseView());
  }());
  const Matrix noise = uniform(3, 4, rng);
  const Vector targets = (Vector(4) << 1, 0, 0.4, 0).finished();

  cases.push_back({"matmul", [](Tape&, const auto& v) { return project(matmul(v[0], v[1]), 1); },
                   {uniform(3, 4, rng), uniform(4, 2, rng)}});
  cases.push_back({"matmul_tn", [](Tape&, const auto& v) { return project(matmul_tn(v[0], v[1]), 2); },
                   {uniform(4, 3, rng), uniform(4, 5, rng)}});
  cases.push_back({"sparse_matmul", [sparse](Tape&, const auto& v) { return project(sparse_matmul(sparse, v[0]), 3); },
                   {uniform(4, 3, rng)}});
  cases.push_back({"add/sub/mul",
                   [](Tape&, const auto& v) { return project(mul(sub(add(v[0], v[1]), v[2]), v[1]), 4); },
                   {uniform(3, 3, rng), uniform(3, 3, rng), uniform(3, 3, rng)}});
  cases.push_back({"scalar_mul/add_scalar",
                   [](Tape&, const auto& v) { return project(add_scalar(scalar_mul(v[0], -2.5), 0.3), 5); },
                   {uniform(2, 5, rng)}});
  cases.push_back({"sigmoid", [](Tape&, const auto& v) { return project(sigmoid(v[0]), 6); },
                   {uniform(4, 4, rng, -3, 3)}});
  cases.push_back({"exp", [](Tape&, const auto& v) { return project(exp(v[0]), 7); }, {uniform(3, 2, rng)}});
  cases.push_back({"log", [](Tape&, const auto& v) { return project(log(v[0]), 8); },
                   {uniform(3, 3, rng, 0.2, 2.0)}});
  cases.push_back({"abs", [](Tape&, const auto& v) { return project(abs(v[0]), 9); }, {away_from_zero(4, 3, rng)}});
  cases.push_back({"leaky_relu", [](Tape&, const auto& v) { return project(leaky_relu(v[0], 0.01), 10); },
                   {away_from_zero(5, 5, rng)}});
  cases.push_back({"clamp_min", [](Tape&, const auto& v) { return project(clamp_min(v[0], 0.0), 11); },
                   {away_from_zero(4, 4, rng)}});
  cases.push_back({"mean/transpose",
                   [](Tape&, const auto& v) { return add(mean(v[0]), project(transpose(v[0]), 12)); },
                   {uniform(3, 5, rng)}});
  cases.push_back({"concat_rows",
                   [](Tape&, const auto& v) {
                     const std::vector<Tensor> parts{v[0], v[1], v[0]};
                     return project(concat_rows(parts), 13);
                   },
                   {uniform(2, 3, rng), uniform(2, 3, rng)}});
  cases.push_back({"gather_rows",
                   [](Tape&, const auto& v) {
                     const std::vector<Index> rows{3, 0, 3, 1};
                     return project(gather_rows(v[0], rows), 14);
                   },
                   {uniform(5, 3, rng)}});
  cases.push_back({"row_dot",
                   [](Tape&, const auto& v) {
                     const std::vector<Edge> pairs{{0, 1}, {1, 4}, {2, 2}, {3, 0}};
                     return project(row_dot(v[0], pairs), 15);
                   },
                   {uniform(5, 4, rng)}});
  cases.push_back({"center_columns", [](Tape&, const auto& v) { return project(center_columns(v[0]), 16); },
                   {uniform(5, 3, rng)}});
  cases.push_back({"scale_rows", [](Tape&, const auto& v) { return project(scale_rows(v[0], v[1]), 17); },
                   {uniform(4, 3, rng), uniform(4, 1, rng)}});
  cases.push_back({"reparameterize",
                   [noise](Tape&, const auto& v) { return project(reparameterize(v[0], v[1], noise), 18); },
                   {uniform(3, 4, rng), uniform(3, 4, rng)}});
  cases.push_back({"covariance_loss",
                   [](Tape&, const auto& v) { return covariance_loss(covariance_entries(v[0], v[1]), 0.4, 5).total; },
                   {uniform(5, 3, rng), uniform(5, 3, rng)}});
  cases.push_back({"bce/kl",
                   [targets](Tape&, const auto& v) {
                     return add(binary_cross_entropy(sigmoid(v[0]), targets), kl_standard_normal(v[1], v[2]));
                   },
                   {uniform(4, 1, rng), uniform(3, 2, rng), uniform(3, 2, rng)}});
  cases.push_back({"attention fuse",
                   [](Tape& tape, const auto& v) {
                     std::mt19937_64 r(19);
                     return sum(mul(fuse(v[0], v[1], FusionMode::Attention, {v[2], v[3]}),
                                    tape.constant(uniform(4, 3, r))));
                   },
                   {uniform(4, 3, rng), uniform(4, 3, rng), uniform(3, 1, rng), uniform(3, 1, rng)}});

  for (Variant variant : {Variant::Bgae, Variant::Bvgae}) {
    for (FusionMode mode : {FusionMode::Fixed, FusionMode::Attention}) {
      std::vector<Matrix> inputs;
      if (variant == Variant::Bgae) {
        inputs.push_back(uniform(4, 3, rng));
      } else {
        inputs.push_back(uniform(4, 3, rng));
        inputs.push_back(uniform(4, 3, rng, -0.5, 0.5));
      }
      if (mode == FusionMode::Attention) {
        inputs.push_back(uniform(3, 1, rng));
        inputs.push_back(uniform(3, 1, rng));
      }
      cases.push_back({"full " + to_string(variant) + "/" + to_string(mode) + " loss", full_loss(variant, mode, 77),
                       std::move(inputs)});
    }
  }

  double worst = 0.0;
  double worst_abs = 0.0;
  std::string failed;
  for (auto& c : cases) {
    const auto r = oracle::gradcheck(c.f, std::move(c.inputs), 1e-5, 1e-4);
    worst = std::max(worst, r.max_relative_error);
    worst_abs = std::max(worst_abs, r.max_absolute_error);
    if (!r.passed) failed += (failed.empty() ? "" : ", ") + c.name;
  }
  const double elapsed = seconds_since(start);
  Detail d;
  d << cases.size() << " checks, max rel err " << worst << " (< 1e-4; entries with abs err <= 1e-7 exempt), max abs err "
    << worst_abs << ", " << elapsed << " s (< 10 s)";
  if (!failed.empty()) d << "; failed: " << failed;
  return verdict(failed.empty() && elapsed < 10.0, d);
}

// --------------------------------------------------------- diffusion oracle

Result diffusion_oracle() {
  std::mt19937_64 rng(99);
  const double alphas[] = {0.05, 0.15, 0.5};
  std::uniform_int_distribution<Index> size(2, 50);
  std::uniform_real_distribution<double> density(0.05, 0.5);
  double worst_series = 0.0;
  double worst_inverse = 0.0;
  for (int g = 0; g < 50; ++g) {
    const Index n = size(rng);
    const auto edges = testing::random_edges(n, density(rng), rng);
    const double alpha = alphas[g % 3];
    int order = 1;
    while (std::pow(1.0 - alpha, order + 1) >= 1e-8) ++order;
    const auto t = normalize_adjacency(n, edges, false);
    const Matrix exact = Matrix(ppr_exact(t, alpha).matrix);
    const Matrix series = Matrix(ppr_truncated(t, alpha, order).matrix);
    const Matrix reference = oracle::ppr_gauss_jordan(Matrix(t.matrix), alpha);
    worst_series = std::max(worst_series, (series - exact).cwiseAbs().maxCoeff());
    worst_inverse = std::max(worst_inverse, (exact - reference).cwiseAbs().maxCoeff());
  }

  const std::vector<Edge> k2{{0, 1}};
  const Matrix s = Matrix(ppr_exact(normalize_adjacency(2, k2, false), 0.5).matrix);
  Matrix expected(2, 2);
  expected << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  const double k2_err = (s - expected).cwiseAbs().maxCoeff();

  Detail d;
  d << "50 graphs: max |series - exact| " << worst_series << " (<= 1e-6), max |exact - gauss-jordan| "
    << worst_inverse << "; K2 err " << k2_err << " (<= 1e-12)";
  return verdict(worst_series <= 1e-6 && worst_inverse <= 1e-6 && k2_err <= 1e-12, d);
}

// ----------------------------------------------------------- metric oracles

Result metric_oracles() {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> size(2, 30);
  int mismatches = 0;
  double worst_nmi = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    // Coarse scores so that ties are common.
    std::uniform_int_distribution<int> level(0, t % 2 == 0 ? 4 : 1000);
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = level(rng) / 4.0;
      labels[static_cast<std::size_t>(i)] = i < 1 ? 1 : (i < 2 ? 0 : static_cast<int>(rng() % 2));
    }
    if (auc(scores, labels) != oracle::auc_pairs(scores, labels)) ++mismatches;
    if (average_precision(scores, labels) != oracle::ap_enumerate(scores, labels)) ++mismatches;

    const int k_pred = 1 + static_cast<int>(rng() % 5);
    const int k_true = 1 + static_cast<int>(rng() % 5);
    std::vector<int> pred(static_cast<std::size_t>(n));
    std::vector<int> truth(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(k_pred));
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(k_true));
    }
    if (adjusted_rand_index(pred, truth) != oracle::ari_pairs(pred, truth)) ++mismatches;
    if (clustering_accuracy(pred, truth) != oracle::acc_permutations(pred, truth)) ++mismatches;
    worst_nmi =
        std::max(worst_nmi, std::abs(normalized_mutual_information(pred, truth) - oracle::nmi_entropies(pred, truth)));
  }
  Detail d;
  d << "100 instances: " << mismatches << " AUC/AP/ARI/ACC mismatches (== 0), max NMI diff " << worst_nmi
    << " (<= 1e-12)";
  return verdict(mismatches == 0 && worst_nmi <= 1e-12, d);
}

// --------------------------------------------------------------- properties

Result properties() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  auto gaussian = [&](Index r, Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m(i) = scale * g(rng);
    return m;
  };
  std::vector<std::string> failures;

  // Attention: both weights positive, summing to one, matching a direct softmax.
  {
    double worst_sum = 0.0;
    double worst_softmax = 0.0;
    bool fused_ok = true;
    for (int t = 0; t < 20; ++t) {
      Tape tape(false);
      const Matrix zl = gaussian(40, 8);
      const Matrix zd = gaussian(40, 8);
      const Matrix w1 = gaussian(8, 1);
      const Matrix w2 = gaussian(8, 1);
      FusionLeaves f{tape.constant(w1), tape.constant(w2)};
      const Matrix phi = attention_weights(tape.constant(zl), tape.constant(zd), f).value();
      const Matrix fused = fuse(tape.constant(zl), tape.constant(zd), FusionMode::Attention, f).value();
      for (Index i = 0; i < 40; ++i) {
        auto lrelu = [](double x) { return x > 0 ? x : 0.01 * x; };
        const double a = lrelu(zl.row(i).dot(w1.col(0)));
        const double b = lrelu(zd.row(i).dot(w2.col(0)));
        const double m = std::max(a, b);
        const double ea = std::exp(a - m);
        const double eb = std::exp(b - m);
        const double pl = ea / (ea + eb);
        const double pd = eb / (ea + eb);
        worst_softmax = std::max(worst_softmax, std::abs(phi(i, 0) - pl));
        worst_sum = std::max(worst_sum, std::abs(phi(i, 0) + (1.0 - phi(i, 0)) - 1.0));
        worst_sum = std::max(worst_sum, std::abs(pl + pd - 1.0));
        if (!(phi(i, 0) > 0.0 && phi(i, 0) < 1.0)) fused_ok = false;
        const Eigen::RowVectorXd expected = phi(i, 0) * zl.row(i) + (1.0 - phi(i, 0)) * zd.row(i);
        if ((fused.row(i) - expected).cwiseAbs().maxCoeff() > 1e-12) fused_ok = false;
      }
    }
    if (worst_sum > 1e-15 || worst_softmax > 1e-12 || !fused_ok) failures.push_back("attention");
  }

  // Decoder symmetry, bit for bit.
  {
    Tape tape(false);
    const Tensor z = tape.constant(gaussian(30, 16));
    std::vector<Edge> forward;
    std::vector<Edge> backward;
    for (Index i = 0; i < 30; ++i) {
      for (Index j = 0; j < 30; ++j) {
        forward.push_back({i, j});
        backward.push_back({j, i});
      }
    }
    const Matrix a = decode_edges(z, forward).value();
    const Matrix b = decode_edges(z, backward).value();
    if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) != 0) {
      failures.push_back("decoder symmetry");
    }
  }

  // Covariance entries in [0.5, 1) and invariant to shifting either view.
  {
    bool range_ok = true;
    double worst_shift = 0.0;
    for (int t = 0; t < 20; ++t) {
      Tape tape(false);
      const Index n = 10 + t;
      const Matrix zl = gaussian(n, 6, 0.5);
      const Matrix zd = gaussian(n, 6, 0.5);
      const Matrix c = covariance_entries(tape.constant(zl), tape.constant(zd)).value();
      if (!(c.minCoeff() >= 0.5 && c.maxCoeff() < 1.0)) range_ok = false;
      const Eigen::RowVectorXd shift = gaussian(1, 6, 10.0).row(0);
      const Matrix shifted_l = zl.rowwise() + shift;
      const Matrix shifted_d = zd.rowwise() - shift;
      const Matrix c2 = covariance_entries(tape.constant(shifted_l), tape.constant(zd)).value();
      const Matrix c3 = covariance_entries(tape.constant(zl), tape.constant(shifted_d)).value();
      worst_shift = std::max({worst_shift, (c2 - c).cwiseAbs().maxCoeff(), (c3 - c).cwiseAbs().maxCoeff()});
    }
    if (!range_ok) failures.push_back("covariance range");
    if (worst_shift > 1e-12) failures.push_back("centering invariance");
  }

  // KL closed form against a Monte-Carlo estimate of E[log q - log p] over
  // 10^5 reparameterized draws (antithetic pairs +e, -e).
  double worst_kl = 0.0;
  {
    const Index half = 50000;
    const Index d = 5;
    std::uniform_real_distribution<double> mu_dist(-1.5, 1.5);
    std::uniform_real_distribution<double> lv_dist(-1.5, 1.0);
    for (int t = 0; t < 20; ++t) {
      Matrix mu(1, d);
      Matrix lv(1, d);
      for (Index k = 0; k < d; ++k) {
        mu(0, k) = mu_dist(rng);
        lv(0, k) = lv_dist(rng);
      }
      Tape tape(false);
      const double closed = kl_standard_normal(tape.constant(mu), tape.constant(lv)).item();
      Matrix eps(2 * half, d);
      for (Index s = 0; s < half; ++s) {
        for (Index k = 0; k < d; ++k) {
          eps(s, k) = g(rng);
          eps(half + s, k) = -eps(s, k);
        }
      }
      const Matrix z =
          reparameterize(tape.constant(mu.replicate(2 * half, 1)), tape.constant(lv.replicate(2 * half, 1)), eps)
              .value();
      double total = 0.0;
      for (Index s = 0; s < 2 * half; ++s) {
        for (Index k = 0; k < d; ++k) {
          const double x = z(s, k);
          const double diff = x - mu(0, k);
          const double log_q = -0.5 * (lv(0, k) + diff * diff / std::exp(lv(0, k)));
          const double log_p = -0.5 * x * x;
          total += log_q - log_p;
        }
      }
      const double estimate = total / static_cast<double>(2 * half);
      worst_kl = std::max(worst_kl, std::abs(estimate - closed) / closed);
    }
    if (worst_kl >= 0.01) failures.push_back("KL vs Monte-Carlo");
  }

  Detail d;
  d << "attention, decoder symmetry, C range, centering, KL (max rel err " << worst_kl << " < 0.01)";
  if (!failures.empty()) {
    d << "; failed:";
    for (const auto& f : failures) d << " [" << f << "]";
  }
  return verdict(failures.empty(), d);
}

// ---------------------------------------------------------- dataset runs

struct RunResult {
  MetricsReport report;
  ModelParams params;
  double seconds = 0.0;
};

RunResult run_once(const ExperimentConfig& config, const DatasetBundle& bundle) {
  const auto start = Clock::now();
  const auto data = prepare(config, bundle);
  auto outcome = run_training(config, data);
  RunResult r;
  r.report = evaluate(config, data, outcome.state.params);
  r.params = std::move(outcome.state.params);
  r.seconds = seconds_since(start);
  return r;
}

/// Link-prediction protocol: d = 512, lambda 5e-3, lr 0.01, decay 5e-6,
/// 85/5/10 split, features row-normalized.
ExperimentConfig protocol(const fs::path& dataset, Task task) {
  ExperimentConfig c;
  c.dataset = dataset;
  c.task = task;
  c.row_normalize_features = true;
  c.out = g_work / "run";
  return c;
}

Result link_prediction(const char* var, double min_auc, double min_ap, double max_seconds) {
  const char* dir = env(var);
  if (!dir) return skipped(std::string(var) + " not set");
  const auto config = protocol(dir, Task::LinkPrediction);
  const auto r = run_once(config, load_bundle(config.dataset));
  const double a = r.report.metrics.at("auc");
  const double p = r.report.metrics.at("ap");
  Detail d;
  d << "AUC " << a << " (>= " << min_auc << ")";
  if (min_ap > 0) d << ", AP " << p << " (>= " << min_ap << ")";
  d << ", " << r.seconds << " s (<= " << max_seconds << " s)";
  return verdict(a >= min_auc && (min_ap <= 0 || p >= min_ap) && r.seconds <= max_seconds, d);
}

Result cora_linkpred() { return link_prediction("BGAE_CORA_DIR", 0.92, 0.92, 600.0); }
Result citeseer_linkpred() { return link_prediction("BGAE_CITESEER_DIR", 0.90, 0.0, 600.0); }
Result pubmed_linkpred() { return link_prediction("BGAE_PUBMED_DIR", 0.90, 0.0, 7200.0); }

std::map<std::string, double> cora_embedding_means() {
  const auto base = protocol(env("BGAE_CORA_DIR"), Task::Embedding);
  const auto bundle = load_bundle(base.dataset);
  std::map<std::string, double> mean;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto config = base;
    config.train.seed = seed;
    const auto r = run_once(config, bundle);
    for (const auto& [k, v] : r.report.metrics) mean[k] += v / 5.0;
  }
  return mean;
}

Result cora_clustering() {
  if (!env("BGAE_CORA_DIR")) return skipped("BGAE_CORA_DIR not set");
  const auto m = cora_embedding_means();
  Detail d;
  d << "mean over 5 seeds: NMI " << m.at("nmi") << " (>= 0.45), ACC " << m.at("acc") << " (>= 0.60)";
  return verdict(m.at("nmi") >= 0.45 && m.at("acc") >= 0.60, d);
}

Result cora_classification() {
  if (!env("BGAE_CORA_DIR")) return skipped("BGAE_CORA_DIR not set");
  const auto m = cora_embedding_means();
  Detail d;
  d << "mean over 5 seeds: accuracy " << m.at("accuracy") << " (>= 0.78)";
  return verdict(m.at("accuracy") >= 0.78, d);
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  const auto na = a.named();
  const auto nb = b.named();
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const Matrix& x = na[i].value;
    const Matrix& y = nb[i].value;
    if (na[i].name != nb[i].name || x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0) return false;
  }
  return true;
}

/// Two runs with one seed must agree bit for bit. With a real Cora bundle
/// this is the full protocol; otherwise the Cora-sized synthetic graph with
/// a shortened schedule.
Result cora_reproducibility() {
  const char* dir = env("BGAE_CORA_DIR");
  auto config = protocol(dir ? dir : "cora_scale_sbm", Task::LinkPrediction);
  if (!dir) {
    config.train.max_epochs = 50;
    config.train.patience = 50;
  }
  config.train.seed = 7;
  const auto bundle = dir ? load_bundle(config.dataset) : make_sbm_bundle(cora_scale_sbm(0));
  const auto first = run_once(config, bundle);
  const auto second = run_once(config, bundle);
  const bool params_equal = same_params(first.params, second.params);
  const bool metrics_equal = first.report.metrics == second.report.metrics;
  Detail d;
  d << (dir ? "Cora, full protocol" : "Cora-sized synthetic graph, 50 epochs") << ": params "
    << (params_equal ? "identical" : "differ") << ", metrics " << (metrics_equal ? "identical" : "differ");
  return verdict(params_equal && metrics_equal, d);
}

/// Runtime of the link-prediction protocol at Cora scale on the synthetic
/// stand-in; the scores are informational, the graph is not Cora.
Result cora_scale_runtime() {
  const auto config = protocol("cora_scale_sbm", Task::LinkPrediction);
  const auto r = run_once(config, make_sbm_bundle(cora_scale_sbm(0)));
  Detail d;
  d << r.seconds << " s (<= 600 s); synthetic AUC " << r.report.metrics.at("auc") << ", AP "
    << r.report.metrics.at("ap");
  return verdict(r.seconds <= 600.0, d);
}

// --------------------------------------------------------------- beta sweep

Result beta_sweep(const fs::path& work) {
  ExperimentConfig base;
  base.dataset = fs::path(BGAE_TEST_DATA_DIR) / "sbm200";
  base.out = work / "sweep";
  const auto start = Clock::now();
  SweepOptions options;
  const auto rows = run_sweep(base, options);
  const fs::path csv = work / "sweep.csv";
  write_sweep_csv(rows, options.reference_beta, csv);
  const double elapsed = seconds_since(start);

  std::ifstream in(csv);
  std::string line;
  std::vector<std::vector<std::string>> table;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    table.push_back(std::move(cells));
  }
  bool well_formed =
      table.size() == 9 && table[0].size() == 7 && table[0][0] == "beta" && table[0][1] == "auc";
  std::map<double, double> auc_by_beta;
  for (std::size_t i = 1; well_formed && i < table.size(); ++i) {
    if (table[i].size() != 7) {
      well_formed = false;
      break;
    }
    for (const auto& cell : table[i]) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0' || !std::isfinite(v)) well_formed = false;
    }
    if (well_formed) auc_by_beta[std::stod(table[i][0])] = std::stod(table[i][1]);
  }
  for (double b : kDefaultSweepBetas) {
    if (!auc_by_beta.count(b)) well_formed = false;
  }
  const bool degraded = well_formed && auc_by_beta.at(1e4) < auc_by_beta.at(1.0);

  Detail d;
  d << rows.size() << " betas in " << elapsed << " s (< 300 s), CSV " << (well_formed ? "well-formed" : "malformed");
  if (well_formed) d << ", AUC(1e4) " << auc_by_beta.at(1e4) << " vs AUC(1) " << auc_by_beta.at(1.0);
  return verdict(well_formed && elapsed < 300.0 && degraded, d);
}

struct Criterion {
  std::string name;
  std::function<Result(const fs::path&)> run;
};

std::vector<Criterion> criteria() {
  auto plain = [](Result (*f)()) { return [f](const fs::path&) { return f(); }; };
  return {
      {"gradients", plain(gradients)},
      {"diffusion_oracle", plain(diffusion_oracle)},
      {"metric_oracles", plain(metric_oracles)},
      {"properties", plain(properties)},
      {"beta_sweep", beta_sweep},
      {"cora_scale_runtime", plain(cora_scale_runtime)},
      {"cora_reproducibility", plain(cora_reproducibility)},
      {"cora_linkpred", plain(cora_linkpred)},
      {"citeseer_linkpred", plain(citeseer_linkpred)},
      {"cora_clustering", plain(cora_clustering)},
      {"cora_classification", plain(cora_classification)},
      {"pubmed_linkpred", plain(pubmed_linkpred)},
  };
}

int report(const std::string& name, const Result& r) {
  static const char* tags[] = {"[PASS]", "[FAIL]", "[SKIP]"};
  std::cout << tags[static_cast<int>(r.status)] << ' ' << name << ": " << r.detail << std::endl;
  return r.status == Status::Pass ? 0 : r.status == Status::Skip ? 77 : 1;
}

int run_criterion(const Criterion& c) {
  // Fresh diffusion cache so that every timing includes the diffusion step.
  testing::TempDir work;
  g_work = work.path();
  setenv("BGAE_CACHE_DIR", (work.path() / "cache").c_str(), 1);
  try {
    return report(c.name, c.run(work.path()));
  } catch (const std::exception& e) {
    return report(c.name, {Status::Fail, std::string("error: ") + e.what()});
  }
}

}  // namespace
}  // namespace bgae

int main(int argc, char** argv) {
  const auto all = bgae::criteria();
  if (argc != 2) {
    std::cerr << "usage: bgae_acceptance <criterion|all>\ncriteria:";
    for (const auto& c : all) std::cerr << ' ' << c.name;
    std::cerr << '\n';
    return 2;
  }
  const std::string wanted = argv[1];
  if (wanted == "all") {
    int failed = 0;
    for (const auto& c : all) {
      if (bgae::run_criterion(c) == 1) ++failed;
    }
    return failed == 0 ? 0 : 1;
  }
  for (const auto& c : all) {
    if (c.name == wanted) return bgae::run_criterion(c);
  }
  std::cerr << "unknown criterion: " << wanted << '\n';
  return 2;
}
