#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bgae/errors.hpp"
#include "bgae/experiment.hpp"
#include "bgae/synthetic.hpp"
#include "support/test_util.hpp"

namespace bgae {
namespace {

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    setenv("BGAE_CACHE_DIR", (work / "cache").c_str(), 1);
    SbmConfig sbm;
    sbm.num_nodes = 120;
    sbm.num_classes = 3;
    sbm.average_degree = 5.0;
    sbm.num_features = 30;
    sbm.train_per_class = 10;
    sbm.num_val = 20;
    sbm.num_test = 40;
    sbm.seed = 5;
    save_bundle(make_sbm_bundle(sbm), work / "sbm");
  }
  void TearDown() override { unsetenv("BGAE_CACHE_DIR"); }

  ExperimentConfig config(Task task) const {
    ExperimentConfig c;
    c.dataset = work / "sbm";
    c.task = task;
    c.dim = 16;
    c.diffusion.sparsify = Sparsification::top_k(16);
    c.train.max_epochs = 15;
    c.train.patience = 15;
    c.train.seed = 4;
    c.out = work / "run";
    return c;
  }

  testing::TempDir work;
};

TEST_F(ExperimentTest, ConfigJsonRoundTrip) {
  auto c = config(Task::Embedding);
  c.variant = Variant::Bvgae;
  c.fusion = FusionMode::Attention;
  c.beta = 10.0;
  c.diffusion.alpha = 0.2;
  c.diffusion.method = DiffusionMethod::TruncatedSeries;
  c.train.lr_decay = 0.5;
  c.split_seed = 9;
  c.row_normalize_features = true;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
}

TEST_F(ExperimentTest, HashIgnoresOutputDirectoryOnly) {
  auto a = config(Task::LinkPrediction);
  auto b = a;
  b.out = "/elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.beta = 2.0;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST_F(ExperimentTest, ValidationCollectsAllProblems) {
  auto c = config(Task::LinkPrediction);
  c.dim = 0;
  c.beta = -1.0;
  c.diffusion.alpha = 2.0;
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_GE(e.violations().size(), 3u);
  }
  EXPECT_THROW(ExperimentConfig::from_json("{\"beta\": \"high\"}"), ValidationError);
}

TEST_F(ExperimentTest, NameParsers) {
  EXPECT_EQ(parse_task(to_string(Task::Embedding)), Task::Embedding);
  EXPECT_EQ(parse_variant("bvgae"), Variant::Bvgae);
  EXPECT_EQ(parse_fusion("attention"), FusionMode::Attention);
  EXPECT_THROW(parse_task("cluster"), ValidationError);
}

TEST_F(ExperimentTest, DiffusionIsCachedAndKeyedByEdges) {
  const auto c = config(Task::LinkPrediction);
  const auto first = prepare(c);
  EXPECT_FALSE(first.diffusion_cache_hit);
  const auto second = prepare(c);
  EXPECT_TRUE(second.diffusion_cache_hit);
  EXPECT_EQ(first.diffusion_path, second.diffusion_path);
  EXPECT_TRUE(Matrix(*first.training.diffused_view) == Matrix(*second.training.diffused_view));

  auto other_split = c;
  other_split.split_seed = 1;
  const auto third = prepare(other_split);
  EXPECT_FALSE(third.diffusion_cache_hit);
  EXPECT_NE(third.diffusion_path, first.diffusion_path);

  auto embed = c;
  embed.task = Task::Embedding;
  EXPECT_FALSE(prepare(embed).diffusion_cache_hit);
}

TEST_F(ExperimentTest, LinkPredictionViewsExcludeHeldOutEdges) {
  const auto data = prepare(config(Task::LinkPrediction));
  ASSERT_TRUE(data.split.has_value());
  const auto& a = *data.training.local_view;
  for (const auto& e : data.split->test_pos) EXPECT_EQ(a.coeff(e.u, e.v), 0.0);
  EXPECT_EQ(data.training.train_edges.size(), data.split->train_pos.size());
}

TEST_F(ExperimentTest, PipelineWritesArtifacts) {
  const auto c = config(Task::LinkPrediction);
  const auto result = run_pipeline(c);
  for (const char* f : {"params.bin", "params.json", "losses.csv", "manifest.json", "metrics.json", "metrics.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(c.out / f)) << f;
  }
  EXPECT_TRUE(result.report.metrics.count("auc"));
  EXPECT_TRUE(result.report.metrics.count("ap"));
  EXPECT_EQ(result.report.config_hash, c.hash());

  std::ifstream in(c.out / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest.at("config_hash").get<std::string>(), c.hash());
  const auto replay = ExperimentConfig::from_json(manifest.at("config").dump());
  EXPECT_EQ(replay.hash(), c.hash());

  // Same manifest, same outputs.
  auto again = replay;
  again.out = work / "replay";
  const auto second = run_pipeline(again);
  EXPECT_EQ(second.report.metrics, result.report.metrics);
  EXPECT_TRUE(second.diffusion_cache_hit);
}

TEST_F(ExperimentTest, EmbeddingPipelineReportsClusteringAndClassification) {
  auto c = config(Task::Embedding);
  c.variant = Variant::Bvgae;
  const auto r = run_pipeline(c).report;
  for (const char* m : {"acc", "nmi", "ari", "accuracy"}) EXPECT_TRUE(r.metrics.count(m)) << m;
  EXPECT_GE(r.metrics.at("ari"), -1.0);
  EXPECT_LE(r.metrics.at("nmi"), 1.0);
}

TEST_F(ExperimentTest, MetricsCsvAppendsRows) {
  const auto c = config(Task::LinkPrediction);
  MetricsReport r;
  r.task = "linkpred";
  r.metrics = {{"auc", 0.5}, {"ap", 0.25}};
  append_metrics_csv(r, c, work / "m.csv");
  append_metrics_csv(r, c, work / "m.csv");
  const auto text = testing::read_file(work / "m.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "config_hash,dataset,task,variant,fusion,seed,beta,lambda,alpha,auc,ap,acc,nmi,ari,accuracy,wall_seconds");
}

TEST_F(ExperimentTest, SingleBetaSweepMatchesPipeline) {
  auto c = config(Task::LinkPrediction);
  SweepOptions o;
  o.betas = {1.0};
  o.embedding = false;
  o.workers = 1;
  c.out = work / "sweep";
  const auto rows = run_sweep(c, o);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].error.empty()) << rows[0].error;
  c.out = work / "single";
  const auto single = run_pipeline(c);
  EXPECT_EQ(*rows[0].auc, single.report.metrics.at("auc"));
}

TEST_F(ExperimentTest, SweepCsvShape) {
  std::vector<SweepRow> rows(3);
  rows[0].beta = 0.1;
  rows[0].auc = 0.8;
  rows[0].nmi = 0.3;
  rows[1].beta = 1.0;
  rows[1].auc = 0.9;
  rows[1].nmi = 0.4;
  rows[2].beta = 10.0;
  rows[2].error = "boom";
  write_sweep_csv(rows, 1.0, work / "sweep.csv");
  const auto text = testing::read_file(work / "sweep.csv");
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "beta,auc,nmi,accuracy,auc_rel_pct,nmi_rel_pct,accuracy_rel_pct");
  EXPECT_EQ(lines[2].substr(0, 4), "1,0.");
  EXPECT_NE(lines[2].find(",0,0,"), std::string::npos) << lines[2];
}

TEST_F(ExperimentTest, SweepRecordsFailuresAndContinues) {
  auto c = config(Task::Embedding);
  c.train.learning_rate = 1e200;
  c.variant = Variant::Bvgae;
  SweepOptions o;
  o.betas = {1.0, 10.0};
  o.link_prediction = false;
  o.workers = 2;
  c.out = work / "bad";
  const auto rows = run_sweep(c, o);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_FALSE(r.error.empty());
  write_sweep_csv(rows, 1.0, work / "bad.csv");
  const auto text = testing::read_file(work / "bad.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(CacheDir, EnvironmentPrecedence) {
  setenv("BGAE_CACHE_DIR", "/tmp/a", 1);
  EXPECT_EQ(default_cache_dir(), std::filesystem::path("/tmp/a"));
  unsetenv("BGAE_CACHE_DIR");
  setenv("XDG_CACHE_HOME", "/tmp/x", 1);
  EXPECT_EQ(default_cache_dir(), std::filesystem::path("/tmp/x/bgae"));
  unsetenv("XDG_CACHE_HOME");
}

}  // namespace
}  // namespace bgae
