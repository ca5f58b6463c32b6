// Writes a planted-partition dataset bundle.

#include <iostream>

#include <CLI11.hpp>

#include "bgae/errors.hpp"
#include "bgae/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic stochastic-block-model dataset bundle"};
  bgae::SbmConfig config;
  std::string out;
  bool cora_scale = false;
  app.add_option("--out", out, "Output bundle directory")->required();
  app.add_flag("--cora-scale", cora_scale, "2708 nodes, 7 classes, 1433 features (other size flags ignored)");
  app.add_option("--nodes", config.num_nodes, "Number of nodes")->capture_default_str();
  app.add_option("--classes", config.num_classes, "Number of classes")->capture_default_str();
  app.add_option("--degree", config.average_degree, "Expected node degree")->capture_default_str();
  app.add_option("--homophily", config.homophily, "Share of within-class edges")->capture_default_str();
  app.add_option("--features", config.num_features, "Number of binary features")->capture_default_str();
  app.add_option("--topic-rate", config.topic_rate, "Feature rate inside the class block")->capture_default_str();
  app.add_option("--noise-rate", config.noise_rate, "Feature rate outside the class block")->capture_default_str();
  app.add_option("--train-per-class", config.train_per_class, "Train labels per class")->capture_default_str();
  app.add_option("--val", config.num_val, "Validation nodes")->capture_default_str();
  app.add_option("--test", config.num_test, "Test nodes")->capture_default_str();
  app.add_option("--seed", config.seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (cora_scale) config = bgae::cora_scale_sbm(config.seed);
    const auto bundle = bgae::make_sbm_bundle(config);
    bgae::save_bundle(bundle, out);
    std::cout << bundle.num_nodes() << " nodes, " << bundle.edges().size() << " edges, " << bundle.num_features()
              << " features, " << bundle.num_classes() << " classes\n";
  } catch (const bgae::ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << '\n';
    return 2;
  } catch (const bgae::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
