#pragma once

// JSON (de)serialization of configuration structs. Internal to the library.

#include <string>

#include <json.hpp>

#include "bgae/diffusion.hpp"
#include "bgae/errors.hpp"
#include "bgae/losses.hpp"
#include "bgae/training.hpp"

namespace bgae::detail {

using nlohmann::json;

inline std::string method_name(DiffusionMethod m) {
  switch (m) {
    case DiffusionMethod::Auto: return "auto";
    case DiffusionMethod::ExactInverse: return "exact";
    case DiffusionMethod::TruncatedSeries: return "series";
  }
  return "auto";
}

inline DiffusionMethod parse_method(const std::string& s) {
  if (s == "auto") return DiffusionMethod::Auto;
  if (s == "exact") return DiffusionMethod::ExactInverse;
  if (s == "series") return DiffusionMethod::TruncatedSeries;
  throw ValidationError("unknown diffusion method '" + s + "'");
}

inline std::string sparsify_name(Sparsification::Mode m) {
  switch (m) {
    case Sparsification::Mode::None: return "none";
    case Sparsification::Mode::TopK: return "topk";
    case Sparsification::Mode::Threshold: return "threshold";
  }
  return "none";
}

inline Sparsification::Mode parse_sparsify(const std::string& s) {
  if (s == "none") return Sparsification::Mode::None;
  if (s == "topk") return Sparsification::Mode::TopK;
  if (s == "threshold") return Sparsification::Mode::Threshold;
  throw ValidationError("unknown sparsification mode '" + s + "'");
}

inline std::string kernel_name(TransitionKind k) {
  return k == TransitionKind::Symmetric ? "symmetric" : "column";
}

inline TransitionKind parse_kernel(const std::string& s) {
  if (s == "symmetric") return TransitionKind::Symmetric;
  if (s == "column") return TransitionKind::ColumnStochastic;
  throw ValidationError("unknown transition kernel '" + s + "'");
}

inline json to_json(const DiffusionConfig& c) {
  return json{{"alpha", c.alpha},
              {"method", method_name(c.method)},
              {"truncation_order", c.truncation_order},
              {"series_tolerance", c.series_tolerance},
              {"sparsify", sparsify_name(c.sparsify.mode)},
              {"topk", c.sparsify.k},
              {"epsilon", c.sparsify.epsilon},
              {"renormalize", c.renormalize_after_sparsify},
              {"symmetrize", c.symmetrize},
              {"kernel", kernel_name(c.kernel)},
              {"self_loops", c.self_loops},
              {"exact_max_nodes", c.exact_max_nodes}};
}

inline DiffusionConfig diffusion_config_from_json(const json& j) {
  DiffusionConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.method = parse_method(j.value("method", method_name(c.method)));
  c.truncation_order = j.value("truncation_order", c.truncation_order);
  c.series_tolerance = j.value("series_tolerance", c.series_tolerance);
  c.sparsify.mode = parse_sparsify(j.value("sparsify", sparsify_name(c.sparsify.mode)));
  c.sparsify.k = j.value("topk", c.sparsify.k);
  c.sparsify.epsilon = j.value("epsilon", c.sparsify.epsilon);
  c.renormalize_after_sparsify = j.value("renormalize", c.renormalize_after_sparsify);
  c.symmetrize = j.value("symmetrize", c.symmetrize);
  c.kernel = parse_kernel(j.value("kernel", kernel_name(c.kernel)));
  c.self_loops = j.value("self_loops", c.self_loops);
  c.exact_max_nodes = j.value("exact_max_nodes", c.exact_max_nodes);
  return c;
}

inline json to_json(const LossConfig& c) {
  return json{{"beta", c.beta}, {"lambda", c.lambda}, {"variational", c.variational}, {"edge_batch", c.edge_batch}};
}

inline LossConfig loss_config_from_json(const json& j) {
  LossConfig c;
  c.beta = j.value("beta", c.beta);
  c.lambda = j.value("lambda", c.lambda);
  c.variational = j.value("variational", c.variational);
  c.edge_batch = j.value("edge_batch", c.edge_batch);
  return c;
}

inline json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"lr_decay", c.lr_decay},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed},
              {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},
              {"adam_eps", c.adam.eps}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
  c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
  c.adam.eps = j.value("adam_eps", c.adam.eps);
  return c;
}

}  // namespace bgae::detail
