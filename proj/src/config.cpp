#include "advdrop/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "advdrop/errors.hpp"

namespace advdrop {

using nlohmann::json;

LossSpec ExperimentConfig::loss_spec() const {
  LossSpec s;
  s.objective = objective_from_string(objective);
  s.divergence = divergence_from_string(divergence);
  s.lambda1 = lambda_max;
  s.lambda2 = lambda2;
  s.delta = delta;
  s.delta_input = delta_input;
  s.keep_prob = keep_prob;
  s.stop_grad_target = stop_grad_target;
  s.vat_xi = vat_xi;
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  static const std::set<std::string> known = {
      "dataset",        "images",          "labels",        "test_images",
      "test_labels",    "synth_train",     "synth_test",    "synth_seed",
      "train_items",    "test_items",      "label_budget",  "model",
      "hidden",         "classes",         "hidden_dropout_keep", "slot",
      "objective",      "divergence",      "lambda_max",    "lambda2",
      "delta",          "delta_input",     "keep_prob",     "stop_grad_target",
      "vat_xi",         "epochs",          "batch_labeled", "batch_unlabeled",
      "lr",             "ramp_epochs",     "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown config key '" + it.key() + "'");
    }
  }

  try {
    c.dataset = j.value("dataset", c.dataset);
    c.images = j.value("images", c.images);
    c.labels = j.value("labels", c.labels);
    c.test_images = j.value("test_images", c.test_images);
    c.test_labels = j.value("test_labels", c.test_labels);
    c.synth_train = j.value("synth_train", c.synth_train);
    c.synth_test = j.value("synth_test", c.synth_test);
    c.synth_seed = j.value("synth_seed", c.synth_seed);
    c.train_items = j.value("train_items", c.train_items);
    c.test_items = j.value("test_items", c.test_items);
    c.label_budget = j.value("label_budget", c.label_budget);
    c.model = j.value("model", c.model);
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.classes = j.value("classes", c.classes);
    c.hidden_dropout_keep = j.value("hidden_dropout_keep", c.hidden_dropout_keep);
    c.slot = j.value("slot", c.slot);
    c.objective = j.value("objective", c.objective);
    c.divergence = j.value("divergence", c.divergence);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.delta = j.value("delta", c.delta);
    c.delta_input = j.value("delta_input", c.delta_input);
    c.keep_prob = j.value("keep_prob", c.keep_prob);
    c.stop_grad_target = j.value("stop_grad_target", c.stop_grad_target);
    c.vat_xi = j.value("vat_xi", c.vat_xi);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_labeled = j.value("batch_labeled", c.batch_labeled);
    c.batch_unlabeled = j.value("batch_unlabeled", c.batch_unlabeled);
    c.lr = j.value("lr", c.lr);
    c.ramp_epochs = j.value("ramp_epochs", c.ramp_epochs);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }

  if (c.dataset != "synthetic" && c.dataset != "idx") {
    throw ConfigError("dataset must be 'synthetic' or 'idx'");
  }
  if (c.dataset == "idx" &&
      (c.images.empty() || c.labels.empty() || c.test_images.empty() || c.test_labels.empty())) {
    throw ConfigError("idx dataset needs images/labels/test_images/test_labels paths");
  }
  if (c.model != "classifier" && c.model != "autoencoder") {
    throw ConfigError("model must be 'classifier' or 'autoencoder'");
  }
  if (c.hidden.empty()) throw ConfigError("hidden layer list must not be empty");
  for (std::size_t h : c.hidden) {
    if (h == 0) throw ConfigError("hidden layer width 0");
  }
  if (c.model == "classifier" && c.classes < 2) throw ConfigError("classes must be >= 2");
  if (c.lambda_max < 0 || c.lambda2 < 0 || c.delta < 0 || c.delta_input < 0) {
    throw ConfigError("lambda_max, lambda2, delta, delta_input must be >= 0");
  }
  if (!(c.keep_prob >= 0.0 && c.keep_prob <= 1.0)) {
    throw ConfigError("keep_prob must lie in [0, 1]");
  }
  if (!(c.hidden_dropout_keep > 0.0 && c.hidden_dropout_keep <= 1.0)) {
    throw ConfigError("hidden_dropout_keep must lie in (0, 1]");
  }
  if (c.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (c.batch_labeled == 0) throw ConfigError("batch_labeled must be >= 1");
  if (!(c.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (c.ramp_epochs == 0) throw ConfigError("ramp_epochs must be >= 1");
  c.loss_spec();  // validates objective and divergence names
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  if (!c.images.empty()) j["images"] = c.images;
  if (!c.labels.empty()) j["labels"] = c.labels;
  if (!c.test_images.empty()) j["test_images"] = c.test_images;
  if (!c.test_labels.empty()) j["test_labels"] = c.test_labels;
  j["synth_train"] = c.synth_train;
  j["synth_test"] = c.synth_test;
  j["synth_seed"] = c.synth_seed;
  j["train_items"] = c.train_items;
  j["test_items"] = c.test_items;
  j["label_budget"] = c.label_budget;
  j["model"] = c.model;
  j["hidden"] = c.hidden;
  j["classes"] = c.classes;
  j["hidden_dropout_keep"] = c.hidden_dropout_keep;
  j["slot"] = c.slot;
  j["objective"] = c.objective;
  j["divergence"] = c.divergence;
  j["lambda_max"] = c.lambda_max;
  j["lambda2"] = c.lambda2;
  j["delta"] = c.delta;
  j["delta_input"] = c.delta_input;
  j["keep_prob"] = c.keep_prob;
  j["stop_grad_target"] = c.stop_grad_target;
  j["vat_xi"] = c.vat_xi;
  j["epochs"] = c.epochs;
  j["batch_labeled"] = c.batch_labeled;
  j["batch_unlabeled"] = c.batch_unlabeled;
  j["lr"] = c.lr;
  j["ramp_epochs"] = c.ramp_epochs;
  j["seed"] = c.seed;
  return j.dump(2);
}

}  // namespace advdrop
