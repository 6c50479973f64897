#ifndef ADVDROP_CONFIG_HPP
#define ADVDROP_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advdrop/adversarial.hpp"

namespace advdrop {

// One training run, fully specified. Parsed from flat JSON with strict key
// checking: an unknown key is a configuration error, never ignored.
struct ExperimentConfig {
  // Data source: "synthetic" generates digits in memory; "idx" reads the
  // four IDX files below.
  std::string dataset = "synthetic";
  std::string images, labels, test_images, test_labels;
  std::size_t synth_train = 4000;
  std::size_t synth_test = 2000;
  std::uint64_t synth_seed = 9000;

  std::size_t train_items = 0;   // 0 = whole train set
  std::size_t test_items = 0;    // 0 = whole test set
  std::size_t label_budget = 0;  // 0 = every train item labeled

  // Model: classifier ends in softmax over `classes`; autoencoder
  // reconstructs the input with a linear output and squared error.
  std::string model = "classifier";
  std::vector<std::size_t> hidden = {512, 256};
  std::size_t classes = 10;
  double hidden_dropout_keep = 1.0;  // plain dropout after each hidden activation
  bool slot = true;                  // AdD slot after the last hidden activation

  // Loss family; lambda_max is the ramp target for the main regularizer.
  std::string objective = "plain";
  std::string divergence = "kl";
  double lambda_max = 0.0;
  double lambda2 = 0.0;
  double delta = 0.0;
  double delta_input = 0.0;
  double keep_prob = 1.0;
  bool stop_grad_target = false;
  double vat_xi = 1e-6;

  std::size_t epochs = 10;
  std::size_t batch_labeled = 32;
  std::size_t batch_unlabeled = 96;
  double lr = 0.001;
  std::size_t ramp_epochs = 1;
  std::uint64_t seed = 1;

  LossSpec loss_spec() const;  // objective/divergence parsed, lambda1 = lambda_max
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& c);

}  // namespace advdrop

#endif
