#ifndef ADVDROP_TRAIN_HPP
#define ADVDROP_TRAIN_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "advdrop/config.hpp"
#include "advdrop/data.hpp"
#include "advdrop/network.hpp"

namespace advdrop {

// max_value * exp(-5 (1 - T)^2) with T = epoch / ramp_epochs, saturating at
// max_value once epoch >= ramp_epochs.
double ramp_up_weight(std::size_t epoch, std::size_t ramp_epochs, double max_value);

struct EpochRecord {
  std::size_t epoch = 0;
  double nll = 0.0;        // mean supervised loss over the epoch's steps
  double reg = 0.0;        // mean unweighted regularizer value (reg1 + reg2)
  double lambda = 0.0;     // ramped lambda1 in force this epoch
  double test_err = 0.0;   // % error (classifier) or mean recon QE (autoencoder)
  double mean_abs_j = 0.0;
  double mean_flips = 0.0;
  double seconds = 0.0;    // reserved; always written as 0.000 in the CSV
};

struct MetricsLog {
  std::vector<EpochRecord> records;
  std::uint64_t seed = 0;
  double final_test_err = 0.0;
  double wall_seconds = 0.0;   // real time, summary.json only
  std::string config_echo;     // JSON text of the config that ran

  std::string to_csv() const;
  std::string summary_json() const;
};

SplitNetwork build_network(const ExperimentConfig& cfg, std::size_t input_dim,
                           std::uint64_t init_seed);
Dataset load_train_set(const ExperimentConfig& cfg);
Dataset load_test_set(const ExperimentConfig& cfg);

double classifier_error_pct(const SplitNetwork& net, const Dataset& ds);
double autoencoder_error(const SplitNetwork& net, const Dataset& ds);  // mean per-item QE

// Full deterministic training run. When out_dir is non-empty, writes
// metrics.csv, summary.json and checkpoint.json there (atomically, creating
// the directory). A NaN loss writes the last completed epoch's checkpoint
// and throws TrainingDiverged. `trained` (optional) receives the final model.
MetricsLog run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                          std::unique_ptr<SplitNetwork>* trained = nullptr);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace advdrop

#endif
