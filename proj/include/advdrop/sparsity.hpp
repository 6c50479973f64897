#ifndef ADVDROP_SPARSITY_HPP
#define ADVDROP_SPARSITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advdrop/config.hpp"
#include "advdrop/data.hpp"
#include "advdrop/network.hpp"
#include "advdrop/train.hpp"

namespace advdrop {

// Activation statistics of one hidden layer over a test subset. The
// histogram uses log-spaced bin edges plus an underflow bin (captures exact
// zeros) and an overflow bin, so counts always sum to units * items.
struct SparsityReport {
  std::vector<double> bin_edges;        // ascending, log-spaced 1e-6 .. 1e2
  std::vector<std::size_t> bin_counts;  // size bin_edges.size() + 1
  std::vector<double> per_unit_mean;    // size = layer width
  double global_mean = 0.0;
  std::size_t items = 0;
};

// Eval-mode activations acts[act_index] over the first n_items of ds
// (n_items = 0 means all). act_index out of range is a configuration error.
SparsityReport sparsity_report(const SplitNetwork& net, std::size_t act_index,
                               const Dataset& ds, std::size_t n_items);

std::string sparsity_to_json(const SparsityReport& r);

// Canonical autoencoder study config: 256 ReLU units on 10,000 synthetic
// digits. mode "none" = no noise, "dropout" = p=0.5 plain dropout, "add" =
// the same p=0.5 dropout plus adversarial drops (lambda 0.2, delta 0.3).
ExperimentConfig sparsity_config(const std::string& mode, std::uint64_t seed);

// Index into the trace's activation list of the hidden ReLU output for
// networks built from sparsity_config.
inline constexpr std::size_t kSparsityActIndex = 2;

struct SparsityStudy {
  ExperimentConfig config;
  MetricsLog log;
  SparsityReport report;
};

// Trains per sparsity_config, then reports on the first report_items test
// images. When out_dir is non-empty the run's metrics land there along with
// sparsity.json.
SparsityStudy run_sparsity_study(const std::string& mode, std::uint64_t seed,
                                 const std::string& out_dir,
                                 std::size_t report_items = 1000);

}  // namespace advdrop

#endif
