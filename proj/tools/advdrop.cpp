#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "advdrop/config.hpp"
#include "advdrop/data.hpp"
#include "advdrop/errors.hpp"
#include "advdrop/sparsity.hpp"
#include "advdrop/train.hpp"
#include "advdrop/verify.hpp"

namespace {

// Relative --out paths land under ADVDROP_OUT_ROOT when it is set.
std::string resolve_out(const std::string& out) {
  if (out.empty() || out.front() == '/') return out;
  const char* root = std::getenv("ADVDROP_OUT_ROOT");
  if (!root || !*root) return out;
  return std::string(root) + "/" + out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial dropout training laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode, suite;
  bool as_json = false;
  std::uint64_t seed = 1;
  std::size_t n_train = 4000, n_test = 2000;

  CLI::App* train = app.add_subcommand("train", "run one training experiment");
  train->add_option("--config", config_path, "experiment config (JSON)")->required();
  train->add_option("--out", out_dir, "output directory for metrics and checkpoint")->required();

  CLI::App* sparsity =
      app.add_subcommand("sparsity", "train the 256-unit autoencoder and report activations");
  sparsity->add_option("--mode", mode, "noise regime")
      ->required()
      ->check(CLI::IsMember({"none", "dropout", "add"}));
  sparsity->add_option("--out", out_dir, "output directory")->required();
  sparsity->add_option("--seed", seed, "experiment seed");

  CLI::App* linreg = app.add_subcommand("linreg-check", "run the regression decomposition checks");
  linreg->add_flag("--json", as_json, "print the full JSON report");

  CLI::App* verify = app.add_subcommand("verify", "run one property suite");
  verify->add_option("suite", suite, "suite name")
      ->required()
      ->check(CLI::IsMember(advdrop::verify_suite_names()));

  CLI::App* synth = app.add_subcommand("synth-data", "write a synthetic digit set as IDX files");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--train", n_train, "training images");
  synth->add_option("--test", n_test, "test images");
  synth->add_option("--seed", seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message / help
    return 2;
  }

  try {
    if (*train) {
      const advdrop::ExperimentConfig cfg = advdrop::load_config(config_path);
      const std::string out = resolve_out(out_dir);
      const advdrop::MetricsLog log = advdrop::run_experiment(cfg, out);
      std::printf("trained %zu epochs, final test_err %.6g, %.1fs -> %s\n", log.records.size(),
                  log.final_test_err, log.wall_seconds, out.c_str());
      return 0;
    }
    if (*sparsity) {
      const std::string out = resolve_out(out_dir);
      const advdrop::SparsityStudy s = advdrop::run_sparsity_study(mode, seed, out);
      std::printf("mode %s seed %llu: global mean activation %.6g, recon err %.6g -> %s\n",
                  mode.c_str(), static_cast<unsigned long long>(seed), s.report.global_mean,
                  s.log.final_test_err, out.c_str());
      return 0;
    }
    if (*linreg) {
      const advdrop::SuiteResult r = advdrop::run_verify_suite("linreg");
      if (as_json)
        std::fputs(r.report_json.c_str(), stdout);
      else
        std::printf("%s: %s\n", r.pass ? "pass" : "FAIL", r.details.c_str());
      return r.pass ? 0 : 1;
    }
    if (*verify) {
      const advdrop::SuiteResult r = advdrop::run_verify_suite(suite);
      std::fputs(r.report_json.c_str(), stdout);
      std::fprintf(stderr, "%s: %s\n", r.pass ? "pass" : "FAIL", r.details.c_str());
      return r.pass ? 0 : 1;
    }
    if (*synth) {
      const std::string out = resolve_out(out_dir);
      std::filesystem::create_directories(out);
      const advdrop::Dataset tr = advdrop::synth_digits(n_train, seed);
      const advdrop::Dataset te = advdrop::synth_digits(n_test, seed + 1);
      advdrop::write_idx(tr, out + "/train-images.idx3-ubyte", out + "/train-labels.idx1-ubyte");
      advdrop::write_idx(te, out + "/test-images.idx3-ubyte", out + "/test-labels.idx1-ubyte");
      std::printf("wrote %zu train / %zu test images to %s\n", tr.size(), te.size(), out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
