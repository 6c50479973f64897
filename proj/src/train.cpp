#include "advdrop/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "advdrop/adversarial.hpp"
#include "advdrop/errors.hpp"
#include "advdrop/rng.hpp"

namespace advdrop {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Tensor take_rows(const Tensor& src, const std::vector<std::size_t>& which) {
  const std::size_t d = src.dim(1);
  Tensor out({which.size(), d});
  for (std::size_t i = 0; i < which.size(); ++i) {
    const double* row = src.data() + which[i] * d;
    std::copy(row, row + d, out.data() + i * d);
  }
  return out;
}

Dataset head(Dataset d, std::size_t n) {
  if (n == 0 || n >= d.size()) return d;
  const std::size_t dim = d.images.dim(1);
  Tensor imgs({n, dim});
  std::copy(d.images.data(), d.images.data() + n * dim, imgs.data());
  d.images = std::move(imgs);
  d.labels.resize(n);
  return d;
}

}  // namespace

double ramp_up_weight(std::size_t epoch, std::size_t ramp_epochs, double max_value) {
  if (ramp_epochs == 0) throw DomainError("ramp_up_weight: ramp_epochs must be >= 1");
  if (max_value < 0.0) throw DomainError("ramp_up_weight: max_value must be >= 0");
  if (epoch >= ramp_epochs) return max_value;
  const double t = static_cast<double>(epoch) / static_cast<double>(ramp_epochs);
  return max_value * std::exp(-5.0 * (1.0 - t) * (1.0 - t));
}

std::string MetricsLog::to_csv() const {
  std::string out = "epoch,nll,reg,lambda,test_err,mean_abs_J,mean_mask_flips,seconds\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    out += ',';
    out += fmt(r.nll);
    out += ',';
    out += fmt(r.reg);
    out += ',';
    out += fmt(r.lambda);
    out += ',';
    out += fmt(r.test_err);
    out += ',';
    out += fmt(r.mean_abs_j);
    out += ',';
    out += fmt(r.mean_flips);
    // Wall time varies run to run; the CSV is defined to be byte-identical
    // across equal-seed runs, so the column is pinned and the measured time
    // lives in summary.json.
    out += ",0.000\n";
  }
  return out;
}

std::string MetricsLog::summary_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["epochs"] = records.size();
  j["final_test_err"] = final_test_err;
  if (!records.empty()) {
    j["final_nll"] = records.back().nll;
    j["final_reg"] = records.back().reg;
  }
  j["wall_seconds"] = wall_seconds;
  if (!config_echo.empty()) j["config"] = nlohmann::json::parse(config_echo);
  return j.dump(2) + "\n";
}

SplitNetwork build_network(const ExperimentConfig& cfg, std::size_t input_dim,
                           std::uint64_t init_seed) {
  if (cfg.hidden.empty()) throw ConfigError("build_network: at least one hidden layer required");
  const bool ae = cfg.model == "autoencoder";
  std::vector<LayerSpec> layers;
  std::size_t width = input_dim;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    layers.push_back(LayerSpec::dense(width, cfg.hidden[i]));
    layers.push_back(LayerSpec::relu());
    width = cfg.hidden[i];
    if (cfg.hidden_dropout_keep < 1.0)
      layers.push_back(LayerSpec::dropout(cfg.hidden_dropout_keep));
    // The slot rides after the last hidden activation (and after its plain
    // dropout, so adversarial flips act on the surviving units).
    if (cfg.slot && i + 1 == cfg.hidden.size())
      layers.push_back(LayerSpec::adv_dropout_slot());
  }
  if (ae) {
    layers.push_back(LayerSpec::dense(width, input_dim));
  } else {
    layers.push_back(LayerSpec::dense(width, cfg.classes));
    layers.push_back(LayerSpec::softmax());
  }
  return SplitNetwork(input_dim, std::move(layers), init_seed);
}

Dataset load_train_set(const ExperimentConfig& cfg) {
  Dataset d = cfg.dataset == "synthetic" ? synth_digits(cfg.synth_train, cfg.synth_seed)
                                         : load_mnist_idx(cfg.images, cfg.labels);
  return head(std::move(d), cfg.train_items);
}

Dataset load_test_set(const ExperimentConfig& cfg) {
  Dataset d = cfg.dataset == "synthetic" ? synth_digits(cfg.synth_test, cfg.synth_seed + 1)
                                         : load_mnist_idx(cfg.test_images, cfg.test_labels);
  return head(std::move(d), cfg.test_items);
}

double classifier_error_pct(const SplitNetwork& net, const Dataset& ds) {
  const std::size_t n = ds.size();
  if (n == 0) throw DomainError("classifier_error_pct: empty dataset");
  const std::size_t chunk = 512;
  std::size_t wrong = 0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = start + i;
    ForwardResult fr = net.forward(take_rows(ds.images, idx), nullptr, RunMode::kEval);
    const std::size_t c = fr.output.dim(1);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < c; ++k)
        if (fr.output.at2(i, k) > fr.output.at2(i, best)) best = k;
      if (static_cast<int>(best) != ds.labels[start + i]) ++wrong;
    }
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(n);
}

double autoencoder_error(const SplitNetwork& net, const Dataset& ds) {
  const std::size_t n = ds.size();
  if (n == 0) throw DomainError("autoencoder_error: empty dataset");
  const std::size_t chunk = 512;
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = start + i;
    Tensor x = take_rows(ds.images, idx);
    ForwardResult fr = net.forward(x, nullptr, RunMode::kEval);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double diff = fr.output[i] - x[i];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(n);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename '" + tmp + "' -> '" + path + "' failed: " + ec.message());
}

MetricsLog run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                          std::unique_ptr<SplitNetwork>* trained) {
  const auto wall_start = std::chrono::steady_clock::now();

  Dataset train = load_train_set(cfg);
  Dataset test = load_test_set(cfg);
  if (train.size() == 0) throw ConfigError("run_experiment: training set is empty");
  if (test.size() == 0) throw ConfigError("run_experiment: test set is empty");
  const std::size_t n = train.size();
  const std::size_t input_dim = train.images.dim(1);

  const bool ae = cfg.model == "autoencoder";
  if (cfg.label_budget > n)
    throw ConfigError("run_experiment: label_budget " + std::to_string(cfg.label_budget) +
                      " exceeds training set size " + std::to_string(n));

  RngStream root(cfg.seed);
  auto net = std::make_unique<SplitNetwork>(build_network(cfg, input_dim, root.fork(1).seed()));

  // Label subset: a seeded permutation picks which items keep their labels.
  // Autoencoders treat every item as labeled (the target is the input).
  std::vector<std::uint8_t> has_label(n, 1);
  if (!ae && cfg.label_budget > 0 && cfg.label_budget < n) {
    std::fill(has_label.begin(), has_label.end(), 0);
    RngStream pick = root.fork(2);
    const std::vector<std::size_t> perm = pick.permutation(n);
    for (std::size_t i = 0; i < cfg.label_budget; ++i) has_label[perm[i]] = 1;
  }
  std::vector<std::size_t> labeled_idx, unlabeled_idx;
  for (std::size_t i = 0; i < n; ++i)
    (has_label[i] ? labeled_idx : unlabeled_idx).push_back(i);
  if (labeled_idx.empty()) throw ConfigError("run_experiment: no labeled items");

  Tensor y_full;
  if (!ae) y_full = one_hot(train.labels, cfg.classes);

  LossSpec spec = cfg.loss_spec();
  if (ae) spec.supervised = SupervisedLoss::kQe;

  RngStream noise_rng = root.fork(3);
  AdamState adam;

  MetricsLog log;
  log.seed = cfg.seed;
  log.config_echo = config_to_json(cfg);

  const std::size_t bl = std::min(cfg.batch_labeled, labeled_idx.size());
  const std::size_t bu = unlabeled_idx.empty()
                             ? 0
                             : std::min(cfg.batch_unlabeled, unlabeled_idx.size());
  // One epoch = one sweep of the larger pool: the unlabeled set when present
  // (labeled items recycle within the epoch), otherwise the labeled set.
  const std::size_t steps =
      bu > 0 ? std::max<std::size_t>(1, unlabeled_idx.size() / bu)
             : (labeled_idx.size() + bl - 1) / bl;
  const std::size_t nb = bl + bu;
  const std::size_t target_dim = ae ? input_dim : cfg.classes;

  std::string ckpt_path, csv_path, summary_path;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    ckpt_path = out_dir + "/checkpoint.json";
    csv_path = out_dir + "/metrics.csv";
    summary_path = out_dir + "/summary.json";
  }

  auto persist = [&](double final_err) {
    log.final_test_err = final_err;
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                     wall_start)
                           .count();
    if (out_dir.empty()) return;
    write_file_atomic(csv_path, log.to_csv());
    write_file_atomic(summary_path, log.summary_json());
  };
  auto save_net = [&]() {
    if (out_dir.empty()) return;
    net->save_checkpoint(ckpt_path + ".tmp");
    std::error_code ec;
    std::filesystem::rename(ckpt_path + ".tmp", ckpt_path, ec);
    if (ec) throw IoError("rename of checkpoint failed: " + ec.message());
  };

  save_net();  // epoch-0 state; stays the "last good" fallback until replaced

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    spec.lambda1 = ramp_up_weight(epoch, cfg.ramp_epochs, cfg.lambda_max);
    spec.lambda2 = cfg.lambda2;

    RngStream shuffle = root.fork(4).fork(epoch);
    const std::vector<std::size_t> lperm = shuffle.permutation(labeled_idx.size());
    std::vector<std::size_t> uperm;
    if (bu > 0) uperm = shuffle.permutation(unlabeled_idx.size());

    double sum_nll = 0.0, sum_reg = 0.0, sum_absj = 0.0, sum_flips = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<std::size_t> rows(nb);
      std::vector<std::uint8_t> labeled(nb, 0);
      for (std::size_t i = 0; i < bl; ++i) {
        rows[i] = labeled_idx[lperm[(step * bl + i) % lperm.size()]];
        labeled[i] = 1;
      }
      for (std::size_t i = 0; i < bu; ++i)
        rows[bl + i] = unlabeled_idx[uperm[(step * bu + i) % uperm.size()]];

      Batch batch;
      batch.x = take_rows(train.images, rows);
      batch.labeled = std::move(labeled);
      batch.y = Tensor({nb, target_dim});
      for (std::size_t i = 0; i < nb; ++i) {
        if (!batch.labeled[i]) continue;
        const double* src = ae ? batch.x.data() + i * input_dim
                               : y_full.data() + rows[i] * cfg.classes;
        std::copy(src, src + target_dim, batch.y.data() + i * target_dim);
      }

      ObjectiveResult res = assemble_objective(*net, batch, spec, noise_rng);
      if (!std::isfinite(res.total)) {
        // Leave the last completed epoch's checkpoint on disk and bail.
        persist(log.records.empty() ? 0.0 : log.records.back().test_err);
        throw TrainingDiverged("loss is not finite at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step));
      }
      net->adam_step(res.param_grads, adam, cfg.lr);

      sum_nll += res.stats.nll;
      sum_reg += res.stats.reg1 + res.stats.reg2;
      sum_absj += res.stats.mean_abs_j;
      sum_flips += res.stats.mean_flips;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.nll = sum_nll / static_cast<double>(steps);
    rec.reg = sum_reg / static_cast<double>(steps);
    rec.lambda = spec.lambda1;
    rec.test_err = ae ? autoencoder_error(*net, test) : classifier_error_pct(*net, test);
    rec.mean_abs_j = sum_absj / static_cast<double>(steps);
    rec.mean_flips = sum_flips / static_cast<double>(steps);
    log.records.push_back(rec);

    save_net();
  }

  persist(log.records.back().test_err);
  if (trained) *trained = std::move(net);
  return log;
}

}  // namespace advdrop
