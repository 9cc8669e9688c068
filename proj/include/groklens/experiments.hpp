#pragma once

// End-to-end training runs for the three problem families, with per-epoch
// loss/metric logging, spectrum snapshots and grokking detection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "groklens/datasets.hpp"
#include "groklens/error.hpp"
#include "groklens/nn.hpp"
#include "groklens/optim.hpp"
#include "groklens/rng.hpp"
#include "groklens/spectral.hpp"

namespace groklens {

enum class Family { synth1d, parity, mnist };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::synth1d: return "synth1d";
    case Family::parity: return "parity";
    case Family::mnist: return "mnist";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "synth1d") return Family::synth1d;
  if (s == "parity") return Family::parity;
  if (s == "mnist") return Family::mnist;
  throw ConfigError("unknown family '" + std::string(s) + "'");
}

struct ExperimentConfig {
  Family family = Family::synth1d;

  // synth1d
  int n = 65;
  bool nonuniform = true;
  int test_points = 1000;
  // parity
  double proportion = 0.5;
  int parity_m = 10;
  std::vector<int> parity_indices;  // empty: all of 1..m
  // mnist
  int subset_size = 1000;
  int test_size = 0;  // 0: whole test file
  std::string mnist_dir;  // empty: $GROKLENS_DATA, then ./data/mnist
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";

  // network
  std::vector<int> hidden_widths = {200, 200, 200, 100};
  Activation activation = Activation::sin;
  double alpha = 1.0;

  // optimizer
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 2e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // schedule
  long epochs = 35000;
  int batch_size = 0;  // 0: full batch
  int eval_every = 1;
  std::vector<long> snapshot_epochs = {0, 2000, 35000};
  int grid_points = kDefaultGridPoints;
  int trials = 10;

  // seeds; trial t draws stream t of each
  std::uint64_t seed_data = 1;
  std::uint64_t seed_init = 2;
  std::uint64_t seed_shuffle = 3;

  // grokking detection knobs
  double eps_train = 1e-3;
  double test_loss_threshold = 1e-2;
  double train_accuracy_threshold = 0.99;
  double test_accuracy_threshold = 0.80;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs: must be >= 1");
    if (trials < 1) throw ConfigError("trials: must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every: must be >= 1");
    if (batch_size < 0) throw ConfigError("batch_size: must be >= 0");
    if (grid_points < 2) throw ConfigError("grid_points: must be >= 2");
    if (!(lr > 0.0)) throw ConfigError("lr: must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("alpha: must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1: must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2: must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps: must be > 0");
    for (int w : hidden_widths)
      if (w <= 0) throw ConfigError("hidden_widths: widths must be positive");
    for (std::size_t i = 0; i < snapshot_epochs.size(); ++i) {
      if (snapshot_epochs[i] < 0 || snapshot_epochs[i] > epochs)
        throw ConfigError("snapshot_epochs: epochs must lie in [0, epochs]");
      if (i > 0 && snapshot_epochs[i] <= snapshot_epochs[i - 1])
        throw ConfigError("snapshot_epochs: must be strictly increasing");
    }
    switch (family) {
      case Family::synth1d:
        if (nonuniform ? n < 30 : n < 2) throw ConfigError("n: too small for the chosen sampling");
        if (test_points < 2) throw ConfigError("test_points: must be >= 2");
        break;
      case Family::parity:
        if (!(proportion > 0.0 && proportion < 1.0)) throw ConfigError("proportion: must lie in (0, 1)");
        if (parity_m < 1 || parity_m > kMaxParityDim) throw ConfigError("parity_m: must lie in [1, 20]");
        parity_spec().validate();
        break;
      case Family::mnist:
        if (subset_size < 1) throw ConfigError("subset_size: must be >= 1");
        if (test_size < 0) throw ConfigError("test_size: must be >= 0");
        break;
    }
  }

  ParitySpec parity_spec() const {
    if (parity_indices.empty()) return ParitySpec::full(parity_m);
    return ParitySpec{parity_m, parity_indices};
  }

  std::filesystem::path resolved_mnist_dir() const {
    if (!mnist_dir.empty()) return mnist_dir;
    if (const char* env = std::getenv("GROKLENS_DATA"); env && *env) return env;
    return "data/mnist";
  }
};

/// Reference settings per family. Learning rate and snapshot schedule depend on the
/// activation (synth1d) and on the initialization scale (mnist).
inline ExperimentConfig default_config(Family family, std::optional<Activation> activation = std::nullopt,
                                       std::optional<double> alpha = std::nullopt) {
  ExperimentConfig c;
  c.family = family;
  switch (family) {
    case Family::synth1d: {
      c.activation = activation.value_or(Activation::sin);
      c.hidden_widths = {200, 200, 200, 100};
      c.optimizer = OptimizerKind::adam;
      c.alpha = alpha.value_or(1.0);
      if (c.activation == Activation::sin) {
        c.lr = 2e-6;
        c.epochs = 35000;
        c.snapshot_epochs = {0, 2000, 35000};
      } else if (c.activation == Activation::relu) {
        c.lr = 2e-5;
        c.epochs = 19900;
        c.snapshot_epochs = {0, 1000, 19900};
      } else {
        c.lr = 2e-5;
        c.epochs = 18000;
        c.snapshot_epochs = {0, 1000, 18000};
      }
      c.trials = 10;
      break;
    }
    case Family::parity: {
      c.activation = activation.value_or(Activation::relu);
      c.hidden_widths = {1000};
      c.optimizer = OptimizerKind::adam;
      c.lr = 2e-4;
      c.alpha = alpha.value_or(1.0);
      c.epochs = 1000;
      c.snapshot_epochs = {100, 120, 140, 160, 180, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
      c.trials = 10;
      break;
    }
    case Family::mnist: {
      c.activation = activation.value_or(Activation::relu);
      c.hidden_widths = {200, 200, 200};
      c.alpha = alpha.value_or(8.0);
      c.batch_size = 200;
      c.subset_size = 1000;
      c.epochs = 99383;
      if (c.alpha == 1.0) {
        c.optimizer = OptimizerKind::sgd;
        c.lr = 0.02;
        c.snapshot_epochs = {0, 1334, 99383};
      } else {
        c.optimizer = OptimizerKind::adam;
        c.lr = 1e-3;
        c.snapshot_epochs = {0, 2668, 99383};
      }
      c.trials = 1;
      break;
    }
  }
  return c;
}

/// Sets the run length, dropping snapshots past it and adding the final epoch.
inline ExperimentConfig with_epochs(ExperimentConfig c, long epochs) {
  c.epochs = epochs;
  std::vector<long> snaps;
  for (long e : c.snapshot_epochs)
    if (e < epochs) snaps.push_back(e);
  snaps.push_back(epochs);
  c.snapshot_epochs = snaps;
  return c;
}

/// Shortens a config to a quick single-trial run.
inline ExperimentConfig apply_smoke_profile(ExperimentConfig c) {
  const long epochs = c.family == Family::mnist ? 20 : 200;
  c = with_epochs(std::move(c), std::min(c.epochs, epochs));
  c.trials = 1;
  if (c.family == Family::mnist && c.test_size == 0) c.test_size = 1000;
  return c;
}

struct TrialSeeds {
  std::uint64_t data = 0, init = 0, shuffle = 0;
};

inline TrialSeeds trial_seeds(const ExperimentConfig& c, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  return {derive_seed(c.seed_data, 3 * t), derive_seed(c.seed_init, 3 * t + 1), derive_seed(c.seed_shuffle, 3 * t + 2)};
}

// ---------------------------------------------------------------------------
// Metrics

/// Fraction of samples with sign(output) != label, where sign(0) = +1.
inline double sign_error(const Matrix& outputs, const Matrix& labels) {
  if (outputs.rows() != labels.rows() || outputs.cols() != 1 || labels.cols() != 1)
    throw ShapeError("sign_error: expects matching n x 1 outputs and labels");
  if (outputs.rows() == 0) throw DomainError("sign_error: empty batch");
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    const double y = labels(i, 0);
    if (y != 1.0 && y != -1.0) throw DomainError("sign_error: labels must be -1 or +1");
    const double s = outputs(i, 0) >= 0.0 ? 1.0 : -1.0;
    if (s != y) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(outputs.rows());
}

/// Fraction of rows where argmax(output) == argmax(onehot); ties go to the lowest index.
inline double accuracy(const Matrix& outputs, const Matrix& onehot) {
  if (outputs.rows() != onehot.rows() || outputs.cols() != onehot.cols())
    throw ShapeError("accuracy: output and label shapes differ");
  if (outputs.rows() == 0) throw DomainError("accuracy: empty batch");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    Eigen::Index a = 0, b = 0;
    for (Eigen::Index j = 1; j < outputs.cols(); ++j) {
      if (outputs(i, j) > outputs(i, a)) a = j;
      if (onehot(i, j) > onehot(i, b)) b = j;
    }
    if (a == b) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.rows());
}

// ---------------------------------------------------------------------------
// Training

enum class MetricKind { none, sign_error, accuracy };

inline MetricKind metric_for(Family f) {
  switch (f) {
    case Family::synth1d: return MetricKind::none;
    case Family::parity: return MetricKind::sign_error;
    case Family::mnist: return MetricKind::accuracy;
  }
  return MetricKind::none;
}

inline std::string_view to_string(MetricKind m) {
  switch (m) {
    case MetricKind::none: return "none";
    case MetricKind::sign_error: return "sign_error";
    case MetricKind::accuracy: return "accuracy";
  }
  return "?";
}

struct LogRow {
  long epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_metric = std::numeric_limits<double>::quiet_NaN();
  double test_metric = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingLog {
  Family family = Family::synth1d;
  MetricKind metric = MetricKind::none;
  int trial = 0;
  TrialSeeds seeds;
  std::vector<LogRow> rows;
  SpectrumSeries spectra;
  bool aborted = false;
  std::string abort_reason;

  std::vector<double> column(double LogRow::*field) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
  }
  std::vector<long> epochs() const {
    std::vector<long> out;
    for (const auto& r : rows) out.push_back(r.epoch);
    return out;
  }
};

/// Everything a run trains and evaluates on. `spectral` is the second
/// spectrum role: the 1000-point grid for synth1d, all data otherwise.
struct ExperimentData {
  LabeledSet train;
  LabeledSet test;
  LabeledSet spectral;
  DataRole spectral_role = DataRole::test;
  FrequencyGrid grid;
};

inline ExperimentData build_data(const ExperimentConfig& c, const TrialSeeds& seeds) {
  ExperimentData d;
  switch (c.family) {
    case Family::synth1d: {
      d.train = c.nonuniform ? gen_synth1d_nonuniform(c.n, seeds.data) : gen_synth1d_uniform(c.n);
      d.test = gen_synth1d_uniform(c.test_points);
      d.spectral = d.test;
      d.spectral_role = DataRole::test;
      d.grid = synth1d_grid(c.grid_points);
      break;
    }
    case Family::parity: {
      const auto full = parity_enumerate(c.parity_spec());
      auto parts = split(full, c.proportion, seeds.data);
      d.train = std::move(parts.train);
      d.test = std::move(parts.test);
      d.spectral = full;
      d.spectral_role = DataRole::full;
      d.grid = parity_grid(c.parity_m, c.grid_points);
      break;
    }
    case Family::mnist: {
      const auto dir = c.resolved_mnist_dir();
      for (const auto& f : {c.train_images, c.train_labels, c.test_images, c.test_labels})
        if (!std::filesystem::exists(dir / f))
          throw DataError("missing MNIST file " + (dir / f).string() + " (set GROKLENS_DATA or run fetch-mnist)");
      const auto pool = load_mnist_idx(dir / c.train_images, dir / c.train_labels);
      d.train = subsample(pool, static_cast<std::size_t>(c.subset_size), seeds.data);
      auto test = load_mnist_idx(dir / c.test_images, dir / c.test_labels);
      if (c.test_size > 0 && c.test_size < test.size())
        test = subsample(test, static_cast<std::size_t>(c.test_size), derive_seed(seeds.data, 1));
      d.test = std::move(test);
      d.spectral = concat(d.train, d.test, "mnist train+test");
      d.spectral_role = DataRole::full;
      d.grid = mnist_grid(pca_direction(d.spectral.inputs), c.grid_points);
      break;
    }
  }
  return d;
}

inline std::vector<int> layer_widths(const ExperimentConfig& c, const ExperimentData& d) {
  std::vector<int> w;
  w.push_back(static_cast<int>(d.train.input_dim()));
  w.insert(w.end(), c.hidden_widths.begin(), c.hidden_widths.end());
  w.push_back(static_cast<int>(d.train.target_dim()));
  return w;
}

namespace detail {

inline double metric_value(MetricKind m, const Matrix& out, const Matrix& target) {
  switch (m) {
    case MetricKind::none: return std::numeric_limits<double>::quiet_NaN();
    case MetricKind::sign_error: return sign_error(out, target);
    case MetricKind::accuracy: return accuracy(out, target);
  }
  return 0.0;
}

inline Spectrum spectrum_of(const Matrix& xs, const Matrix& ys, const FrequencyGrid& grid) {
  return nudft_vector(xs, ys, grid);
}

}  // namespace detail

/// One trial. Deterministic in (config, trial). Epoch 0 is the untrained
/// network; epoch t is the state after t passes over the training set.
inline TrainingLog train(const ExperimentConfig& c, int trial, const ExperimentData& data) {
  c.validate();
  const TrialSeeds seeds = trial_seeds(c, trial);
  TrainingLog log;
  log.family = c.family;
  log.metric = metric_for(c.family);
  log.trial = trial;
  log.seeds = seeds;

  Mlp mlp = init_mlp(layer_widths(c, data), c.activation, seeds.init, c.alpha);
  AdamState adam = AdamState::for_params(mlp.params, AdamHyper{c.beta1, c.beta2, c.adam_eps});
  Rng shuffle_rng(seeds.shuffle);

  const auto& train_x = data.train.inputs;
  const auto& train_y = data.train.targets;
  const Eigen::Index n_train = train_x.rows();
  const bool full_batch = c.batch_size == 0 || c.batch_size >= n_train;

  const Spectrum train_target = detail::spectrum_of(train_x, train_y, data.grid);
  const Spectrum spectral_target = detail::spectrum_of(data.spectral.inputs, data.spectral.targets, data.grid);
  std::size_t next_snapshot = 0;

  auto apply = [&](const Gradients& g) {
    if (c.optimizer == OptimizerKind::adam)
      adam_step(adam, mlp.params, g, c.lr);
    else
      sgd_step(mlp.params, g, c.lr);
  };

  auto evaluate = [&](long epoch, const Matrix* train_out) -> bool {
    Matrix own;
    if (!train_out) {
      own = forward(mlp, train_x);
      train_out = &own;
    }
    const Matrix test_out = forward(mlp, data.test.inputs);
    LogRow row;
    row.epoch = epoch;
    row.train_loss = mse_loss(*train_out, train_y);
    row.test_loss = mse_loss(test_out, data.test.targets);
    row.train_metric = detail::metric_value(log.metric, *train_out, train_y);
    row.test_metric = detail::metric_value(log.metric, test_out, data.test.targets);
    if (!std::isfinite(row.train_loss) || !std::isfinite(row.test_loss)) {
      log.aborted = true;
      const long last_good = log.rows.empty() ? -1 : log.rows.back().epoch;
      log.abort_reason = "non-finite loss at epoch " + std::to_string(epoch) + "; last good epoch " +
                         std::to_string(last_good);
      return false;
    }
    log.rows.push_back(row);
    if (next_snapshot < c.snapshot_epochs.size() && c.snapshot_epochs[next_snapshot] == epoch) {
      log.spectra.add({epoch, DataRole::train, train_target, detail::spectrum_of(train_x, *train_out, data.grid)});
      const Matrix spectral_out =
          data.spectral_role == DataRole::test ? test_out : forward(mlp, data.spectral.inputs);
      log.spectra.add(
          {epoch, data.spectral_role, spectral_target, detail::spectrum_of(data.spectral.inputs, spectral_out, data.grid)});
      ++next_snapshot;
    }
    return true;
  };

  auto wants_eval = [&](long epoch) {
    return epoch % c.eval_every == 0 || epoch == c.epochs ||
           (next_snapshot < c.snapshot_epochs.size() && c.snapshot_epochs[next_snapshot] == epoch);
  };

  try {
    if (full_batch) {
      // The forward pass at epoch t serves both the epoch-t log entry and the
      // gradient for update t+1.
      for (long epoch = 0;; ++epoch) {
        const ForwardCache cache = forward_cached(mlp, train_x);
        if (wants_eval(epoch) && !evaluate(epoch, &cache.output())) break;
        if (epoch == c.epochs) break;
        apply(backward(mlp, cache, train_y));
      }
    } else {
      if (!evaluate(0, nullptr)) return log;
      std::vector<std::size_t> order(static_cast<std::size_t>(n_train));
      std::iota(order.begin(), order.end(), std::size_t{0});
      Matrix bx, by;
      for (long epoch = 1; epoch <= c.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (Eigen::Index start = 0; start < n_train; start += c.batch_size) {
          const Eigen::Index len = std::min<Eigen::Index>(c.batch_size, n_train - start);
          bx.resize(len, train_x.cols());
          by.resize(len, train_y.cols());
          for (Eigen::Index i = 0; i < len; ++i) {
            const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]);
            bx.row(i) = train_x.row(src);
            by.row(i) = train_y.row(src);
          }
          const ForwardCache cache = forward_cached(mlp, bx);
          apply(backward(mlp, cache, by));
        }
        if (wants_eval(epoch) && !evaluate(epoch, nullptr)) break;
      }
    }
  } catch (const NumericalError& e) {
    log.aborted = true;
    const long last_good = log.rows.empty() ? -1 : log.rows.back().epoch;
    log.abort_reason = std::string(e.what()) + "; last good epoch " + std::to_string(last_good);
  }
  return log;
}

inline TrainingLog train(const ExperimentConfig& c, int trial) {
  return train(c, trial, build_data(c, trial_seeds(c, trial)));
}

/// Runs every trial; up to `threads` trials execute concurrently. Results are
/// ordered by trial index and do not depend on the thread count.
inline std::vector<TrainingLog> run_trials(const ExperimentConfig& c, unsigned threads = 1) {
  c.validate();
  std::vector<TrainingLog> logs(static_cast<std::size_t>(c.trials));
  threads = std::max(1u, threads);
  for (int first = 0; first < c.trials; first += static_cast<int>(threads)) {
    std::vector<std::future<TrainingLog>> batch;
    const int last = std::min(c.trials, first + static_cast<int>(threads));
    for (int t = first; t < last; ++t) batch.push_back(std::async(std::launch::async, [&c, t] { return train(c, t); }));
    for (int t = first; t < last; ++t) logs[static_cast<std::size_t>(t)] = batch[static_cast<std::size_t>(t - first)].get();
  }
  return logs;
}

// ---------------------------------------------------------------------------
// Analysis

struct GrokkingThresholds {
  double train_loss = 1e-3;
  double test_loss = 1e-2;
  double train_accuracy = 0.99;
  double test_accuracy = 0.80;

  static GrokkingThresholds from(const ExperimentConfig& c) {
    return {c.eps_train, c.test_loss_threshold, c.train_accuracy_threshold, c.test_accuracy_threshold};
  }
};

struct GrokkingReport {
  std::optional<long> memorization_epoch;
  std::optional<long> generalization_epoch;
  std::optional<long> gap;
  long peak_test_loss_epoch = 0;
  double peak_test_loss = 0.0;
  double initial_test_loss = 0.0;
};

/// Memorization: first epoch meeting the train-side threshold. Generalization:
/// first epoch meeting the test-side threshold. Thresholds depend on the
/// log's metric: losses for regression, zero sign error for parity, accuracy
/// for mnist. Unmet thresholds leave the field empty.
inline GrokkingReport detect_grokking(const TrainingLog& log, const GrokkingThresholds& th) {
  if (log.rows.empty()) throw DomainError("detect_grokking: empty log");
  GrokkingReport r;
  r.initial_test_loss = log.rows.front().test_loss;
  r.peak_test_loss = log.rows.front().test_loss;
  r.peak_test_loss_epoch = log.rows.front().epoch;
  for (const auto& row : log.rows) {
    bool train_ok = false, test_ok = false;
    switch (log.metric) {
      case MetricKind::none:
        train_ok = row.train_loss < th.train_loss;
        test_ok = row.test_loss < th.test_loss;
        break;
      case MetricKind::sign_error:
        train_ok = row.train_metric == 0.0;
        test_ok = row.test_metric == 0.0;
        break;
      case MetricKind::accuracy:
        train_ok = row.train_metric >= th.train_accuracy;
        test_ok = row.test_metric >= th.test_accuracy;
        break;
    }
    if (train_ok && !r.memorization_epoch) r.memorization_epoch = row.epoch;
    if (test_ok && !r.generalization_epoch) r.generalization_epoch = row.epoch;
    if (row.test_loss > r.peak_test_loss) {
      r.peak_test_loss = row.test_loss;
      r.peak_test_loss_epoch = row.epoch;
    }
  }
  if (r.memorization_epoch && r.generalization_epoch) {
    // Test-side success before the train side counts as no gap.
    r.gap = std::max(0L, *r.generalization_epoch - *r.memorization_epoch);
  }
  return r;
}

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

struct AggregateLog {
  std::vector<long> epochs;
  SeriesStats train_loss, test_loss, train_metric, test_metric;
};

/// Per-epoch mean and population standard deviation across trials.
inline AggregateLog aggregate_trials(const std::vector<TrainingLog>& logs) {
  if (logs.empty()) throw DomainError("aggregate_trials: no logs");
  AggregateLog agg;
  agg.epochs = logs.front().epochs();
  for (const auto& l : logs)
    if (l.epochs() != agg.epochs) throw ShapeError("aggregate_trials: logs have different lengths or epochs");
  auto stats = [&](double LogRow::*field) {
    SeriesStats s;
    const std::size_t len = agg.epochs.size();
    s.mean.assign(len, 0.0);
    s.std.assign(len, 0.0);
    const auto count = static_cast<double>(logs.size());
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0.0;
      for (const auto& l : logs) sum += l.rows[i].*field;
      const double mean = sum / count;
      double var = 0.0;
      for (const auto& l : logs) {
        const double d = l.rows[i].*field - mean;
        var += d * d;
      }
      s.mean[i] = mean;
      s.std[i] = std::sqrt(var / count);
    }
    return s;
  };
  agg.train_loss = stats(&LogRow::train_loss);
  agg.test_loss = stats(&LogRow::test_loss);
  agg.train_metric = stats(&LogRow::train_metric);
  agg.test_metric = stats(&LogRow::test_metric);
  return agg;
}

/// A TrainingLog whose rows are the across-trial means, for feeding
/// mean curves to detect_grokking.
inline TrainingLog mean_log(const std::vector<TrainingLog>& logs) {
  const auto agg = aggregate_trials(logs);
  TrainingLog out;
  out.family = logs.front().family;
  out.metric = logs.front().metric;
  for (std::size_t i = 0; i < agg.epochs.size(); ++i)
    out.rows.push_back({agg.epochs[i], agg.train_loss.mean[i], agg.test_loss.mean[i], agg.train_metric.mean[i],
                        agg.test_metric.mean[i]});
  return out;
}

inline constexpr int kSmoothingWindow = 50;

/// Trailing moving average over `window` entries; the first entries average
/// over what exists. Every window is summed afresh, in index order.
inline std::vector<double> smooth(const std::vector<double>& xs, int window = kSmoothingWindow) {
  if (window < 1) throw DomainError("smooth: window must be >= 1");
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t begin = i + 1 >= w ? i + 1 - w : 0;
    double sum = 0.0;
    for (std::size_t j = begin; j <= i; ++j) sum += xs[j];
    out[i] = sum / static_cast<double>(i + 1 - begin);
  }
  return out;
}

/// First [begin, end] epoch-index interval of at least `min_length` steps on
/// which train strictly decreases while test strictly increases.
inline std::optional<std::pair<std::size_t, std::size_t>> grokking_signature(const std::vector<double>& train,
                                                                             const std::vector<double>& test,
                                                                             std::size_t min_length = 1) {
  if (train.size() != test.size()) throw ShapeError("grokking_signature: series lengths differ");
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 1; i < train.size(); ++i) {
    const bool step = train[i] < train[i - 1] && test[i] > test[i - 1];
    if (step && !open) {
      start = i - 1;
      open = true;
    }
    if (open && (!step || i + 1 == train.size())) {
      const std::size_t end = step ? i : i - 1;
      if (end - start >= min_length) return std::make_pair(start, end);
      open = false;
    }
  }
  return std::nullopt;
}

/// Mean of |F(k)| over grid points with k <= k_max.
inline double low_frequency_mean(const Spectrum& s, double k_max) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < s.grid.ks.size(); ++i) {
    if (s.grid.ks[i] <= k_max) {
      sum += std::abs(s.values[i]);
      ++count;
    }
  }
  if (count == 0) throw DomainError("low_frequency_mean: no grid points below k_max");
  return sum / count;
}

/// Index of the grid point closest to k (lowest index on ties).
inline std::size_t nearest_bin(const FrequencyGrid& grid, double k) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.ks.size(); ++i)
    if (std::abs(grid.ks[i] - k) < std::abs(grid.ks[best] - k)) best = i;
  return best;
}

}  // namespace groklens
