#pragma once

// Executes a configured experiment and writes its artifacts:
//
//   <out>/<family>/<UTC timestamp>-<config hash>/
//     config.json              resolved configuration
//     aggregate.csv            per-epoch mean/std over trials
//     report.json              grokking report on the mean curves and per trial
//     trial_NN/log.csv         epoch, losses, metrics
//     trial_NN/report.json
//     trial_NN/spectra/epoch_EEEEEE_<role>_<target|output>.csv
//     manifest.json            seeds, timestamps, file hashes

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "groklens/config.hpp"
#include "groklens/csv.hpp"
#include "groklens/experiments.hpp"
#include "groklens/manifest.hpp"

namespace groklens {

inline std::vector<std::string> log_columns(MetricKind metric) {
  std::vector<std::string> cols = {"epoch", "train_loss", "test_loss"};
  if (metric != MetricKind::none) {
    cols.push_back("train_" + std::string(to_string(metric)));
    cols.push_back("test_" + std::string(to_string(metric)));
  }
  return cols;
}

inline void write_log_csv(const std::filesystem::path& path, const TrainingLog& log) {
  CsvWriter w(path, log_columns(log.metric));
  for (const auto& r : log.rows) {
    if (log.metric == MetricKind::none)
      w.row(r.epoch, r.train_loss, r.test_loss);
    else
      w.row(r.epoch, r.train_loss, r.test_loss, r.train_metric, r.test_metric);
  }
  w.close();
}

/// Columns k, re, im, amplitude, channels. With channels > 1 the row holds
/// the Euclidean norm across channels in re and amplitude, and im is 0.
inline void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s) {
  CsvWriter w(path, {"k", "re", "im", "amplitude", "channels"});
  for (std::size_t i = 0; i < s.values.size(); ++i)
    w.row(s.grid.ks[i], s.values[i].real(), s.values[i].imag(), std::abs(s.values[i]), s.channels);
  w.close();
}

inline void write_aggregate_csv(const std::filesystem::path& path, const AggregateLog& agg, MetricKind metric) {
  std::vector<std::string> cols = {"epoch", "train_loss_mean", "train_loss_std", "test_loss_mean", "test_loss_std"};
  const std::string m(to_string(metric));
  if (metric != MetricKind::none) {
    for (const auto& c : {"train_" + m + "_mean", "train_" + m + "_std", "test_" + m + "_mean", "test_" + m + "_std"})
      cols.push_back(c);
  }
  CsvWriter w(path, cols);
  for (std::size_t i = 0; i < agg.epochs.size(); ++i) {
    std::vector<double> row = {static_cast<double>(agg.epochs[i]), agg.train_loss.mean[i], agg.train_loss.std[i],
                               agg.test_loss.mean[i], agg.test_loss.std[i]};
    if (metric != MetricKind::none) {
      row.insert(row.end(), {agg.train_metric.mean[i], agg.train_metric.std[i], agg.test_metric.mean[i],
                             agg.test_metric.std[i]});
    }
    w.row(row);
  }
  w.close();
}

inline Json report_to_json(const GrokkingReport& r) {
  Json j;
  if (r.memorization_epoch) j["memorization_epoch"] = *r.memorization_epoch;
  if (r.generalization_epoch) j["generalization_epoch"] = *r.generalization_epoch;
  if (r.gap) j["gap"] = *r.gap;
  j["initial_test_loss"] = r.initial_test_loss;
  j["peak_test_loss_epoch"] = r.peak_test_loss_epoch;
  j["peak_test_loss"] = r.peak_test_loss;
  return j;
}

inline std::string snapshot_name(long epoch, DataRole role, const char* which) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "epoch_%06ld_%s_%s.csv", epoch, std::string(to_string(role)).c_str(), which);
  return buf;
}

/// Writes one trial's log, report and spectra below `dir`.
inline void write_trial(const std::filesystem::path& dir, const TrainingLog& log, const GrokkingThresholds& th) {
  std::filesystem::create_directories(dir / "spectra");
  write_log_csv(dir / "log.csv", log);
  for (const auto& s : log.spectra.snapshots()) {
    write_spectrum_csv(dir / "spectra" / snapshot_name(s.epoch, s.role, "target"), s.target);
    write_spectrum_csv(dir / "spectra" / snapshot_name(s.epoch, s.role, "output"), s.output);
  }
  Json rep = log.rows.empty() ? Json::object() : report_to_json(detect_grokking(log, th));
  if (log.aborted) rep["aborted"] = log.abort_reason;
  std::ofstream(dir / "report.json") << rep.dump(2) << '\n';
}

struct RunOptions {
  std::filesystem::path out_root = "runs";
  unsigned threads = 1;
};

struct RunOutcome {
  std::filesystem::path dir;
  std::vector<TrainingLog> logs;
  bool aborted = false;
};

inline std::string trial_dir_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%02d", t);
  return buf;
}

/// Runs every trial and writes the artifact tree. Input data is loaded once
/// before anything is created, so a missing dataset leaves no partial output.
inline RunOutcome run_experiment(const ExperimentConfig& c, const RunOptions& opts = {}) {
  c.validate();
  (void)build_data(c, trial_seeds(c, 0));

  const auto started = std::chrono::system_clock::now();
  const std::string config_text = serialize_config(c);
  std::string stamp = utc_timestamp(started);
  std::erase(stamp, '-');
  std::erase(stamp, ':');
  auto dir = opts.out_root / std::string(to_string(c.family)) / (stamp + "-" + sha256_hex(config_text).substr(0, 8));
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix)
    dir = dir.parent_path() / (dir.filename().string() + "." + std::to_string(suffix));

  RunOutcome outcome;
  outcome.logs = run_trials(c, opts.threads);
  std::filesystem::create_directories(dir);
  outcome.dir = dir;
  std::ofstream(dir / "config.json") << config_text;

  const auto th = GrokkingThresholds::from(c);
  Json trials = Json::array();
  bool same_length = true;
  for (const auto& log : outcome.logs) {
    write_trial(dir / trial_dir_name(log.trial), log, th);
    outcome.aborted |= log.aborted;
    same_length &= log.epochs() == outcome.logs.front().epochs();
    Json t = log.rows.empty() ? Json::object() : report_to_json(detect_grokking(log, th));
    t["trial"] = log.trial;
    if (log.aborted) t["aborted"] = log.abort_reason;
    trials.push_back(t);
  }
  Json report;
  report["family"] = std::string(to_string(c.family));
  report["metric"] = std::string(to_string(metric_for(c.family)));
  if (same_length && !outcome.logs.front().rows.empty()) {
    write_aggregate_csv(dir / "aggregate.csv", aggregate_trials(outcome.logs), metric_for(c.family));
    report["mean_curve"] = report_to_json(detect_grokking(mean_log(outcome.logs), th));
  }
  report["trials"] = trials;
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';

  RunManifest m;
  m.config = c;
  for (int t = 0; t < c.trials; ++t) m.seeds.push_back(trial_seeds(c, t));
  m.started = utc_timestamp(started);
  m.finished = utc_timestamp();
  m.files = inventory(dir);
  write_manifest(dir, m);
  return outcome;
}

}  // namespace groklens
