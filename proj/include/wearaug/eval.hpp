#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wearaug/augment.hpp"
#include "wearaug/cnn/adam.hpp"
#include "wearaug/cnn/model.hpp"
#include "wearaug/dataset.hpp"

namespace wearaug {

inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw InvalidArgument("accuracy: length mismatch");
  if (predictions.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// Median of the last `n` values (all of them when fewer are available).
inline double median_of_last(const std::vector<double>& values, std::size_t n = 10) {
  if (values.empty()) throw InvalidArgument("median_of_last: no values");
  std::vector<double> tail(values.end() - static_cast<std::ptrdiff_t>(std::min(n, values.size())), values.end());
  std::sort(tail.begin(), tail.end());
  const std::size_t m = tail.size();
  return m % 2 ? tail[m / 2] : 0.5 * (tail[m / 2 - 1] + tail[m / 2]);
}

struct FoldSplit {
  std::vector<std::vector<std::string>> folds;
};

/// Shuffles the subjects with `rng` and deals them round-robin into k folds.
inline FoldSplit split_subjectwise(const LabeledDataset& d, std::size_t k, RngStream& rng) {
  std::vector<std::string> subjects = d.subjects();
  std::sort(subjects.begin(), subjects.end());
  if (k < 2 || k > subjects.size()) {
    throw InvalidArgument("split: k = " + std::to_string(k) + " must be in [2, " + std::to_string(subjects.size()) + "]");
  }
  shuffle(subjects, rng);
  FoldSplit split{std::vector<std::vector<std::string>>(k)};
  for (std::size_t i = 0; i < subjects.size(); ++i) split.folds[i % k].push_back(subjects[i]);
  return split;
}

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t width_divisor = 1;
  cnn::AdamConfig adam;
  cnn::BatchNormSettings batchnorm;
  AugmentConfig augment;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // train-mode predictions on the augmented batches
  double test_acc = 0.0;   // eval mode, never augmented
};

struct FoldSeeds {
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t augment = 0;
};

struct FoldResult {
  std::vector<EpochMetrics> epochs;
  double final_train = 0.0;  // median of the last 10 train accuracies
  double final_test = 0.0;   // median of the last 10 test accuracies
  cnn::ModelParams params;
};

inline std::vector<int> predict(const cnn::Cnn& model, const LabeledDataset& d, std::size_t batch_size = 64) {
  std::vector<int> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); i += batch_size) {
    std::vector<const Window*> ws;
    for (std::size_t j = i; j < std::min(d.size(), i + batch_size); ++j) ws.push_back(&d.records[j].window);
    const Tensor logits = model.predict_logits(cnn::make_batch(ws));
    for (std::size_t n = 0; n < ws.size(); ++n) out.push_back(logits[n * 2 + 1] > logits[n * 2] ? 1 : 0);
  }
  return out;
}

inline std::vector<int> labels_of(const LabeledDataset& d) {
  std::vector<int> y;
  for (const auto& r : d.records) y.push_back(r.label);
  return y;
}

/// Trains a fresh model on `train` for cfg.epochs epochs and scores it on
/// `test` after every epoch. Training windows are re-augmented every epoch
/// with stream derive_stream(seeds.augment, ordinal + epoch * N); test
/// windows are never augmented. Mini-batches of one sample are dropped
/// (batch norm needs two).
inline FoldResult run_fold(const LabeledDataset& train, const LabeledDataset& test, const AugmentPipeline& pipeline,
                           const TrainConfig& cfg, const FoldSeeds& seeds) {
  {
    const auto a = train.subjects();
    const auto b = test.subjects();
    const std::set<std::string> sa(a.begin(), a.end());
    for (const auto& s : b) {
      if (sa.count(s)) throw InvalidArgument("run_fold: subject '" + s + "' is in both train and test");
    }
  }
  if (train.records.empty() || test.records.empty()) throw InvalidArgument("run_fold: empty train or test set");
  if (cfg.batch_size < 2) throw ConfigError("train: batch_size must be >= 2");

  const std::size_t n = train.size();
  const auto arch = cnn::Architecture::standard(train.records[0].window.length(), cfg.width_divisor);
  RngStream init_rng(seeds.init, 0);
  cnn::Cnn model = cnn::Cnn::initialize(arch, init_rng, cfg.batchnorm);
  cnn::AdamState adam;
  const std::vector<int> test_labels = labels_of(test);

  FoldResult result;
  std::vector<std::size_t> order(n);
  std::vector<Window> augmented;
  augmented.reserve(n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    augmented.clear();
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng = derive_stream(seeds.augment, i + epoch * n);
      augmented.push_back(pipeline.apply(train.records[i].window, rng));
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle_rng = derive_stream(seeds.shuffle, epoch);
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t seen = 0, hits = 0;
    for (std::size_t start = 0; start + 1 < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      if (end - start < 2) break;
      std::vector<const Window*> ws;
      std::vector<int> ys;
      for (std::size_t j = start; j < end; ++j) {
        ws.push_back(&augmented[order[j]]);
        ys.push_back(train.records[order[j]].label);
      }
      cnn::ForwardCache cache;
      const Tensor logits = model.forward(cnn::make_batch(ws), cnn::Mode::Train, &cache);
      const cnn::SoftmaxXent sx = cnn::softmax_xent(logits, ys);
      cnn::ModelParams grads = model.backward(cache, sx.dlogits);
      std::vector<Tensor*> ps;
      std::vector<const Tensor*> gs;
      for (auto& [name, t] : model.params().learnable()) ps.push_back(t);
      for (auto& [name, t] : grads.learnable()) gs.push_back(t);
      cnn::adam_step(ps, gs, adam, cfg.adam);

      loss_sum += sx.loss * static_cast<double>(ys.size());
      for (std::size_t b = 0; b < ys.size(); ++b) hits += (logits[b * 2 + 1] > logits[b * 2] ? 1 : 0) == ys[b];
      seen += ys.size();
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    m.train_acc = seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
    m.test_acc = accuracy(predict(model, test), test_labels);
    result.epochs.push_back(m);
  }
  std::vector<double> tr, te;
  for (const auto& m : result.epochs) {
    tr.push_back(m.train_acc);
    te.push_back(m.test_acc);
  }
  if (!te.empty()) {
    result.final_train = median_of_last(tr);
    result.final_test = median_of_last(te);
  }
  result.params = model.params();
  return result;
}

struct PipelineResult {
  std::string name;
  std::vector<FoldResult> folds;
  double mean_train = 0.0;
  double mean_test = 0.0;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  TrainConfig config;
  std::string provenance;
  FoldSplit split;
  std::vector<PipelineResult> pipelines;
};

/// Mean over folds of each fold's final (median-of-last-10) metric.
inline void aggregate(PipelineResult& p) {
  if (p.folds.empty()) return;
  double tr = 0.0, te = 0.0;
  for (const auto& f : p.folds) {
    tr += f.final_train;
    te += f.final_test;
  }
  p.mean_train = tr / static_cast<double>(p.folds.size());
  p.mean_test = te / static_cast<double>(p.folds.size());
}

inline FoldSeeds fold_seeds(std::uint64_t seed, std::size_t fold) {
  return {mix_seed(seed, 100 + fold), mix_seed(seed, 200 + fold), mix_seed(seed, 300 + fold)};
}

/// Subject-wise k-fold CV of every pipeline. Fold assignments and per-fold
/// seeds depend only on `seed`, so pipelines are compared on identical
/// splits, initializations and batch orders.
inline ExperimentReport run_experiment(const LabeledDataset& d, const std::vector<AugmentPipeline>& pipelines,
                                       std::size_t k, std::uint64_t seed, const TrainConfig& cfg) {
  d.validate();
  ExperimentReport report;
  report.seed = seed;
  report.k = k;
  report.config = cfg;
  report.provenance = d.provenance;
  RngStream split_rng = derive_stream(mix_seed(seed, 1), 0);
  report.split = split_subjectwise(d, k, split_rng);
  for (const auto& p : pipelines) {
    PipelineResult pr;
    pr.name = p.name();
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::string> train_subjects;
      for (std::size_t g = 0; g < k; ++g) {
        if (g != f) train_subjects.insert(train_subjects.end(), report.split.folds[g].begin(), report.split.folds[g].end());
      }
      pr.folds.push_back(run_fold(d.restricted_to(train_subjects), d.restricted_to(report.split.folds[f]), p, cfg,
                                  fold_seeds(seed, f)));
    }
    aggregate(pr);
    report.pipelines.push_back(std::move(pr));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report rendering.

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string describe_config(const TrainConfig& c) {
  std::ostringstream os;
  os << "epochs=" << c.epochs << " batch_size=" << c.batch_size << " width_divisor=" << c.width_divisor
     << " lr=" << c.adam.lr << " beta1=" << c.adam.beta1 << " beta2=" << c.adam.beta2 << " adam_eps=" << c.adam.eps
     << " bn_momentum=" << c.batchnorm.momentum << " bn_eps=" << c.batchnorm.eps
     << " jitter_sigma_of_sigma=" << c.augment.jitter_sigma_of_sigma << " scale_mean=" << c.augment.scale_mean
     << " scale_std=" << c.augment.scale_std << " perm_seg_std=" << c.augment.perm_seg_std
     << " perm_max_segments=" << c.augment.perm_max_segments << " warp_amp=[" << c.augment.warp_amp_low << ","
     << c.augment.warp_amp_high << "] warp_freq=[" << c.augment.warp_freq_low << "," << c.augment.warp_freq_high
     << "] crop_fraction=" << c.augment.crop_fraction;
  return os.str();
}

/// Human-readable summary: header with seed and config, then a table with
/// rows Train/Test and one column per pipeline (percent), then per-fold
/// test metrics.
inline std::string render_table(const ExperimentReport& r) {
  std::ostringstream os;
  os << "# seed=" << r.seed << " folds=" << r.k << "\n";
  os << "# data: " << r.provenance << "\n";
  os << "# config: " << describe_config(r.config) << "\n";
  for (std::size_t f = 0; f < r.split.folds.size(); ++f) {
    os << "# fold " << f + 1 << ":";
    for (const auto& s : r.split.folds[f]) os << " " << s;
    os << "\n";
  }
  auto cell = [](const std::string& s) {
    std::string out = s;
    if (out.size() < 16) out.insert(0, 16 - out.size(), ' ');
    return out;
  };
  os << cell("");
  for (const auto& p : r.pipelines) os << cell(p.name);
  os << "\n" << cell("Train");
  for (const auto& p : r.pipelines) os << cell(format_fixed(100.0 * p.mean_train, 2));
  os << "\n" << cell("Test");
  for (const auto& p : r.pipelines) os << cell(format_fixed(100.0 * p.mean_test, 2));
  os << "\n";
  for (std::size_t f = 0; f < r.k; ++f) {
    os << cell("fold " + std::to_string(f + 1) + " test");
    for (const auto& p : r.pipelines) os << cell(format_fixed(100.0 * p.folds[f].final_test, 2));
    os << "\n";
  }
  return os.str();
}

/// Per-epoch curves: pipeline,fold,epoch,train_loss,train_acc,test_acc
inline std::string render_curves(const ExperimentReport& r) {
  std::ostringstream os;
  os << "pipeline,fold,epoch,train_loss,train_acc,test_acc\n";
  for (const auto& p : r.pipelines) {
    for (std::size_t f = 0; f < p.folds.size(); ++f) {
      for (const auto& m : p.folds[f].epochs) {
        os << p.name << "," << f + 1 << "," << m.epoch << "," << format_fixed(m.train_loss, 6) << ","
           << format_fixed(m.train_acc, 6) << "," << format_fixed(m.test_acc, 6) << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace wearaug
