#pragma once

#include "braintf/training.hpp"

namespace braintf {

/// Accuracy/AUC/recall/F1 for one fold.
struct FoldMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int fold = 0;
  std::uint64_t seed = 0;
};

/// Aggregation over fold x seed runs. Std is the population standard
/// deviation over all fold-level values.
struct MetricReport {
  std::vector<FoldMetrics> per_fold;
  double mean_accuracy = 0.0, std_accuracy = 0.0;
  double mean_auc = 0.0, std_auc = 0.0;
  double mean_recall = 0.0, std_recall = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;

  static MetricReport aggregate(std::vector<FoldMetrics> folds);
};

/// Metrics for one fold from class-1 probabilities. Accuracy thresholds at
/// 0.5; AUC uses midranks (Mann-Whitney); recall/F1 are for class 1.
FoldMetrics compute_metrics(const std::vector<double>& scores,
                            const std::vector<int>& labels);

enum class AblationVariant {
  full,
  time_only,
  freq_only,
  low_band,
  mid_band,
  high_band,
  loss_equal_coeff,
  loss_cosine,
  loss_cosine_decorr,
};

AblationVariant ablation_from_string(std::string_view s);
std::string to_string(AblationVariant v);
std::vector<std::string> ablation_variant_names();

struct ProtocolConfig {
  PretrainOptions pretrain;
  FinetuneOptions finetune;
  int fold_count = 5;
  int pretrain_epochs = 200;
  int finetune_epochs = 200;
  double label_fraction = 0.2;
  bool strict_pretrain = false;  // exclude the test fold from pretraining
};

/// Pretraining byproducts of a protocol run, for checkpointing and traces.
struct RunArtifacts {
  std::vector<std::uint64_t> seeds;
  std::vector<TrainTrace> traces;
  std::vector<std::pair<TgnnParams, FgnnParams>> encoders;
};

/// Per seed: label-free pretraining, per-fold fine-tuning on the labeled
/// fraction, evaluation on the held-out fold. Deterministic in (ds, seeds).
MetricReport run_protocol(const Dataset& ds, const ProtocolConfig& config,
                          const std::vector<std::uint64_t>& seeds,
                          RunArtifacts* artifacts = nullptr);

/// Applies one variant's overrides on top of `config` and runs the protocol.
MetricReport run_ablation(const Dataset& ds, AblationVariant variant,
                          const ProtocolConfig& config,
                          const std::vector<std::uint64_t>& seeds);

/// Reuses one pretraining per seed across all label fractions.
std::vector<std::pair<double, MetricReport>> label_fraction_sweep(
    const Dataset& ds, const std::vector<double>& fractions,
    const ProtocolConfig& config, const std::vector<std::uint64_t>& seeds);

struct ScalingPoint {
  Index n = 0;
  double mean_seconds = 0.0;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  double loglog_slope = 0.0;  // NaN when fewer than 2 sizes were probed
};

/// Times the frequency encoder forward (graph setup and eigendecomposition
/// excluded) on random inputs with k retained spectral components and a
/// k-dimensional feature budget, then fits a log-log slope of time vs N.
ScalingReport scaling_probe(const std::vector<Index>& n_values, Index k,
                            int trials);

/// One row per fold x seed.
void write_report_csv(const MetricReport& report, const std::filesystem::path& path);

/// Means, stds, config snapshot and an FNV content hash of the inputs.
void write_report_json(const MetricReport& report, const std::string& config_snapshot,
                       std::uint64_t input_hash, const std::filesystem::path& path);

/// FNV-1a hash of a dataset's bytes, used to stamp reports.
std::uint64_t dataset_content_hash(const Dataset& ds);

}  // namespace braintf
