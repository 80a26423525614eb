#pragma once

#include "braintf/eval.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace braintf {

/// Run configuration parsed from a flat `section.key=value` text file.
/// Unknown keys are rejected. Defaults follow the reference setup: two GCN
/// layers, three FGO layers, gamma=1e-5, beta=1e-4, lr=1e-5, 20% eigenvalue
/// quotas, 200 pretraining iterations, 20% labels, 5 folds.
struct RunConfig {
  // Dataset source: a manifest path, or a synthetic spec when manifest empty.
  std::string manifest;
  int synth_subjects = 40;
  int synth_rois = 16;
  int synth_timepoints = 64;
  Band synth_band = Band::high;
  double synth_snr = 2.0;

  Index k_features = -1;  // default: n_timepoints
  Index gcn_layers = 2;
  Index fgo_layers = 3;
  double p_low = 0.2;
  double p_high = 0.2;
  double graph_density = 0.2;
  std::string bands = "low_high";  // low_high | all | low | mid | high

  double gamma = 1e-5;
  double beta = 1e-4;
  std::string loss_variant = "cca";

  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double head_learning_rate = 0.05;

  int fold_count = 5;
  int seed_count = 5;
  int pretrain_epochs = 200;
  int finetune_epochs = 200;
  double label_fraction = 0.2;
  bool strict_pretrain = false;

  std::uint64_t seed = 7;
  int workers = 1;  // reserved; 1 keeps runs bit-reproducible

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_string(const std::string& text);

  /// All keys materialized, suitable for --dry-run and run snapshots.
  std::string to_string() const;

  Dataset load_or_generate() const;
  ProtocolConfig protocol() const;
  std::vector<std::uint64_t> seeds() const;
  std::set<Band> retained_bands() const;
};

}  // namespace braintf
