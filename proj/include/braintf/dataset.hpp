#pragma once

#include "braintf/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace braintf {

/// One subject: an N x D time-series matrix, a binary label and an ID.
struct SubjectRecord {
  std::string id;
  Matrix series;  // rows = ROIs, columns = time points
  int label = 0;  // in {0, 1}
  std::string site;
};

struct Dataset {
  enum class Provenance { synthetic, file };

  std::vector<SubjectRecord> records;
  Index n_rois = 0;
  Index n_timepoints = 0;
  Provenance provenance = Provenance::file;

  Index size() const { return static_cast<Index>(records.size()); }
  std::vector<int> labels() const;
};

/// Deterministic stratified k-fold plan. For each held-out fold f,
/// `labeled_for_fold[f]` lists the training records flagged as labeled for
/// fine-tuning (ceil(label_fraction * training size), stratified).
struct SplitPlan {
  int fold_count = 0;
  double label_fraction = 1.0;
  std::uint64_t seed = 0;
  std::map<std::string, int> fold_of;  // record ID -> fold index
  std::vector<std::vector<std::string>> labeled_for_fold;

  std::vector<std::string> fold_members(int fold) const;
};

/// Loads a dataset from a manifest. Format: one header line
/// `n_rois,n_timepoints`, then one line `id,label,relative_path[,site]` per
/// subject. Matrix files are comma-separated text, one ROI per row.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes `manifest.csv` plus one matrix file per subject into `dir`
/// (created if absent). Round-trips exactly through load_dataset.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Synthesizes a balanced labeled dataset on a shared weighted cluster graph.
/// Class-1 subjects carry (1+snr)-boosted spectral energy in `band` of the
/// base graph's Laplacian eigenbasis; unit Gaussian sensor noise is added.
/// Pure function of its arguments.
Dataset generate_synthetic(int n_subjects, int n_rois, int n_timepoints,
                           Band band, double snr, std::uint64_t seed);

/// Base graph used by generate_synthetic for the same (n_rois, seed); exposed
/// so tests can measure planted band energy with an independent basis.
Matrix synthetic_base_adjacency(int n_rois, std::uint64_t seed);

SplitPlan make_splits(const Dataset& ds, int fold_count, double label_fraction,
                      std::uint64_t seed);

}  // namespace braintf
