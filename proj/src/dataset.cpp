#include "braintf/dataset.hpp"

#include "braintf/graph.hpp"
#include "braintf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace braintf {

namespace {

// Planted-signal variance per spectral row at class 0 (class 1 scales it by
// 1 + snr). Large relative to the unit node noise so the class contrast is
// visible through the encoder stack, small enough that within-cluster
// correlations survive the extra node variance.
constexpr double kPlantedVariance = 80.0;
// Per-subject probability of flipping the sign of one shared planted value:
// subjects vary without washing out the planted contrast.
constexpr double kFlipProb = 0.05;
// Correlation-strength ladder: cluster 0 (the planted cluster) descends from
// kCorrHi to kCorrLo node by node, giving its Laplacian contrast eigenvalues
// distinct values; the remaining clusters descend from kCorrOtherHi to
// kCorrOtherLo so exactly one cluster is weakest and loses the edge-quota
// tie-break in every subject.
constexpr double kCorrHi = 0.97;
constexpr double kCorrLo = 0.93;
constexpr double kCorrOtherHi = 0.76;
constexpr double kCorrOtherMid = 0.74;
constexpr double kCorrWeakest = 0.63;

// Cluster assignment used by the synthetic generator: cluster 0 holds one
// node more than the high band has rows, so its contrast directions are
// exactly the high band; the rest of the nodes spread near-evenly over the
// remaining clusters, one cluster per low-band (kernel) row.
std::vector<Index> synthetic_clusters(Index n) {
  const auto n_low = static_cast<Index>(std::ceil(0.2 * double(n)));
  const auto n_high = static_cast<Index>(std::ceil(0.2 * double(n)));
  const Index n_clusters = n_low;
  const Index first = std::min(n_high + 1, n - (n_clusters - 1));
  std::vector<Index> cluster_of(static_cast<std::size_t>(n));
  Index node = 0;
  for (; node < first; ++node) cluster_of[static_cast<std::size_t>(node)] = 0;
  const Index rest = n - first;
  for (Index c = 1; c < n_clusters; ++c) {
    const Index size = rest / (n_clusters - 1) +
                       (c - 1 < rest % (n_clusters - 1) ? 1 : 0);
    for (Index s = 0; s < size; ++s, ++node)
      cluster_of[static_cast<std::size_t>(node)] = c;
  }
  return cluster_of;
}

// Per-node correlation strengths c_i: within a cluster the generator realizes
// pairwise correlations c_a*c_b, so these values double as the base graph's
// edge weights.
Eigen::VectorXd synthetic_corr_strengths(const std::vector<Index>& cluster_of) {
  const Index n = static_cast<Index>(cluster_of.size());
  const Index n_clusters = cluster_of.back() + 1;
  std::vector<Index> size_of(static_cast<std::size_t>(n_clusters), 0);
  for (Index c : cluster_of) ++size_of[static_cast<std::size_t>(c)];
  Eigen::VectorXd strengths(n);
  std::vector<Index> pos(static_cast<std::size_t>(n_clusters), 0);
  for (Index i = 0; i < n; ++i) {
    const Index c = cluster_of[static_cast<std::size_t>(i)];
    const Index s = size_of[static_cast<std::size_t>(c)];
    const double frac = s > 1 ? double(pos[static_cast<std::size_t>(c)]) / double(s - 1) : 0.0;
    if (c == 0) {
      strengths[i] = kCorrHi - (kCorrHi - kCorrLo) * frac;
    } else if (c == n_clusters - 1) {
      strengths[i] = kCorrWeakest;
    } else {
      const double cfrac =
          n_clusters > 3 ? double(c - 1) / double(n_clusters - 3) : 0.0;
      strengths[i] = kCorrOtherHi - (kCorrOtherHi - kCorrOtherMid) * cfrac;
    }
    ++pos[static_cast<std::size_t>(c)];
  }
  return strengths;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix read_matrix_file(const std::filesystem::path& path, const std::string& id) {
  std::ifstream in(path);
  if (!in)
    throw data_error("cannot open matrix file for subject '" + id +
                     "': " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(f, &pos));
      } catch (const std::exception&) {
        throw data_error("subject '" + id + "': unparsable value '" + f +
                         "' in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw data_error("subject '" + id + "': ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw data_error("subject '" + id + "': empty matrix file " + path.string());
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void validate_record(const SubjectRecord& rec, Index n_rois, Index n_timepoints) {
  if (rec.series.rows() != n_rois || rec.series.cols() != n_timepoints)
    throw data_error("subject '" + rec.id + "': shape " +
                     std::to_string(rec.series.rows()) + "x" +
                     std::to_string(rec.series.cols()) +
                     " does not match dataset shape " + std::to_string(n_rois) +
                     "x" + std::to_string(n_timepoints));
  if (!rec.series.allFinite())
    throw data_error("subject '" + rec.id + "': non-finite value in series");
  if (rec.label != 0 && rec.label != 1)
    throw data_error("subject '" + rec.id + "': label " +
                     std::to_string(rec.label) + " outside {0,1}");
}

}  // namespace

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

std::vector<std::string> SplitPlan::fold_members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_of)
    if (f == fold) out.push_back(id);
  return out;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw data_error("cannot open manifest: " + manifest_path.string());

  std::string line;
  if (!std::getline(in, line)) throw data_error("empty manifest file");
  auto header = split_csv(line);
  if (header.size() != 2)
    throw data_error("manifest header must be 'n_rois,n_timepoints'");
  Dataset ds;
  ds.provenance = Dataset::Provenance::file;
  ds.n_rois = std::stol(header[0]);
  ds.n_timepoints = std::stol(header[1]);
  if (ds.n_rois < 3 || ds.n_timepoints < 4)
    throw data_error("dataset too small: need n_rois >= 3 and n_timepoints >= 4");

  const auto base = manifest_path.parent_path();
  std::vector<std::string> seen_ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 3 && fields.size() != 4)
      throw data_error("manifest row needs 'id,label,path[,site]': " + line);
    SubjectRecord rec;
    rec.id = fields[0];
    rec.label = std::stoi(fields[1]);
    rec.series = read_matrix_file(base / fields[2], rec.id);
    if (fields.size() == 4) rec.site = fields[3];
    validate_record(rec, ds.n_rois, ds.n_timepoints);
    if (std::find(seen_ids.begin(), seen_ids.end(), rec.id) != seen_ids.end())
      throw data_error("duplicate record ID: " + rec.id);
    seen_ids.push_back(rec.id);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw data_error("empty dataset: manifest lists no subjects");
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw data_error("cannot write manifest in " + dir.string());
  manifest << ds.n_rois << "," << ds.n_timepoints << "\n";
  for (const auto& rec : ds.records) {
    const std::string filename = rec.id + ".csv";
    manifest << rec.id << "," << rec.label << "," << filename;
    if (!rec.site.empty()) manifest << "," << rec.site;
    manifest << "\n";
    std::ofstream mat(dir / filename);
    if (!mat) throw data_error("cannot write matrix file " + filename);
    for (Index i = 0; i < rec.series.rows(); ++i) {
      for (Index j = 0; j < rec.series.cols(); ++j) {
        if (j) mat << ",";
        mat << format_double(rec.series(i, j));
      }
      mat << "\n";
    }
  }
}

Matrix synthetic_base_adjacency(int n_rois, std::uint64_t seed) {
  // Deterministic weighted cluster graph; the seed only varies the subjects
  // drawn on top of it. Within a cluster, the edge weight between nodes a and
  // b is c_a*c_b — the correlation the generator realizes between their
  // series — so each subject's thresholded PCC graph reproduces this
  // adjacency. The per-node strength spread separates the Laplacian contrast
  // eigenvalues inside each cluster, keeping the eigenbasis stable under
  // correlation noise.
  (void)seed;
  const Index n = n_rois;
  const std::vector<Index> cluster_of = synthetic_clusters(n);
  const Eigen::VectorXd strengths = synthetic_corr_strengths(cluster_of);
  Matrix adj = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && cluster_of[static_cast<std::size_t>(i)] ==
                        cluster_of[static_cast<std::size_t>(j)])
        adj(i, j) = strengths[i] * strengths[j];
  return adj;
}

Dataset generate_synthetic(int n_subjects, int n_rois, int n_timepoints,
                           Band band, double snr, std::uint64_t seed) {
  if (n_subjects < 4 || n_subjects % 2 != 0)
    throw data_error("generate_synthetic: n_subjects must be even and >= 4");
  if (n_rois < 8) throw data_error("generate_synthetic: n_rois must be >= 8");
  if (n_timepoints < n_rois)
    throw data_error("generate_synthetic: n_timepoints must be >= n_rois");
  if (!(snr > 0.0)) throw data_error("generate_synthetic: snr must be > 0");

  BrainGraph base;
  base.adjacency = synthetic_base_adjacency(n_rois, seed);
  base.n_nodes = n_rois;
  const SpectralBasis basis = eigendecompose(laplacian(base));
  const FilterBank bank = build_filter_bank(basis, 0.2, 0.2);
  const Eigen::ArrayXd& mask = bank.mask(band);
  const double boost = std::sqrt(1.0 + snr);
  const Index n = basis.eigenvalues.size();
  const double tol = 1e-9 * std::max(basis.eigenvalues.maxCoeff(), 1.0);
  const std::vector<Index> cluster_of = synthetic_clusters(n);
  const Eigen::VectorXd strengths = synthetic_corr_strengths(cluster_of);

  // Planted node variance at class 0: each masked spectral row carries
  // variance kPlantedVariance, spread over nodes by the squared eigenvector
  // entries.
  Eigen::VectorXd planted_var = Eigen::VectorXd::Zero(n);
  for (Index r = 0; r < n; ++r)
    if (mask[r] > 0.5)
      planted_var += kPlantedVariance *
                     basis.eigenvectors.col(r).array().square().matrix();

  // Smooth loadings: node i receives loading[i] times its cluster's shared
  // factor, so the correlation between within-cluster nodes a and b is
  // c_a*c_b once the planted and unit-noise variance is accounted for.
  Eigen::VectorXd loading(n);
  for (Index i = 0; i < n; ++i) {
    const double c2 = strengths[i] * strengths[i];
    loading[i] = std::sqrt(c2 * (planted_var[i] + 1.0) / (1.0 - c2));
  }
  // Project the loading vector orthogonal to the planted (non-kernel) rows:
  // otherwise the smooth component leaks energy into the planted band and
  // dilutes the class contrast there.
  for (Index r = 0; r < n; ++r)
    if (mask[r] > 0.5 && basis.eigenvalues[r] > tol)
      loading -= basis.eigenvectors.col(r).dot(loading) *
                 basis.eigenvectors.col(r);

  Dataset ds;
  ds.provenance = Dataset::Provenance::synthetic;
  ds.n_rois = n_rois;
  ds.n_timepoints = n_timepoints;
  ds.records.reserve(static_cast<std::size_t>(n_subjects));

  // Shared across subjects: one smooth factor per cluster (anchors the graph
  // estimate without adding between-subject variance) and one planted
  // pattern per masked spectral row (the class contrast scales it).
  std::mt19937_64 shared_rng(derive_seed(seed, "shared-smooth"));
  std::normal_distribution<double> shared_gauss(0.0, 1.0);
  const Index n_clusters = cluster_of[static_cast<std::size_t>(n - 1)] + 1;
  Matrix factors(n_clusters, n_timepoints);
  for (Index c = 0; c < factors.rows(); ++c)
    for (Index j = 0; j < factors.cols(); ++j)
      factors(c, j) = shared_gauss(shared_rng);
  const double planted_sd = std::sqrt(kPlantedVariance);
  Matrix shared = Matrix::Zero(n, n_timepoints);
  for (Index r = 0; r < n; ++r)
    if (mask[r] > 0.5)
      for (Index j = 0; j < n_timepoints; ++j)
        shared(r, j) = planted_sd * shared_gauss(shared_rng);

  for (int m = 0; m < n_subjects; ++m) {
    std::mt19937_64 rng(derive_seed(seed, "subject:" + std::to_string(m)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SubjectRecord rec;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "synth%04d", m);
    rec.id = idbuf;
    rec.label = m % 2;

    // Subjects reuse the shared planted patterns with sparse sign flips;
    // class 1 scales the planted rows so its band energy is (1 + snr) times
    // the class-0 energy.
    Matrix coeff = Matrix::Zero(n, n_timepoints);
    for (Index r = 0; r < n; ++r)
      if (mask[r] > 0.5)
        for (Index j = 0; j < n_timepoints; ++j)
          coeff(r, j) = (uniform(rng) < kFlipProb ? -1.0 : 1.0) * shared(r, j) *
                        (rec.label == 1 ? boost : 1.0);

    rec.series = basis.eigenvectors * coeff;
    for (Index i = 0; i < rec.series.rows(); ++i) {
      const Index c = cluster_of[static_cast<std::size_t>(i)];
      for (Index j = 0; j < rec.series.cols(); ++j)
        rec.series(i, j) += loading[i] * factors(c, j) + gauss(rng);
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

SplitPlan make_splits(const Dataset& ds, int fold_count, double label_fraction,
                      std::uint64_t seed) {
  if (fold_count < 2) throw data_error("make_splits: fold_count must be >= 2");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0))
    throw data_error("make_splits: label_fraction must be in (0, 1]");

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    by_class[ds.records[i].label].push_back(i);
  const std::size_t minority = std::min(by_class[0].size(), by_class[1].size());
  if (static_cast<std::size_t>(fold_count) > minority)
    throw data_error("make_splits: fold_count exceeds minority class count");

  SplitPlan plan;
  plan.fold_count = fold_count;
  plan.label_fraction = label_fraction;
  plan.seed = seed;

  // Stratified folds: shuffle within class, deal round-robin.
  std::mt19937_64 fold_rng(derive_seed(seed, "folds"));
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), fold_rng);
    for (std::size_t pos = 0; pos < members.size(); ++pos)
      plan.fold_of[ds.records[members[pos]].id] =
          static_cast<int>(pos % static_cast<std::size_t>(fold_count));
  }

  plan.labeled_for_fold.resize(static_cast<std::size_t>(fold_count));
  for (int f = 0; f < fold_count; ++f) {
    std::vector<std::string> train_by_class[2];
    for (const auto& rec : ds.records)
      if (plan.fold_of.at(rec.id) != f) train_by_class[rec.label].push_back(rec.id);
    const std::size_t train_size =
        train_by_class[0].size() + train_by_class[1].size();
    const auto quota = static_cast<std::size_t>(
        std::ceil(label_fraction * double(train_size)));

    // Largest-remainder stratified allocation of the quota across classes.
    std::size_t take[2];
    double ideal[2];
    for (int c = 0; c < 2; ++c) {
      ideal[c] = double(quota) * double(train_by_class[c].size()) / double(train_size);
      take[c] = static_cast<std::size_t>(std::floor(ideal[c]));
    }
    while (take[0] + take[1] < quota) {
      const int c = (ideal[0] - double(take[0]) >= ideal[1] - double(take[1])) ? 0 : 1;
      ++take[c];
    }
    for (int c = 0; c < 2; ++c)
      take[c] = std::min(take[c], train_by_class[c].size());

    std::mt19937_64 pick_rng(derive_seed(seed, "labeled:fold" + std::to_string(f)));
    auto& labeled = plan.labeled_for_fold[static_cast<std::size_t>(f)];
    for (int c = 0; c < 2; ++c) {
      std::shuffle(train_by_class[c].begin(), train_by_class[c].end(), pick_rng);
      labeled.insert(labeled.end(), train_by_class[c].begin(),
                     train_by_class[c].begin() + static_cast<long>(take[c]));
    }
    std::sort(labeled.begin(), labeled.end());
  }
  return plan;
}

}  // namespace braintf
