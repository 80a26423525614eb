#include "braintf/eval.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace braintf {

namespace {

double population_std(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / double(xs.size()));
}

}  // namespace

MetricReport MetricReport::aggregate(std::vector<FoldMetrics> folds) {
  MetricReport report;
  report.per_fold = std::move(folds);
  if (report.per_fold.empty()) return report;
  std::vector<double> acc, auc, rec, f1;
  for (const auto& f : report.per_fold) {
    acc.push_back(f.accuracy);
    auc.push_back(f.auc);
    rec.push_back(f.recall);
    f1.push_back(f.f1);
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  };
  report.mean_accuracy = mean(acc);
  report.mean_auc = mean(auc);
  report.mean_recall = mean(rec);
  report.mean_f1 = mean(f1);
  report.std_accuracy = population_std(acc, report.mean_accuracy);
  report.std_auc = population_std(auc, report.mean_auc);
  report.std_recall = population_std(rec, report.mean_recall);
  report.std_f1 = population_std(f1, report.mean_f1);
  return report;
}

FoldMetrics compute_metrics(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw data_error("compute_metrics: scores and labels must align");
  const auto n = scores.size();
  const auto n_pos = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw data_error("compute_metrics: AUC undefined with a single class");

  FoldMetrics m;

  // AUC via midranks (Mann-Whitney statistic).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = midrank;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    if (labels[t] == 1) rank_sum_pos += rank[t];
  m.auc = (rank_sum_pos - double(n_pos) * (double(n_pos) + 1.0) / 2.0) /
          (double(n_pos) * double(n_neg));

  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const int pred = scores[t] >= 0.5 ? 1 : 0;
    if (pred == labels[t]) ++correct;
    if (pred == 1 && labels[t] == 1) ++tp;
    if (pred == 1 && labels[t] == 0) ++fp;
    if (pred == 0 && labels[t] == 1) ++fn;
  }
  m.accuracy = double(correct) / double(n);
  m.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  const double precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  m.f1 = (precision + m.recall) > 0.0
             ? 2.0 * precision * m.recall / (precision + m.recall)
             : 0.0;
  return m;
}

AblationVariant ablation_from_string(std::string_view s) {
  const auto names = ablation_variant_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (s == names[i]) return static_cast<AblationVariant>(i);
  throw data_error("unknown ablation variant: " + std::string(s));
}

std::vector<std::string> ablation_variant_names() {
  return {"full",     "time_only",        "freq_only",
          "low_band", "mid_band",         "high_band",
          "loss_equal_coeff", "loss_cosine", "loss_cosine_decorr"};
}

std::string to_string(AblationVariant v) {
  return ablation_variant_names()[static_cast<std::size_t>(v)];
}

namespace {

struct DomainReps {
  std::vector<Representation> time, freq, fused;
};

DomainReps encode_all_domains(const Dataset& ds, const TgnnParams& tgnn,
                              const FgnnParams& fgnn, const PretrainOptions& opt) {
  DomainReps out;
  for (const auto& rec : ds.records) {
    const SubjectContext ctx = build_subject_context(rec, opt);
    Representation zt = tgnn_forward(ctx.graph, tgnn);
    const SpectralFeatures spec = gft(rec.series, ctx.basis);
    Representation zf = fgnn_forward(spec, ctx.bank, ctx.basis, fgnn,
                                     opt.retained, opt.k_features);
    out.fused.push_back(fuse(zt, zf));
    out.time.push_back(std::move(zt));
    out.freq.push_back(std::move(zf));
  }
  return out;
}

const std::vector<Representation>& pick_domain(const DomainReps& reps,
                                               DomainTag tag) {
  switch (tag) {
    case DomainTag::time:
      return reps.time;
    case DomainTag::frequency:
      return reps.freq;
    case DomainTag::fused:
      return reps.fused;
  }
  throw std::logic_error("unreachable domain tag");
}

struct SeedRun {
  TgnnParams tgnn;
  FgnnParams fgnn;
  TrainTrace trace;
  DomainReps reps;
};

SeedRun pretrain_for_seed(const Dataset& ds, const ProtocolConfig& config,
                          std::uint64_t seed) {
  PretrainResult pre = pretrain(ds, config.pretrain_epochs, config.pretrain, seed);
  SeedRun run;
  run.reps = encode_all_domains(ds, pre.tgnn, pre.fgnn, config.pretrain);
  run.tgnn = std::move(pre.tgnn);
  run.fgnn = std::move(pre.fgnn);
  run.trace = std::move(pre.trace);
  return run;
}

FoldMetrics evaluate_fold(const Dataset& ds, const SplitPlan& plan, int fold,
                          const std::vector<Representation>& reps,
                          const ProtocolConfig& config, std::uint64_t seed) {
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    index_of[ds.records[i].id] = i;

  std::vector<Representation> train_reps;
  std::vector<int> train_labels;
  for (const std::string& id : plan.labeled_for_fold[static_cast<std::size_t>(fold)]) {
    const std::size_t idx = index_of.at(id);
    train_reps.push_back(reps[idx]);
    train_labels.push_back(ds.records[idx].label);
  }

  const ClassifierHead head = finetune(
      train_reps, train_labels, config.finetune_epochs,
      derive_seed(seed, "finetune:" + std::to_string(fold)), config.finetune);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& rec : ds.records) {
    if (plan.fold_of.at(rec.id) != fold) continue;
    scores.push_back(head_score(head, pool_representation(reps[index_of.at(rec.id)])));
    labels.push_back(rec.label);
  }
  FoldMetrics m = compute_metrics(scores, labels);
  m.fold = fold;
  m.seed = seed;
  return m;
}

Dataset without_fold(const Dataset& ds, const SplitPlan& plan, int fold) {
  Dataset out;
  out.n_rois = ds.n_rois;
  out.n_timepoints = ds.n_timepoints;
  out.provenance = ds.provenance;
  for (const auto& rec : ds.records)
    if (plan.fold_of.at(rec.id) != fold) out.records.push_back(rec);
  return out;
}

MetricReport run_protocol_domain(const Dataset& ds, const ProtocolConfig& config,
                                 const std::vector<std::uint64_t>& seeds,
                                 DomainTag domain,
                                 RunArtifacts* artifacts = nullptr) {
  std::vector<FoldMetrics> folds;
  for (std::uint64_t seed : seeds) {
    const SplitPlan plan =
        make_splits(ds, config.fold_count, config.label_fraction, seed);
    if (config.strict_pretrain) {
      for (int f = 0; f < config.fold_count; ++f) {
        const Dataset train_ds = without_fold(ds, plan, f);
        PretrainResult pre =
            pretrain(train_ds, config.pretrain_epochs, config.pretrain, seed);
        const DomainReps reps =
            encode_all_domains(ds, pre.tgnn, pre.fgnn, config.pretrain);
        folds.push_back(evaluate_fold(ds, plan, f, pick_domain(reps, domain),
                                      config, seed));
        if (artifacts) {
          artifacts->seeds.push_back(seed);
          artifacts->traces.push_back(pre.trace);
          artifacts->encoders.emplace_back(pre.tgnn, pre.fgnn);
        }
      }
    } else {
      const SeedRun run = pretrain_for_seed(ds, config, seed);
      for (int f = 0; f < config.fold_count; ++f)
        folds.push_back(evaluate_fold(ds, plan, f, pick_domain(run.reps, domain),
                                      config, seed));
      if (artifacts) {
        artifacts->seeds.push_back(seed);
        artifacts->traces.push_back(run.trace);
        artifacts->encoders.emplace_back(run.tgnn, run.fgnn);
      }
    }
  }
  return MetricReport::aggregate(std::move(folds));
}

}  // namespace

MetricReport run_protocol(const Dataset& ds, const ProtocolConfig& config,
                          const std::vector<std::uint64_t>& seeds,
                          RunArtifacts* artifacts) {
  return run_protocol_domain(ds, config, seeds, DomainTag::fused, artifacts);
}

MetricReport run_ablation(const Dataset& ds, AblationVariant variant,
                          const ProtocolConfig& config,
                          const std::vector<std::uint64_t>& seeds) {
  ProtocolConfig cfg = config;
  DomainTag domain = DomainTag::fused;
  switch (variant) {
    case AblationVariant::full:
      break;
    case AblationVariant::time_only:
      cfg.pretrain.train_fgnn = false;
      domain = DomainTag::time;
      break;
    case AblationVariant::freq_only:
      cfg.pretrain.train_tgnn = false;
      domain = DomainTag::frequency;
      break;
    case AblationVariant::low_band:
      cfg.pretrain.train_tgnn = false;
      cfg.pretrain.retained = {Band::low};
      domain = DomainTag::frequency;
      break;
    case AblationVariant::mid_band:
      cfg.pretrain.train_tgnn = false;
      cfg.pretrain.retained = {Band::mid};
      domain = DomainTag::frequency;
      break;
    case AblationVariant::high_band:
      cfg.pretrain.train_tgnn = false;
      cfg.pretrain.retained = {Band::high};
      domain = DomainTag::frequency;
      break;
    case AblationVariant::loss_equal_coeff:
      cfg.pretrain.variant = LossVariant::equal_coeff;
      break;
    case AblationVariant::loss_cosine:
      cfg.pretrain.variant = LossVariant::cosine;
      break;
    case AblationVariant::loss_cosine_decorr:
      cfg.pretrain.variant = LossVariant::cosine_decorr;
      break;
  }
  return run_protocol_domain(ds, cfg, seeds, domain);
}

std::vector<std::pair<double, MetricReport>> label_fraction_sweep(
    const Dataset& ds, const std::vector<double>& fractions,
    const ProtocolConfig& config, const std::vector<std::uint64_t>& seeds) {
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw data_error("label_fraction_sweep: fractions must be in (0, 1]");

  // Pretraining is label-free, so one run per seed serves every fraction.
  std::map<std::uint64_t, SeedRun> runs;
  for (std::uint64_t seed : seeds) runs.emplace(seed, pretrain_for_seed(ds, config, seed));

  std::vector<std::pair<double, MetricReport>> table;
  for (double fraction : fractions) {
    std::vector<FoldMetrics> folds;
    for (std::uint64_t seed : seeds) {
      const SplitPlan plan = make_splits(ds, config.fold_count, fraction, seed);
      for (int f = 0; f < config.fold_count; ++f)
        folds.push_back(evaluate_fold(ds, plan, f, runs.at(seed).reps.fused,
                                      config, seed));
    }
    table.emplace_back(fraction, MetricReport::aggregate(std::move(folds)));
  }
  return table;
}

ScalingReport scaling_probe(const std::vector<Index>& n_values, Index k,
                            int trials) {
  if (k < 2) throw data_error("scaling_probe: k must be >= 2");
  if (trials < 1) throw data_error("scaling_probe: trials must be >= 1");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1])
      throw data_error("scaling_probe: n_values must be ascending");

  ScalingReport report;
  std::mt19937_64 rng(derive_seed(12345, "scaling-probe"));
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (Index n : n_values) {
    // Synthetic basis: random orthonormal vectors with an ascending ramp of
    // eigenvalues. Setup cost is excluded from the timings, matching the
    // per-subject one-time eigendecomposition.
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) g(i, j) = gauss(rng);
    SpectralBasis basis;
    basis.eigenvectors = Eigen::HouseholderQR<Matrix>(g).householderQ();
    basis.eigenvalues = Vector::LinSpaced(n, 0.0, double(n - 1));
    basis.column_sum = basis.eigenvectors.rowwise().sum();
    basis.id = 0;

    const Index n_low = (k + 1) / 2;
    const Index n_high = k / 2;
    const FilterBank bank = build_filter_bank(basis, double(n_low) / double(n),
                                              double(n_high) / double(n));

    SpectralFeatures spec;
    spec.coefficients.resize(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < k; ++j) spec.coefficients(i, j) = gauss(rng);

    auto [tgnn, fgnn] = init_params(n, k, k, 99, 2, 3);
    // Nonzero biases so the masked-row shortcut is exercised, not trivial.
    for (auto& b : fgnn.biases) b.setConstant(0.01);

    volatile double sink = 0.0;
    (void)fgnn_forward(spec, bank, basis, fgnn, {Band::low, Band::high}, k);  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int t = 0; t < trials; ++t) {
      const Representation rep =
          fgnn_forward(spec, bank, basis, fgnn, {Band::low, Band::high}, k);
      sink = sink + rep.z(0, 0);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs =
        std::max(std::chrono::duration<double>(t1 - t0).count() / trials, 1e-12);
    report.points.push_back({n, secs});
  }

  if (report.points.size() < 2) {
    report.loglog_slope = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = double(report.points.size());
  for (const auto& p : report.points) {
    const double x = std::log(double(p.n));
    const double y = std::log(p.mean_seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  report.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return report;
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write report: " + path.string());
  out << "seed,fold,accuracy,auc,recall,f1\n";
  for (const auto& f : report.per_fold)
    out << f.seed << "," << f.fold << "," << f.accuracy << "," << f.auc << ","
        << f.recall << "," << f.f1 << "\n";
}

void write_report_json(const MetricReport& report, const std::string& config_snapshot,
                       std::uint64_t input_hash, const std::filesystem::path& path) {
  nlohmann::json j;
  j["mean"] = {{"accuracy", report.mean_accuracy},
               {"auc", report.mean_auc},
               {"recall", report.mean_recall},
               {"f1", report.mean_f1}};
  j["std"] = {{"accuracy", report.std_accuracy},
              {"auc", report.std_auc},
              {"recall", report.std_recall},
              {"f1", report.std_f1}};
  j["fold_count"] = report.per_fold.size();
  j["config"] = config_snapshot;
  j["input_hash"] = input_hash;
  std::ofstream out(path);
  if (!out) throw data_error("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

std::uint64_t dataset_content_hash(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix_bytes = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& rec : ds.records) {
    mix_bytes(rec.id.data(), rec.id.size());
    mix_bytes(&rec.label, sizeof(rec.label));
    mix_bytes(rec.series.data(),
              sizeof(double) * static_cast<std::size_t>(rec.series.size()));
  }
  return h;
}

}  // namespace braintf
