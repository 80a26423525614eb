// Command-line driver: dataset synthesis, protocol runs, ablations,
// label-fraction sweeps, scaling probes and spectrum dumps.

#include "braintf/config.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace braintf;

namespace fs = std::filesystem;

// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (const char* root = std::getenv("BRAINTF_OUT_ROOT"); root && p.is_relative())
    p = fs::path(root) / p;
  return p;
}

// Runs write into a fresh directory; overwriting silently would destroy
// reproducibility records.
fs::path prepare_out_dir(const std::string& out) {
  const fs::path p = resolve_out(out);
  if (fs::exists(p) && !fs::is_empty(p))
    throw UsageError("output directory already exists and is not empty: " +
                     p.string());
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw data_error("cannot write " + path.string());
  f << text;
}

void write_checkpoints(const fs::path& dir, const RunArtifacts& artifacts) {
  for (std::size_t i = 0; i < artifacts.encoders.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "encoder_seed%llu_%zu.ckpt",
                  static_cast<unsigned long long>(artifacts.seeds[i]), i);
    save_checkpoint(dir / name, artifacts.encoders[i].first,
                    artifacts.encoders[i].second, artifacts.seeds[i]);
    std::snprintf(name, sizeof(name), "trace_seed%llu_%zu.csv",
                  static_cast<unsigned long long>(artifacts.seeds[i]), i);
    write_trace_csv(artifacts.traces[i], dir / name);
  }
}

int cmd_synth(const std::string& out, int subjects, int rois, int timepoints,
              const std::string& band, double snr, std::uint64_t seed) {
  const fs::path dir = prepare_out_dir(out);
  const Dataset ds = generate_synthetic(subjects, rois, timepoints,
                                        band_from_string(band), snr, seed);
  save_dataset(ds, dir);
  std::cout << "wrote " << ds.records.size() << " subjects to " << dir.string()
            << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out, bool dry_run) {
  const RunConfig cfg = config_path.empty() ? RunConfig{}
                                            : RunConfig::from_file(config_path);
  if (dry_run) {
    std::cout << cfg.to_string();
    return 0;
  }
  const fs::path dir = prepare_out_dir(out);
  write_text(dir / "config.snapshot", cfg.to_string());

  const Dataset ds = cfg.load_or_generate();
  RunArtifacts artifacts;
  const MetricReport report = run_protocol(ds, cfg.protocol(), cfg.seeds(),
                                           &artifacts);
  write_report_csv(report, dir / "metrics.csv");
  write_report_json(report, cfg.to_string(), dataset_content_hash(ds),
                    dir / "metrics.json");
  write_checkpoints(dir, artifacts);
  std::cout << "accuracy " << report.mean_accuracy << " +- "
            << report.std_accuracy << "  auc " << report.mean_auc << " +- "
            << report.std_auc << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out,
               const std::string& variants_arg) {
  std::vector<AblationVariant> variants;
  std::istringstream ss(variants_arg);
  std::string name;
  while (std::getline(ss, name, ',')) {
    try {
      variants.push_back(ablation_from_string(name));
    } catch (const data_error&) {
      std::string valid;
      for (const auto& v : ablation_variant_names()) valid += v + " ";
      throw UsageError("unknown variant '" + name + "'; valid variants: " + valid);
    }
  }
  if (variants.empty()) throw UsageError("no variants given");

  const RunConfig cfg = config_path.empty() ? RunConfig{}
                                            : RunConfig::from_file(config_path);
  const fs::path dir = prepare_out_dir(out);
  write_text(dir / "config.snapshot", cfg.to_string());
  const Dataset ds = cfg.load_or_generate();

  std::ofstream comparison(dir / "comparison.csv");
  comparison << "variant,accuracy,accuracy_std,auc,auc_std,recall,recall_std,"
                "f1,f1_std\n";
  for (AblationVariant v : variants) {
    const MetricReport r = run_ablation(ds, v, cfg.protocol(), cfg.seeds());
    write_report_csv(r, dir / (to_string(v) + ".csv"));
    write_report_json(r, cfg.to_string() + "variant=" + to_string(v) + "\n",
                      dataset_content_hash(ds), dir / (to_string(v) + ".json"));
    comparison << to_string(v) << "," << r.mean_accuracy << "," << r.std_accuracy
               << "," << r.mean_auc << "," << r.std_auc << "," << r.mean_recall
               << "," << r.std_recall << "," << r.mean_f1 << "," << r.std_f1
               << "\n";
    std::cout << to_string(v) << ": accuracy " << r.mean_accuracy << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out,
              const std::string& fractions_arg) {
  std::vector<double> fractions;
  std::istringstream ss(fractions_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      fractions.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UsageError("bad fraction: '" + tok + "'");
    }
  }
  if (fractions.empty()) throw UsageError("no fractions given");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw UsageError("fractions must be in (0, 1]");

  const RunConfig cfg = config_path.empty() ? RunConfig{}
                                            : RunConfig::from_file(config_path);
  const fs::path dir = prepare_out_dir(out);
  write_text(dir / "config.snapshot", cfg.to_string());
  const Dataset ds = cfg.load_or_generate();

  const auto table = label_fraction_sweep(ds, fractions, cfg.protocol(), cfg.seeds());
  std::ofstream csv(dir / "sweep.csv");
  csv << "fraction,accuracy,accuracy_std,auc,auc_std,recall,recall_std,f1,f1_std\n";
  for (const auto& [fraction, r] : table) {
    csv << fraction << "," << r.mean_accuracy << "," << r.std_accuracy << ","
        << r.mean_auc << "," << r.std_auc << "," << r.mean_recall << ","
        << r.std_recall << "," << r.mean_f1 << "," << r.std_f1 << "\n";
    std::cout << "fraction " << fraction << ": accuracy " << r.mean_accuracy
              << "\n";
  }
  return 0;
}

int cmd_probe(const std::string& out, const std::string& n_arg, Index k,
              int trials) {
  std::vector<Index> n_values;
  std::istringstream ss(n_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) n_values.push_back(std::stol(tok));
  const ScalingReport r = scaling_probe(n_values, k, trials);

  std::ostringstream table;
  table << "n,mean_seconds\n";
  for (const auto& p : r.points) table << p.n << "," << p.mean_seconds << "\n";
  std::cout << table.str() << "loglog_slope," << r.loglog_slope << "\n";
  if (!out.empty()) {
    const fs::path dir = prepare_out_dir(out);
    write_text(dir / "scaling.csv", table.str());
    write_text(dir / "slope.txt", std::to_string(r.loglog_slope) + "\n");
  }
  return 0;
}

int cmd_dump_spectrum(const std::string& manifest, const std::string& subject,
                      const std::string& out) {
  const Dataset ds = load_dataset(manifest);
  const SubjectRecord* rec = nullptr;
  for (const auto& r : ds.records)
    if (r.id == subject) rec = &r;
  if (!rec) throw data_error("no such subject in manifest: " + subject);

  const fs::path dir = prepare_out_dir(out);
  const BrainGraph g = threshold_graph(pearson_matrix(rec->series), rec->series);
  const SpectralBasis basis = eigendecompose(laplacian(g));
  const FilterBank bank = build_filter_bank(basis);
  const SpectralFeatures spec = gft(rec->series, basis);

  std::ofstream adj(dir / "adjacency.csv");
  for (Index i = 0; i < g.n_nodes; ++i) {
    for (Index j = 0; j < g.n_nodes; ++j)
      adj << (j ? "," : "") << g.adjacency(i, j);
    adj << "\n";
  }
  std::ofstream eig(dir / "eigenvalues.csv");
  for (Index i = 0; i < basis.size(); ++i) eig << basis.eigenvalues[i] << "\n";
  std::ofstream energy(dir / "band_energy.csv");
  energy << "band,energy\n";
  for (Band b : {Band::low, Band::mid, Band::high})
    energy << to_string(b) << "," << band_energy(spec, bank, b) << "\n";
  std::cout << "wrote spectrum dump for " << subject << " to " << dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-enhanced brain-graph representation learning"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  int subjects = 40, rois = 16, timepoints = 64, trials = 5;
  double snr = 2.0;
  std::uint64_t seed = 7;
  std::string band = "high", out, config_path, variants, fractions, n_values,
              subject;
  Index k = 8;
  bool dry_run = false;
  synth->add_option("--subjects", subjects);
  synth->add_option("--rois", rois);
  synth->add_option("--timepoints", timepoints);
  synth->add_option("--band", band);
  synth->add_option("--snr", snr);
  synth->add_option("--seed", seed);
  synth->add_option("--out", out)->required();

  auto* run = app.add_subcommand("run", "pretrain, fine-tune and evaluate");
  run->add_option("--config", config_path);
  run->add_option("--out", out);
  run->add_flag("--dry-run", dry_run, "print the resolved config and exit");

  auto* ablate = app.add_subcommand("ablate", "run ablation variants");
  ablate->add_option("--config", config_path);
  ablate->add_option("--variants", variants)->required();
  ablate->add_option("--out", out)->required();

  auto* sweep = app.add_subcommand("sweep", "label-fraction sweep");
  sweep->add_option("--config", config_path);
  sweep->add_option("--fractions", fractions)->required();
  sweep->add_option("--out", out)->required();

  auto* probe = app.add_subcommand("probe-scaling", "time the frequency encoder");
  probe->add_option("--n", n_values)->required();
  probe->add_option("--k", k);
  probe->add_option("--trials", trials);
  probe->add_option("--out", out);

  auto* dump = app.add_subcommand("dump-spectrum", "dump one subject's spectrum");
  dump->add_option("--manifest", config_path)->required();
  dump->add_option("--subject", subject)->required();
  dump->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      if (!(snr > 0.0)) throw UsageError("--snr must be > 0");
      return cmd_synth(out, subjects, rois, timepoints, band, snr, seed);
    }
    if (run->parsed()) {
      if (!dry_run && out.empty()) throw UsageError("run requires --out");
      return cmd_run(config_path, out, dry_run);
    }
    if (ablate->parsed()) return cmd_ablate(config_path, out, variants);
    if (sweep->parsed()) return cmd_sweep(config_path, out, fractions);
    if (probe->parsed()) return cmd_probe(out, n_values, k, trials);
    if (dump->parsed()) return cmd_dump_spectrum(config_path, subject, out);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const braintf::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const braintf::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
