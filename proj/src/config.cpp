#include "braintf/config.hpp"

#include <fstream>
#include <sstream>

namespace braintf {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw data_error("config: expected boolean, got '" + v + "'");
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error("config line " + std::to_string(lineno) +
                       ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "data.manifest") cfg.manifest = val;
      else if (key == "data.synth.subjects") cfg.synth_subjects = std::stoi(val);
      else if (key == "data.synth.rois") cfg.synth_rois = std::stoi(val);
      else if (key == "data.synth.timepoints") cfg.synth_timepoints = std::stoi(val);
      else if (key == "data.synth.band") cfg.synth_band = band_from_string(val);
      else if (key == "data.synth.snr") cfg.synth_snr = std::stod(val);
      else if (key == "model.k") cfg.k_features = std::stol(val);
      else if (key == "model.gcn_layers") cfg.gcn_layers = std::stol(val);
      else if (key == "model.fgo_layers") cfg.fgo_layers = std::stol(val);
      else if (key == "model.p_low") cfg.p_low = std::stod(val);
      else if (key == "model.p_high") cfg.p_high = std::stod(val);
      else if (key == "model.graph_density") cfg.graph_density = std::stod(val);
      else if (key == "model.bands") cfg.bands = val;
      else if (key == "loss.gamma") cfg.gamma = std::stod(val);
      else if (key == "loss.beta") cfg.beta = std::stod(val);
      else if (key == "loss.variant") cfg.loss_variant = val;
      else if (key == "optim.lr") cfg.learning_rate = std::stod(val);
      else if (key == "optim.weight_decay") cfg.weight_decay = std::stod(val);
      else if (key == "optim.head_lr") cfg.head_learning_rate = std::stod(val);
      else if (key == "protocol.folds") cfg.fold_count = std::stoi(val);
      else if (key == "protocol.seeds") cfg.seed_count = std::stoi(val);
      else if (key == "protocol.pretrain_epochs") cfg.pretrain_epochs = std::stoi(val);
      else if (key == "protocol.finetune_epochs") cfg.finetune_epochs = std::stoi(val);
      else if (key == "protocol.label_fraction") cfg.label_fraction = std::stod(val);
      else if (key == "protocol.strict_pretrain") cfg.strict_pretrain = parse_bool(val);
      else if (key == "run.seed") cfg.seed = std::stoull(val);
      else if (key == "run.workers") cfg.workers = std::stoi(val);
      else
        throw data_error("config: unknown key '" + key + "'");
    } catch (const data_error&) {
      throw;
    } catch (const std::exception&) {
      throw data_error("config: bad value for '" + key + "': '" + val + "'");
    }
  }
  // Validate enum-ish strings eagerly so --dry-run catches typos.
  (void)loss_variant_from_string(cfg.loss_variant);
  (void)cfg.retained_bands();
  return cfg;
}

std::string RunConfig::to_string() const {
  std::ostringstream ss;
  ss << "data.manifest=" << manifest << "\n"
     << "data.synth.subjects=" << synth_subjects << "\n"
     << "data.synth.rois=" << synth_rois << "\n"
     << "data.synth.timepoints=" << synth_timepoints << "\n"
     << "data.synth.band=" << braintf::to_string(synth_band) << "\n"
     << "data.synth.snr=" << synth_snr << "\n"
     << "model.k=" << k_features << "\n"
     << "model.gcn_layers=" << gcn_layers << "\n"
     << "model.fgo_layers=" << fgo_layers << "\n"
     << "model.p_low=" << p_low << "\n"
     << "model.p_high=" << p_high << "\n"
     << "model.graph_density=" << graph_density << "\n"
     << "model.bands=" << bands << "\n"
     << "loss.gamma=" << gamma << "\n"
     << "loss.beta=" << beta << "\n"
     << "loss.variant=" << loss_variant << "\n"
     << "optim.lr=" << learning_rate << "\n"
     << "optim.weight_decay=" << weight_decay << "\n"
     << "optim.head_lr=" << head_learning_rate << "\n"
     << "protocol.folds=" << fold_count << "\n"
     << "protocol.seeds=" << seed_count << "\n"
     << "protocol.pretrain_epochs=" << pretrain_epochs << "\n"
     << "protocol.finetune_epochs=" << finetune_epochs << "\n"
     << "protocol.label_fraction=" << label_fraction << "\n"
     << "protocol.strict_pretrain=" << (strict_pretrain ? "true" : "false") << "\n"
     << "run.seed=" << seed << "\n"
     << "run.workers=" << workers << "\n";
  return ss.str();
}

Dataset RunConfig::load_or_generate() const {
  if (!manifest.empty()) return load_dataset(manifest);
  return generate_synthetic(synth_subjects, synth_rois, synth_timepoints,
                            synth_band, synth_snr, seed);
}

std::set<Band> RunConfig::retained_bands() const {
  if (bands == "low_high") return {Band::low, Band::high};
  if (bands == "all") return {Band::low, Band::mid, Band::high};
  if (bands == "low") return {Band::low};
  if (bands == "mid") return {Band::mid};
  if (bands == "high") return {Band::high};
  throw data_error("config: unknown band selection '" + bands +
                   "' (expected low_high, all, low, mid or high)");
}

ProtocolConfig RunConfig::protocol() const {
  ProtocolConfig p;
  p.pretrain.loss = {gamma, beta};
  p.pretrain.variant = loss_variant_from_string(loss_variant);
  p.pretrain.retained = retained_bands();
  p.pretrain.k_features = k_features;
  p.pretrain.gcn_layers = gcn_layers;
  p.pretrain.fgo_layers = fgo_layers;
  p.pretrain.graph_density = graph_density;
  p.pretrain.p_low = p_low;
  p.pretrain.p_high = p_high;
  p.pretrain.learning_rate = learning_rate;
  p.pretrain.weight_decay = weight_decay;
  p.finetune.learning_rate = head_learning_rate;
  p.finetune.weight_decay = weight_decay;
  p.fold_count = fold_count;
  p.pretrain_epochs = pretrain_epochs;
  p.finetune_epochs = finetune_epochs;
  p.label_fraction = label_fraction;
  p.strict_pretrain = strict_pretrain;
  return p;
}

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < seed_count; ++i)
    out.push_back(derive_seed(seed, "protocol-seed:" + std::to_string(i)));
  return out;
}

}  // namespace braintf
