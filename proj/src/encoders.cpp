#include "braintf/encoders.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace braintf {

namespace {

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix glorot(Index rows, Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / double(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

Matrix gcn_propagation(const BrainGraph& g) {
  Matrix a_tilde = g.adjacency + Matrix::Identity(g.n_nodes, g.n_nodes);
  Vector inv_sqrt_deg = a_tilde.rowwise().sum().cwiseInverse().cwiseSqrt();
  return inv_sqrt_deg.asDiagonal() * a_tilde * inv_sqrt_deg.asDiagonal();
}

Representation tgnn_forward(const BrainGraph& g, const TgnnParams& params) {
  if (params.weights.empty()) throw data_error("tgnn_forward: no layers");
  const Matrix prop = gcn_propagation(g);
  Matrix h = g.features_time;
  for (Index l = 0; l < params.layer_count(); ++l) {
    const Matrix& w = params.weights[static_cast<std::size_t>(l)];
    if (h.cols() != w.rows())
      throw data_error("tgnn_forward: layer " + std::to_string(l) +
                       " weight shape mismatch");
    h = prop * h * w;
    if (l + 1 < params.layer_count()) h = relu(h);
  }
  return {std::move(h), DomainTag::time};
}

Matrix fgo_forward(const FilteredSpectrum& xf, const FgnnParams& params) {
  const Matrix& x = xf.coefficients;
  const Index k = x.cols();
  if (params.biases.size() != params.operators.size() + 1)
    throw data_error("fgo_forward: need depth+1 bias vectors");
  for (const Matrix& s : params.operators)
    if (s.rows() != k || s.cols() != k)
      throw data_error("fgo_forward: operator shape mismatch");
  for (const Vector& b : params.biases)
    if (b.size() != k) throw data_error("fgo_forward: bias length mismatch");

  // Order-0 term uses the identity operator.
  Matrix acc = relu(x.rowwise() + params.biases[0].transpose());
  Matrix chain = Matrix::Identity(k, k);
  for (std::size_t p = 1; p <= params.operators.size(); ++p) {
    chain = chain * params.operators[p - 1];
    acc += relu((x * chain).rowwise() + params.biases[p].transpose());
  }
  return acc;
}

Representation fgnn_forward(const SpectralFeatures& spec, const FilterBank& bank,
                            const SpectralBasis& basis, const FgnnParams& params,
                            const std::set<Band>& retained, Index k_features) {
  if (spec.coefficients.rows() != basis.size())
    throw data_error("fgnn_forward: spectrum/basis size mismatch");
  const FilteredSpectrum xf = select_components(spec, bank, retained, k_features);
  const Index n = basis.size();
  const Index k = xf.coefficients.cols();

  Eigen::ArrayXd keep = Eigen::ArrayXd::Zero(n);
  for (Band b : retained) keep += bank.mask(b);
  std::vector<Index> kept;
  for (Index i = 0; i < n; ++i)
    if (keep[i] > 0.0) kept.push_back(i);
  const Index m = static_cast<Index>(kept.size());

  // FGO on the retained rows only; rows outside the retained bands all share
  // the constant value sum_p ReLU(b^p), so the inverse transform needs one
  // rank-one correction instead of the full dense product.
  FilteredSpectrum xf_kept;
  xf_kept.coefficients.resize(m, k);
  for (Index r = 0; r < m; ++r)
    xf_kept.coefficients.row(r) = xf.coefficients.row(kept[static_cast<std::size_t>(r)]);
  const Matrix z_kept = fgo_forward(xf_kept, params);

  Vector masked_row = Vector::Zero(k);
  for (const Vector& b : params.biases)
    masked_row += b.cwiseMax(0.0).head(k);

  Matrix u_kept(n, m);
  for (Index r = 0; r < m; ++r)
    u_kept.col(r) = basis.eigenvectors.col(kept[static_cast<std::size_t>(r)]);
  const Vector masked_col_sum = basis.column_sum - u_kept.rowwise().sum();

  Matrix y = u_kept * z_kept + masked_col_sum * masked_row.transpose();

  // Row-wise projection MLP into the N x D latent space.
  if (params.mlp_w1.rows() != k)
    throw data_error("fgnn_forward: MLP input width mismatch");
  Matrix hidden = relu((y * params.mlp_w1).rowwise() + params.mlp_b1.transpose());
  Matrix z = (hidden * params.mlp_w2).rowwise() + params.mlp_b2.transpose();
  return {std::move(z), DomainTag::frequency};
}

std::pair<TgnnParams, FgnnParams> init_params(Index n_rois, Index d, Index k,
                                              std::uint64_t seed,
                                              Index gcn_layers, Index fgo_layers) {
  if (n_rois < 1 || d < 1 || k < 1 || gcn_layers < 1 || fgo_layers < 0)
    throw data_error("init_params: dimensions must be positive");

  std::mt19937_64 rng(derive_seed(seed, "init-params"));
  TgnnParams tgnn;
  for (Index l = 0; l < gcn_layers; ++l) tgnn.weights.push_back(glorot(d, d, rng));

  FgnnParams fgnn;
  for (Index p = 0; p < fgo_layers; ++p) fgnn.operators.push_back(glorot(k, k, rng));
  fgnn.biases.assign(static_cast<std::size_t>(fgo_layers + 1), Vector::Zero(k));
  const Index hidden = std::max(k, d);
  fgnn.mlp_w1 = glorot(k, hidden, rng);
  fgnn.mlp_b1 = Vector::Zero(hidden);
  fgnn.mlp_w2 = glorot(hidden, d, rng);
  fgnn.mlp_b2 = Vector::Zero(d);
  return {std::move(tgnn), std::move(fgnn)};
}

Representation fuse(const Representation& zt, const Representation& zf) {
  if (zt.domain_tag != DomainTag::time || zf.domain_tag != DomainTag::frequency)
    throw data_error("fuse: expected a (time, frequency) pair");
  if (zt.z.rows() != zf.z.rows() || zt.z.cols() != zf.z.cols())
    throw data_error("fuse: representation shapes differ");
  return {(zt.z + zf.z) / 2.0, DomainTag::fused};
}

namespace {

void write_tensor(std::ostream& header, std::vector<const Matrix*>& order,
                  const std::string& name, const Matrix& m) {
  header << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
  order.push_back(&m);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TgnnParams& tgnn,
                     const FgnnParams& fgnn, std::uint64_t seed) {
  std::ostringstream header;
  std::vector<const Matrix*> order;
  std::vector<Matrix> bias_mats;  // keep Vector data alive as 1-col matrices
  bias_mats.reserve(fgnn.biases.size() + 3);

  header << "braintf-checkpoint v1\n";
  header << "seed " << seed << "\n";
  header << "convention fgo-order0-identity\n";
  for (std::size_t l = 0; l < tgnn.weights.size(); ++l)
    write_tensor(header, order, "tgnn.w" + std::to_string(l), tgnn.weights[l]);
  for (std::size_t p = 0; p < fgnn.operators.size(); ++p)
    write_tensor(header, order, "fgnn.s" + std::to_string(p + 1), fgnn.operators[p]);
  for (std::size_t p = 0; p < fgnn.biases.size(); ++p) {
    bias_mats.emplace_back(fgnn.biases[p]);
    write_tensor(header, order, "fgnn.b" + std::to_string(p), bias_mats.back());
  }
  write_tensor(header, order, "fgnn.mlp_w1", fgnn.mlp_w1);
  bias_mats.emplace_back(fgnn.mlp_b1);
  write_tensor(header, order, "fgnn.mlp_b1", bias_mats.back());
  write_tensor(header, order, "fgnn.mlp_w2", fgnn.mlp_w2);
  bias_mats.emplace_back(fgnn.mlp_b2);
  write_tensor(header, order, "fgnn.mlp_b2", bias_mats.back());
  header << "data\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint: " + path.string());
  const std::string h = header.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const Matrix* m : order)
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(sizeof(double) * std::size_t(m->size())));
}

std::pair<TgnnParams, FgnnParams> load_checkpoint(const std::filesystem::path& path,
                                                  std::uint64_t* seed_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "braintf-checkpoint v1")
    throw data_error("not a braintf checkpoint: " + path.string());

  struct Entry {
    std::string name;
    Index rows, cols;
  };
  std::vector<Entry> entries;
  std::uint64_t seed = 0;
  while (std::getline(in, line) && line != "data") {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "seed") {
      ss >> seed;
    } else if (word == "tensor") {
      Entry e;
      ss >> e.name >> e.rows >> e.cols;
      entries.push_back(e);
    } else if (word != "convention") {
      throw data_error("unknown checkpoint header line: " + line);
    }
  }
  if (seed_out) *seed_out = seed;

  TgnnParams tgnn;
  FgnnParams fgnn;
  for (const Entry& e : entries) {
    Matrix m(e.rows, e.cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * std::size_t(m.size())));
    if (!in) throw data_error("truncated checkpoint: " + path.string());
    if (e.name.rfind("tgnn.w", 0) == 0) {
      tgnn.weights.push_back(std::move(m));
    } else if (e.name.rfind("fgnn.s", 0) == 0) {
      fgnn.operators.push_back(std::move(m));
    } else if (e.name.rfind("fgnn.b", 0) == 0) {
      fgnn.biases.push_back(m.col(0));
    } else if (e.name == "fgnn.mlp_w1") {
      fgnn.mlp_w1 = std::move(m);
    } else if (e.name == "fgnn.mlp_b1") {
      fgnn.mlp_b1 = m.col(0);
    } else if (e.name == "fgnn.mlp_w2") {
      fgnn.mlp_w2 = std::move(m);
    } else if (e.name == "fgnn.mlp_b2") {
      fgnn.mlp_b2 = m.col(0);
    } else {
      throw data_error("unknown tensor in checkpoint: " + e.name);
    }
  }
  return {std::move(tgnn), std::move(fgnn)};
}

}  // namespace braintf
