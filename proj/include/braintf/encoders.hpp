#pragma once

#include "braintf/spectral.hpp"

#include <filesystem>
#include <vector>

namespace braintf {

/// Time-domain encoder parameters: one weight matrix per GCN layer.
/// Layer widths are D -> D -> ... -> D so Z_T stays N x D.
struct TgnnParams {
  std::vector<Matrix> weights;

  Index layer_count() const { return static_cast<Index>(weights.size()); }
};

/// Frequency-domain encoder parameters: a stack of P shared K x K spectral
/// operators (order-0 operator fixed to identity) with P+1 bias vectors,
/// followed by a one-hidden-layer projection MLP K -> max(K, D) -> D.
struct FgnnParams {
  std::vector<Matrix> operators;  // P matrices, each K x K
  std::vector<Vector> biases;     // P+1 vectors of length K
  Matrix mlp_w1;                  // K x H
  Vector mlp_b1;                  // H
  Matrix mlp_w2;                  // H x D
  Vector mlp_b2;                  // D

  Index depth() const { return static_cast<Index>(operators.size()); }
};

enum class DomainTag { time, frequency, fused };

struct Representation {
  Matrix z;  // N x D
  DomainTag domain_tag = DomainTag::time;
};

/// Two-layer-style GCN forward: X^(l+1) = act(D^-1/2 (A+I) D^-1/2 X^(l) W^(l)),
/// ReLU on hidden layers, identity on the final layer.
Representation tgnn_forward(const BrainGraph& g, const TgnnParams& params);

/// Symmetrically normalized propagation matrix with self-loops.
Matrix gcn_propagation(const BrainGraph& g);

/// Spectral operator stack: sum_{p=0}^{P} ReLU(X * S^{0:p} + b^p) with
/// S^{0:p} the cumulative operator product and S^0 = I.
Matrix fgo_forward(const FilteredSpectrum& xf, const FgnnParams& params);

/// Full frequency encoder: band selection -> FGO stack -> inverse transform
/// -> row-wise projection MLP. Output is always N x D. Cost is linear in N
/// for a fixed number of retained spectral components.
Representation fgnn_forward(const SpectralFeatures& spec, const FilterBank& bank,
                            const SpectralBasis& basis, const FgnnParams& params,
                            const std::set<Band>& retained = {Band::low, Band::high},
                            Index k_features = -1);

/// Glorot-uniform weights (biases zero), deterministic in the seed.
std::pair<TgnnParams, FgnnParams> init_params(Index n_rois, Index d, Index k,
                                              std::uint64_t seed,
                                              Index gcn_layers = 2,
                                              Index fgo_layers = 3);

/// Z_TF = (Z_T + Z_F) / 2. Requires matching shapes and {time, frequency} tags.
Representation fuse(const Representation& zt, const Representation& zf);

/// Checkpoint I/O: a text shape manifest followed by raw little-endian
/// doubles, so files are portable and diffable at the header level.
void save_checkpoint(const std::filesystem::path& path, const TgnnParams& tgnn,
                     const FgnnParams& fgnn, std::uint64_t seed);
std::pair<TgnnParams, FgnnParams> load_checkpoint(const std::filesystem::path& path,
                                                  std::uint64_t* seed_out = nullptr);

}  // namespace braintf
