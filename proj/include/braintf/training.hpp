#pragma once

#include "braintf/dataset.hpp"
#include "braintf/encoders.hpp"

#include <optional>

namespace braintf {

struct LossConfig {
  double gamma = 1e-5;  // time-domain decorrelation weight
  double beta = 1e-4;   // frequency-domain decorrelation weight
};

/// Pretraining objective. `cca` is the reference objective; the others are
/// the ablation variants (identical trade-off coefficients, cosine
/// similarity, cosine similarity plus decorrelation).
enum class LossVariant { cca, equal_coeff, cosine, cosine_decorr };

LossVariant loss_variant_from_string(std::string_view s);
std::string to_string(LossVariant v);

struct LossTerms {
  double total = 0.0;
  double distance = 0.0;     // alignment term between the two domains
  double time_decorr = 0.0;  // gamma-weighted Gram penalty on Z_T
  double freq_decorr = 0.0;  // beta-weighted Gram penalty on Z_F
};

/// L = ||Z_T - Z_F||_F^2 + gamma ||Z_T'Z_T - I||_F^2 + beta ||Z_F'Z_F - I||_F^2,
/// evaluated exactly as given (no internal standardization).
LossTerms consistency_loss(const Representation& zt, const Representation& zf,
                           const LossConfig& cfg);

/// Column-wise standardization: zero mean, unit variance, scaled by 1/sqrt(N)
/// so each column has unit Euclidean norm. `sigma_out`, when given, receives
/// the per-column sqrt(var + eps) needed by the backward pass.
Matrix standardize_columns(const Matrix& z, Vector* sigma_out = nullptr);

/// Gradient of standardize_columns: maps dL/d(standardized) back to dL/dz.
Matrix standardize_columns_backward(const Matrix& z_std, const Vector& sigma,
                                    const Matrix& grad);

/// AdamW with decoupled weight decay over a flat parameter vector.
struct OptimState {
  Vector first_moment;
  Vector second_moment;
  long step = 0;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimState for_size(Index n, double lr, double wd = 0.01);
};

void adamw_step(Vector& params, const Vector& grads, OptimState& state);

/// Flat-vector view of the two encoders' parameters (fixed traversal order).
Vector flatten_params(const TgnnParams& tgnn, const FgnnParams& fgnn);
void unflatten_params(const Vector& flat, TgnnParams& tgnn, FgnnParams& fgnn);

/// Per-subject graph quantities computed once and reused every epoch.
struct SubjectContext {
  BrainGraph graph;
  Matrix propagation;  // normalized GCN propagation matrix
  SpectralBasis basis;
  FilterBank bank;
  FilteredSpectrum selected;  // band-selected spectral features, N x K
};

struct PretrainOptions {
  LossConfig loss;
  LossVariant variant = LossVariant::cca;
  bool train_tgnn = true;
  bool train_fgnn = true;
  std::set<Band> retained = {Band::low, Band::high};
  Index k_features = -1;  // default: D
  Index gcn_layers = 2;
  Index fgo_layers = 3;
  double graph_density = 0.2;
  double p_low = 0.2;
  double p_high = 0.2;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
};

SubjectContext build_subject_context(const SubjectRecord& rec,
                                     const PretrainOptions& opt);

/// All forward intermediates for one subject, cached for the backward pass.
struct ForwardCache {
  std::vector<Matrix> gcn_inputs;  // input of each GCN layer
  std::vector<Matrix> gcn_pre;     // pre-activation of each GCN layer
  Matrix zt;

  std::vector<Matrix> fgo_chain;  // cumulative operator products, p = 0..P
  std::vector<Matrix> fgo_pre;    // FGO pre-activations, p = 0..P
  Matrix z_fourier;               // FGO output in Fourier space
  Matrix y;                       // after inverse transform
  Matrix mlp_pre;
  Matrix mlp_hidden;
  Matrix zf;

  Matrix zt_std, zf_std;
  Vector zt_sigma, zf_sigma;
  LossTerms loss;
};

ForwardCache forward_subject(const SubjectContext& ctx, const TgnnParams& tgnn,
                             const FgnnParams& fgnn, const PretrainOptions& opt);

struct EncoderGrads {
  TgnnParams tgnn;
  FgnnParams fgnn;
};

/// Analytic gradients of the (variant) loss with respect to every encoder
/// parameter, through standardization, the GCN stack, the FGO product chain,
/// the inverse transform and the MLP.
EncoderGrads backward_subject(const SubjectContext& ctx, const TgnnParams& tgnn,
                              const FgnnParams& fgnn, const ForwardCache& cache,
                              const PretrainOptions& opt);

struct TrainTrace {
  std::vector<LossTerms> per_iteration;
  std::vector<double> epoch_mean_loss;
  std::vector<double> iteration_seconds;
  std::uint64_t seed = 0;
  std::string config_snapshot;
};

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);

struct PretrainResult {
  TgnnParams tgnn;
  FgnnParams fgnn;
  TrainTrace trace;
};

/// Label-free SSL loop: each iteration is a full pass that sums gradients
/// over all subjects and takes one optimizer step on the summed objective.
PretrainResult pretrain(const Dataset& ds, int epochs, const PretrainOptions& opt,
                        std::uint64_t seed);

/// Frozen-encoder fused representations for every record, in dataset order.
std::vector<Representation> encode_dataset(const Dataset& ds,
                                           const TgnnParams& tgnn,
                                           const FgnnParams& fgnn,
                                           const PretrainOptions& opt);

struct ClassifierHead {
  Matrix weight;         // D x 2
  Vector bias;           // 2
  Vector feature_mean;   // D, fitted on the labeled pooled features
  Vector feature_scale;  // D, per-feature std + 1e-8
};

struct FinetuneOptions {
  double learning_rate = 0.05;
  double weight_decay = 0.01;
};

/// Node-mean readout of a representation.
Vector pool_representation(const Representation& rep);

/// Trains a softmax cross-entropy head on mean-pooled representations with
/// AdamW (full batch, one step per epoch). Head starts at zero. Throws if the
/// labeled subset contains a single class.
ClassifierHead finetune(const std::vector<Representation>& reps,
                        const std::vector<int>& labels, int epochs,
                        std::uint64_t seed, const FinetuneOptions& opt = {});

/// Probability of class 1 for one pooled feature vector.
double head_score(const ClassifierHead& head, const Vector& pooled);

}  // namespace braintf
