#include "braintf/spectral.hpp"

#include <cmath>

namespace braintf {

const Eigen::ArrayXd& FilterBank::mask(Band b) const {
  switch (b) {
    case Band::low:
      return low_mask;
    case Band::mid:
      return mid_mask;
    case Band::high:
      return high_mask;
  }
  throw std::logic_error("unreachable band tag");
}

SpectralFeatures gft(const Matrix& features, const SpectralBasis& basis) {
  if (features.rows() != basis.size())
    throw data_error("gft: feature rows do not match basis dimension");
  SpectralFeatures out;
  out.coefficients = basis.eigenvectors.transpose() * features;
  out.basis_id = basis.id;
  return out;
}

Matrix igft(const SpectralFeatures& spec, const SpectralBasis& basis) {
  if (spec.coefficients.rows() != basis.size())
    throw data_error("igft: coefficient rows do not match basis dimension");
  if (spec.basis_id != 0 && spec.basis_id != basis.id)
    throw data_error("igft: coefficients were produced under a different basis");
  return basis.eigenvectors * spec.coefficients;
}

FilterBank build_filter_bank(const SpectralBasis& basis, double p_low,
                             double p_high) {
  if (!(p_low > 0.0 && p_low < 1.0) || !(p_high > 0.0 && p_high < 1.0))
    throw data_error("build_filter_bank: quotas must be in (0, 1)");
  if (p_low + p_high > 1.0)
    throw data_error("build_filter_bank: p_low + p_high exceeds 1");

  const Index n = basis.size();
  const auto n_low = static_cast<Index>(std::ceil(p_low * double(n)));
  const auto n_high = static_cast<Index>(std::ceil(p_high * double(n)));
  if (n_low + n_high > n)
    throw data_error("build_filter_bank: band quotas overlap for this size");

  FilterBank bank;
  bank.p_low = p_low;
  bank.p_high = p_high;
  bank.low_mask = Eigen::ArrayXd::Zero(n);
  bank.mid_mask = Eigen::ArrayXd::Zero(n);
  bank.high_mask = Eigen::ArrayXd::Zero(n);
  bank.low_mask.head(n_low).setOnes();
  bank.high_mask.tail(n_high).setOnes();
  bank.mid_mask = 1.0 - bank.low_mask - bank.high_mask;
  bank.lambda_low = basis.eigenvalues[n_low - 1];
  bank.lambda_high = basis.eigenvalues[n - n_high];
  return bank;
}

SpectralFeatures apply_band(const SpectralFeatures& spec, const FilterBank& bank,
                            Band band) {
  if (spec.coefficients.rows() != bank.size())
    throw data_error("apply_band: bank size does not match coefficients");
  SpectralFeatures out = spec;
  out.coefficients.array().colwise() *= bank.mask(band);
  return out;
}

FilteredSpectrum select_components(const SpectralFeatures& spec,
                                   const FilterBank& bank,
                                   const std::set<Band>& retained,
                                   Index k_features) {
  if (retained.empty())
    throw data_error("select_components: retained band set is empty");
  if (spec.coefficients.rows() != bank.size())
    throw data_error("select_components: bank size does not match coefficients");
  const Index d = spec.coefficients.cols();
  if (k_features < 0) k_features = d;
  if (k_features > d || k_features < 1)
    throw data_error("select_components: k_features out of range");

  Eigen::ArrayXd keep = Eigen::ArrayXd::Zero(bank.size());
  for (Band b : retained) keep += bank.mask(b);

  FilteredSpectrum out;
  out.retained_bands = retained;
  out.basis_id = spec.basis_id;
  out.coefficients = spec.coefficients.leftCols(k_features);
  out.coefficients.array().colwise() *= keep;
  return out;
}

double band_energy(const SpectralFeatures& spec, const FilterBank& bank, Band band) {
  return (spec.coefficients.array().colwise() * bank.mask(band))
      .matrix()
      .squaredNorm();
}

}  // namespace braintf
