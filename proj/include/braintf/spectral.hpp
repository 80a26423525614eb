#pragma once

#include "braintf/graph.hpp"

#include <set>

namespace braintf {

/// Node features expressed in the Laplacian eigenbasis. Row k is the
/// spectral coefficient paired with eigenvalue k of the bound basis.
struct SpectralFeatures {
  Matrix coefficients;  // N x D
  std::uint64_t basis_id = 0;
};

/// Disjoint low/mid/high spectral masks built from eigenvalue percentiles.
struct FilterBank {
  Eigen::ArrayXd low_mask, mid_mask, high_mask;  // 0/1 entries, length N
  double p_low = 0.2;
  double p_high = 0.2;
  double lambda_low = 0.0;   // largest eigenvalue inside the low band
  double lambda_high = 0.0;  // smallest eigenvalue inside the high band

  const Eigen::ArrayXd& mask(Band b) const;
  Index size() const { return low_mask.size(); }
};

/// Band-selected spectral coefficients; rows outside the retained bands are
/// exactly zero and only the first K feature columns are kept.
struct FilteredSpectrum {
  Matrix coefficients;  // N x K
  std::set<Band> retained_bands;
  std::uint64_t basis_id = 0;
};

SpectralFeatures gft(const Matrix& features, const SpectralBasis& basis);

Matrix igft(const SpectralFeatures& spec, const SpectralBasis& basis);

/// Masks covering the ceil(p_low*N) smallest and ceil(p_high*N) largest
/// eigenindices; ties at a cutoff resolve by eigenindex.
FilterBank build_filter_bank(const SpectralBasis& basis, double p_low = 0.2,
                             double p_high = 0.2);

/// Zeroes the spectral rows outside `band`; rows inside pass unchanged.
SpectralFeatures apply_band(const SpectralFeatures& spec, const FilterBank& bank,
                            Band band);

/// Zeroes rows outside the retained bands and truncates to the first
/// k_features feature columns (default: keep all).
FilteredSpectrum select_components(const SpectralFeatures& spec,
                                   const FilterBank& bank,
                                   const std::set<Band>& retained,
                                   Index k_features = -1);

/// Per-band signal energy (squared Frobenius norm of the masked rows).
double band_energy(const SpectralFeatures& spec, const FilterBank& bank, Band band);

}  // namespace braintf
