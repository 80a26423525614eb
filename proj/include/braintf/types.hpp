#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace braintf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Invalid or inconsistent input data (bad files, shape mismatches, bad labels).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure (non-convergence, non-finite values mid-computation).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spectral frequency band of a graph signal.
enum class Band { low, mid, high };

std::string to_string(Band b);
Band band_from_string(std::string_view s);

/// Derives a per-component seed from a root seed and a purpose tag, so one
/// top-level seed reproduces every random draw in a run.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

}  // namespace braintf
