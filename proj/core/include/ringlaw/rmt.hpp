#pragma once

// Random-matrix core: raw window -> standardized matrix -> singular value
// equivalents -> ring matrix product -> spectrum -> mean spectral radius,
// plus the single-ring reference quantities the spectra are compared with.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ringlaw/seed.hpp"

namespace ringlaw {

using BusId = int;
using TimeIndex = std::int64_t;

/// Raw N x T split-window: rows are buses, columns consecutive samples
/// ending at end_time.
class DataWindow {
 public:
  /// Throws InvalidArgument unless N >= 2, T >= N, all entries finite and
  /// row_ids unique with length N.
  DataWindow(Eigen::MatrixXd values, std::vector<BusId> row_ids,
             TimeIndex end_time, double sample_period = 1.0);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<BusId>& row_ids() const noexcept { return row_ids_; }
  TimeIndex end_time() const noexcept { return end_time_; }
  double sample_period() const noexcept { return sample_period_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  std::vector<BusId> row_ids_;
  TimeIndex end_time_;
  double sample_period_;
};

/// Row-wise z-scored window: every row has mean 0 and population variance 1.
struct StandardizedWindow {
  Eigen::MatrixXd values;
  std::vector<BusId> row_ids;
};

/// Options for standardize_rows. Rows whose population standard deviation
/// is at or below min_std are an error unless jitter is enabled, in which
/// case only those rows receive N(0, (jitter_scale * magnitude)^2) noise.
struct StandardizeOptions {
  double min_std = 1e-9;
  bool jitter = false;
  double jitter_scale = 1e-6;
  Seed jitter_seed = 0;
};

enum class UnitaryMode { kHaar, kIdentity };

/// Square N x N matrix sharing the singular values of a standardized window.
struct SingularEquivalent {
  Eigen::MatrixXcd values;
  Seed source_seed = 0;
};

/// Product of L singular value equivalents, optionally row-normalized.
struct RingMatrix {
  Eigen::MatrixXcd values;
  int factors = 1;
};

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> radii;

  std::size_t size() const noexcept { return eigenvalues.size(); }
  bool empty() const noexcept { return eigenvalues.empty(); }
};

/// Reference parameters of the single-ring law for an N x T window and a
/// product of L factors: ratio c = N/T, inner radius (1-c)^(L/2), outer 1.
class RingParams {
 public:
  /// Throws InvalidArgument unless 1 <= n_rows <= n_cols and factors >= 1.
  RingParams(Eigen::Index n_rows, Eigen::Index n_cols, int factors);

  Eigen::Index n_rows() const noexcept { return n_rows_; }
  Eigen::Index n_cols() const noexcept { return n_cols_; }
  double ratio() const noexcept { return ratio_; }
  int factors() const noexcept { return factors_; }
  double inner_radius() const noexcept { return inner_radius_; }
  static constexpr double outer_radius() noexcept { return 1.0; }

 private:
  Eigen::Index n_rows_;
  Eigen::Index n_cols_;
  int factors_;
  double ratio_;
  double inner_radius_;
};

struct ConformanceReport {
  double fraction = 0.0;  // share of radii in [inner - tol, outer + tol]
  double min_radius = 0.0;
  double max_radius = 0.0;
  double inner_bound = 0.0;
  double outer_bound = 0.0;
  std::size_t inside = 0;
  std::size_t total = 0;
};

StandardizedWindow standardize_rows(const DataWindow& window,
                                    const StandardizeOptions& options = {});

/// Haar-distributed N x N unitary: QR of an i.i.d. complex Gaussian matrix
/// with the phases of R's diagonal folded into Q.
Eigen::MatrixXcd haar_unitary(Eigen::Index n, Seed seed);

/// U * sqrt(X X^H), with sqrt(X X^H) = P Sigma P^H taken from the thin SVD
/// X = P Sigma Q^H. The unitary is drawn in ascending-bus-id order and then
/// permuted into the window's row order, so permuting the window's rows
/// conjugates the result by the same permutation.
SingularEquivalent singular_value_equivalent(
    const StandardizedWindow& x, Seed seed,
    UnitaryMode mode = UnitaryMode::kHaar);

/// Ordered left-to-right product of the factors.
RingMatrix ring_product(std::span<const SingularEquivalent> factors);

/// Divides row j by sqrt(N) * sigma(row j), sigma the population standard
/// deviation of the complex row.
RingMatrix normalize_product_rows(const RingMatrix& z);

Spectrum eigenvalues(const RingMatrix& z);

/// Mean spectral radius: arithmetic mean of the eigenvalue moduli.
double msr(const Spectrum& spectrum);

/// Limiting eigenvalue density (per unit area of the complex plane) at
/// modulus `radius`, with exponent parameter alpha = L.
double ring_density(double radius, const RingParams& params);

/// First moment of ring_density: 2/(c(L+2)) * (1 - (1-c)^((L+2)/2)).
double expected_msr(const RingParams& params);

ConformanceReport ring_conformance(const Spectrum& spectrum,
                                   const RingParams& params, double tol);

/// Population standard deviation of each row, complex-aware.
Eigen::VectorXd row_population_std(const Eigen::MatrixXcd& m);

}  // namespace ringlaw
