#include "ringlaw/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "ringlaw/error.hpp"

#include <complex>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace ringlaw {

namespace {

// Position of each row in ascending-id order.
std::vector<Eigen::Index> canonical_ranks(const std::vector<BusId>& ids,
                                          Eigen::Index n) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (static_cast<Eigen::Index>(ids.size()) == n) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                       return ids[static_cast<std::size_t>(a)] <
                              ids[static_cast<std::size_t>(b)];
                     });
  }
  std::vector<Eigen::Index> rank(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    rank[static_cast<std::size_t>(order[k])] = static_cast<Eigen::Index>(k);
  }
  return rank;
}

std::string row_label(const std::vector<BusId>& ids, Eigen::Index row) {
  if (row < static_cast<Eigen::Index>(ids.size())) {
    return "bus " + std::to_string(ids[static_cast<std::size_t>(row)]);
  }
  return "row " + std::to_string(row);
}

}  // namespace

DataWindow::DataWindow(Eigen::MatrixXd values, std::vector<BusId> row_ids,
                       TimeIndex end_time, double sample_period)
    : values_(std::move(values)),
      row_ids_(std::move(row_ids)),
      end_time_(end_time),
      sample_period_(sample_period) {
  if (values_.rows() < 2) {
    throw InvalidArgument("data window needs at least 2 rows, got " +
                          std::to_string(values_.rows()));
  }
  if (values_.cols() < values_.rows()) {
    throw InvalidArgument("data window must have T >= N (N=" +
                          std::to_string(values_.rows()) +
                          ", T=" + std::to_string(values_.cols()) + ")");
  }
  if (static_cast<Eigen::Index>(row_ids_.size()) != values_.rows()) {
    throw InvalidArgument("data window has " + std::to_string(values_.rows()) +
                          " rows but " + std::to_string(row_ids_.size()) +
                          " row ids");
  }
  std::unordered_set<BusId> seen;
  for (BusId id : row_ids_) {
    if (!seen.insert(id).second) {
      throw InvalidArgument("duplicate row id " + std::to_string(id));
    }
  }
  if (!values_.allFinite()) {
    throw InvalidArgument("data window contains non-finite entries");
  }
  if (!(sample_period_ > 0.0)) {
    throw InvalidArgument("sample period must be positive");
  }
}

StandardizedWindow standardize_rows(const DataWindow& window,
                                    const StandardizeOptions& options) {
  const Eigen::Index n = window.rows();
  const Eigen::Index t = window.cols();
  const auto td = static_cast<double>(t);
  Eigen::MatrixXd out = window.values();

  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = out.row(i);
    double mean = row.sum() / td;
    double sd = std::sqrt((row.array() - mean).square().sum() / td);
    if (!(sd > options.min_std)) {
      if (!options.jitter) {
        throw ZeroVarianceRow(row_label(window.row_ids(), i),
                              " (population std " + std::to_string(sd) + ")");
      }
      const double magnitude = row.cwiseAbs().maxCoeff();
      const double scale =
          options.jitter_scale * (magnitude > 0.0 ? magnitude : 1.0);
      std::mt19937_64 rng(splitmix64(options.jitter_seed ^
                                     static_cast<std::uint64_t>(i)));
      std::normal_distribution<double> normal(0.0, scale);
      for (Eigen::Index j = 0; j < t; ++j) row(j) += normal(rng);
      mean = row.sum() / td;
      sd = std::sqrt((row.array() - mean).square().sum() / td);
      if (!(sd > 0.0)) {
        throw ZeroVarianceRow(row_label(window.row_ids(), i),
                              " (still constant after jitter)");
      }
    }
    row.array() -= mean;
    // Second pass removes the rounding residue of the first mean.
    row.array() -= row.sum() / td;
    sd = std::sqrt(row.squaredNorm() / td);
    row /= sd;
  }
  return StandardizedWindow{std::move(out), window.row_ids()};
}

Eigen::MatrixXcd haar_unitary(Eigen::Index n, Seed seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = {re, im};
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::complex<double> d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

SingularEquivalent singular_value_equivalent(const StandardizedWindow& x,
                                             Seed seed, UnitaryMode mode) {
  const Eigen::Index n = x.values.rows();
  if (n < 1 || x.values.cols() < n) {
    throw DimensionMismatch("singular value equivalent needs T >= N (N=" +
                            std::to_string(n) + ", T=" +
                            std::to_string(x.values.cols()) + ")");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x.values, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) {
    throw DecompositionFailure("SVD of the standardized window did not converge");
  }
  const Eigen::MatrixXd& p = svd.matrixU();
  const Eigen::MatrixXd root =
      p * svd.singularValues().asDiagonal() * p.transpose();

  Eigen::MatrixXcd result;
  if (mode == UnitaryMode::kIdentity) {
    result = root.cast<std::complex<double>>();
  } else {
    const Eigen::MatrixXcd canonical = haar_unitary(n, seed);
    const auto rank = canonical_ranks(x.row_ids, n);
    Eigen::MatrixXcd u(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        u(i, j) = canonical(rank[static_cast<std::size_t>(i)],
                            rank[static_cast<std::size_t>(j)]);
      }
    }
    result = u * root.cast<std::complex<double>>();
  }
  if (!result.allFinite()) {
    throw DecompositionFailure("singular value equivalent is not finite");
  }
  return SingularEquivalent{std::move(result), seed};
}

RingMatrix ring_product(std::span<const SingularEquivalent> factors) {
  if (factors.empty()) {
    throw DimensionMismatch("ring product needs at least one factor");
  }
  const Eigen::Index n = factors.front().values.rows();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& f = factors[k].values;
    if (f.rows() != n || f.cols() != n) {
      throw DimensionMismatch("factor " + std::to_string(k) + " is " +
                              std::to_string(f.rows()) + "x" +
                              std::to_string(f.cols()) + ", expected " +
                              std::to_string(n) + "x" + std::to_string(n));
    }
  }
  Eigen::MatrixXcd product = factors.front().values;
  for (std::size_t k = 1; k < factors.size(); ++k) {
    product = product * factors[k].values;
  }
  return RingMatrix{std::move(product), static_cast<int>(factors.size())};
}

Eigen::VectorXd row_population_std(const Eigen::MatrixXcd& m) {
  Eigen::VectorXd sd(m.rows());
  const auto cols = static_cast<double>(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const std::complex<double> mean = m.row(i).sum() / cols;
    sd(i) = std::sqrt((m.row(i).array() - mean).abs2().sum() / cols);
  }
  return sd;
}

RingMatrix normalize_product_rows(const RingMatrix& z) {
  const Eigen::Index n = z.values.rows();
  const Eigen::VectorXd sd = row_population_std(z.values);
  const double root_n = std::sqrt(static_cast<double>(n));
  RingMatrix out{z.values, z.factors};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = z.values.row(i).cwiseAbs().maxCoeff();
    if (!(sd(i) > 0.0) || !std::isfinite(sd(i)) || sd(i) <= 1e-14 * scale) {
      throw ZeroVarianceRow("row " + std::to_string(i),
                            " in ring matrix product");
    }
    out.values.row(i) /= root_n * sd(i);
  }
  return out;
}

Spectrum eigenvalues(const RingMatrix& z) {
  if (z.values.rows() != z.values.cols()) {
    throw DimensionMismatch("eigenvalues need a square matrix");
  }
  if (!z.values.allFinite()) {
    throw InvalidArgument("ring matrix contains non-finite entries");
  }
  Spectrum spectrum;
  if (z.values.rows() == 0) return spectrum;
  // zgeev overwrites its input with the Schur form.
  Eigen::MatrixXcd work = z.values;
  const auto n = static_cast<lapack_int>(work.rows());
  spectrum.eigenvalues.resize(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'N', n,
      reinterpret_cast<lapack_complex_double*>(work.data()), n,
      reinterpret_cast<lapack_complex_double*>(spectrum.eigenvalues.data()),
      nullptr, 1, nullptr, 1);
  if (info != 0) {
    throw EigenFailure("zgeev failed (info=" + std::to_string(info) + ")");
  }
  spectrum.radii.reserve(spectrum.eigenvalues.size());
  for (const auto& lambda : spectrum.eigenvalues) {
    spectrum.radii.push_back(std::abs(lambda));
  }
  return spectrum;
}

double msr(const Spectrum& spectrum) {
  if (spectrum.empty()) throw EmptySpectrum();
  return std::accumulate(spectrum.radii.begin(), spectrum.radii.end(), 0.0) /
         static_cast<double>(spectrum.radii.size());
}

RingParams::RingParams(Eigen::Index n_rows, Eigen::Index n_cols, int factors)
    : n_rows_(n_rows), n_cols_(n_cols), factors_(factors) {
  if (n_rows < 1 || n_cols < n_rows) {
    throw InvalidArgument("ring parameters need 1 <= N <= T (N=" +
                          std::to_string(n_rows) +
                          ", T=" + std::to_string(n_cols) + ")");
  }
  if (factors < 1) {
    throw InvalidArgument("ring parameters need L >= 1");
  }
  ratio_ = static_cast<double>(n_rows) / static_cast<double>(n_cols);
  inner_radius_ = std::pow(1.0 - ratio_, 0.5 * factors_);
}

double ring_density(double radius, const RingParams& params) {
  if (radius < params.inner_radius() || radius > RingParams::outer_radius()) {
    return 0.0;
  }
  const double alpha = params.factors();
  return std::pow(radius, 2.0 / alpha - 2.0) /
         (std::numbers::pi * params.ratio() * alpha);
}

double expected_msr(const RingParams& params) {
  const double c = params.ratio();
  const double l = params.factors();
  // 1 - (1-c)^k without cancellation for small c.
  const double tail = -std::expm1(0.5 * (l + 2.0) * std::log1p(-c));
  return 2.0 / (c * (l + 2.0)) * tail;
}

ConformanceReport ring_conformance(const Spectrum& spectrum,
                                   const RingParams& params, double tol) {
  if (spectrum.empty()) throw EmptySpectrum();
  if (!(tol >= 0.0)) throw InvalidArgument("tolerance must be >= 0");
  ConformanceReport report;
  report.inner_bound = params.inner_radius() - tol;
  report.outer_bound = RingParams::outer_radius() + tol;
  report.total = spectrum.radii.size();
  const auto [lo, hi] =
      std::minmax_element(spectrum.radii.begin(), spectrum.radii.end());
  report.min_radius = *lo;
  report.max_radius = *hi;
  for (double r : spectrum.radii) {
    if (r >= report.inner_bound && r <= report.outer_bound) ++report.inside;
  }
  report.fraction =
      static_cast<double>(report.inside) / static_cast<double>(report.total);
  return report;
}

}  // namespace ringlaw
