#include "ringlaw/ring_check.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "ringlaw/error.hpp"
#include "ringlaw/parallel.hpp"

namespace ringlaw {

namespace {

DataWindow gaussian_window(Eigen::Index n, Eigen::Index t, Seed seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd values(n, t);
  for (Eigen::Index j = 0; j < t; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) values(i, j) = normal(rng);
  }
  std::vector<BusId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 1);
  return DataWindow(std::move(values), std::move(ids), t);
}

}  // namespace

RingCheckReport ring_check(const RingCheckConfig& config) {
  if (config.trials < 1) throw InvalidArgument("ring check needs >= 1 trial");
  const RingParams params(config.n, config.t, config.factors);
  RingCheckReport report;
  report.config = config;
  report.ratio = params.ratio();
  report.inner_radius = params.inner_radius();
  report.expected_msr = expected_msr(params);
  report.trials.resize(static_cast<std::size_t>(config.trials));
  std::vector<Spectrum> spectra(report.trials.size());

  parallel_for(report.trials.size(), config.threads, [&](std::size_t k) {
    const auto trial = static_cast<TimeIndex>(k);
    std::vector<SingularEquivalent> factors;
    for (int i = 0; i < config.factors; ++i) {
      const auto window = gaussian_window(
          config.n, config.t, derive_seed(config.seed, trial, i, "data"));
      factors.push_back(singular_value_equivalent(
          standardize_rows(window),
          derive_seed(config.seed, trial, i, "unitary")));
    }
    spectra[k] = eigenvalues(normalize_product_rows(ring_product(factors)));
    report.trials[k].msr = msr(spectra[k]);
    report.trials[k].conformance = ring_conformance(spectra[k], params, config.tol);
  });

  double sum = 0.0;
  std::size_t inside = 0;
  std::size_t total = 0;
  for (const auto& trial : report.trials) {
    sum += trial.msr;
    inside += trial.conformance.inside;
    total += trial.conformance.total;
  }
  const auto count = static_cast<double>(report.trials.size());
  report.msr_mean = sum / count;
  double squares = 0.0;
  for (const auto& trial : report.trials) {
    squares += (trial.msr - report.msr_mean) * (trial.msr - report.msr_mean);
  }
  report.msr_std = report.trials.size() > 1 ? std::sqrt(squares / (count - 1.0)) : 0.0;
  report.annulus_fraction = static_cast<double>(inside) / static_cast<double>(total);
  report.first_spectrum = std::move(spectra.front());
  return report;
}

}  // namespace ringlaw
