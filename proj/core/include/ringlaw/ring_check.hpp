#pragma once

#include <vector>

#include "ringlaw/rmt.hpp"

namespace ringlaw {

struct RingCheckConfig {
  Eigen::Index n = 400;
  Eigen::Index t = 1000;
  int factors = 1;
  int trials = 10;
  Seed seed = 0;
  double tol = 0.05;
  unsigned threads = 0;
};

struct RingCheckTrial {
  double msr = 0.0;
  ConformanceReport conformance;
};

struct RingCheckReport {
  RingCheckConfig config;
  double ratio = 0.0;
  double inner_radius = 0.0;
  double expected_msr = 0.0;
  double msr_mean = 0.0;
  double msr_std = 0.0;  // sample standard deviation over trials
  double annulus_fraction = 0.0;  // pooled over all trials
  std::vector<RingCheckTrial> trials;
  Spectrum first_spectrum;  // spectrum of trial 0, for plotting
};

/// Monte Carlo check of the single-ring law: every trial draws L independent
/// i.i.d. N(0,1) windows of size n x t and runs the full transform pipeline.
RingCheckReport ring_check(const RingCheckConfig& config);

}  // namespace ringlaw
