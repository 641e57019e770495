// Checks of the standing hypotheses on a kernel pair (alpha, k = 1/alpha) and
// the side conditions on weights, each returning a ConditionReport.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hered/report.hpp"
#include "hered/series.hpp"

namespace hered {

struct CircleScan {
  double radius = 0.0;
  double min_modulus = 0.0;
  double argmin_angle = 0.0;
  long winding = 0;
};
// Samples the truncated polynomial on |z| = r; winding is the sampled argument increment / 2pi.
CircleScan circle_scan(const TruncatedSeries& f, double r, std::size_t samples);

ConditionReport check_hypotheses_A(const KernelPair& pair, std::size_t circle_samples = 4096);
ConditionReport check_hypotheses_B(const KernelPair& pair);
ConditionReport classify_np(const TruncatedSeries& alpha);
ConditionReport classify_critical(const KernelPair& pair);

// Empty m_grid picks powers of two up to N/4.
ConditionReport muller_condition_estimate(const TruncatedSeries& k, std::vector<std::size_t> m_grid = {});
ConditionReport muller_sufficient_check(const TruncatedSeries& k, const std::vector<double>& a_grid);

ConditionReport banach_algebra_condition(const TruncatedSeries& omega);
ConditionReport tau_condition_check(const TruncatedSeries& omega);
ConditionReport reciprocal_summability_check(const TruncatedSeries& omega);

// omega_n^{1/n} at n in {N/4, N/2, 3N/4, N}; `within` when all lie in |x - 1| <= band.
struct RootSamples {
  std::vector<std::pair<std::size_t, double>> samples;
  bool within = false;
};
RootSamples root_samples(const TruncatedSeries& omega, double band = 0.02);

ConditionReport holder_exponent_estimate(const TruncatedSeries& k, const std::vector<double>& s_grid);

struct SignPattern {
  std::vector<int> signs;  // entry i is the sign wanted for alpha_{i+2}
  double epsilon = 1e-3;
  double tail_amplitude = 0.05;
  double tail_exponent = 2.0;
};
// "+-+" style text; anything but '+'/'-' is invalid-argument.
SignPattern parse_sign_pattern(const std::string& text, double epsilon = 1e-3, double A = 0.05,
                               double b = 2.0);

struct GeneratedKernel {
  KernelPair pair;
  ConditionReport report;
};
GeneratedKernel generate_sign_pattern_kernel(const SignPattern& pattern, std::size_t N_total);

}  // namespace hered
