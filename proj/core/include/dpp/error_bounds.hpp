#pragma once

#include <cstdint>
#include <vector>

#include "dpp/measure.hpp"

namespace dpp {

/// Worst-case clock-drift error of the combined mu value:
/// (eps_x + eps_z) / 2 * mu_true.
double mu_error_bound(double eps_x, double eps_z, double mu_true_s);

/// Worst-case TDoA error: (eps_x + eps_z) * d_xz.
double tdoa_error_bound(double eps_x, double eps_z, double d_xz_s);

/// Worst-case ToA error: (eps_x + eps_z) / 2 * d_xz. Half the TDoA bound.
double toa_error_bound(double eps_x, double eps_z, double d_xz_s);

struct DjkmErrorParams {
  double response_delay_s{1e-3};  ///< D_B, typically milliseconds
  double eps_t{kDefaultMaxDrift};
  double eps_b{-kDefaultMaxDrift};
};

/// DJKM worst-case TDoA error: D_B * (eps_t - eps_b).
double djkm_error_estimate(const DjkmErrorParams& params);

enum class BoundQuantity { Mu, Tdoa, Toa };

const char* to_string(BoundQuantity q);

struct ErrorBoundConfig {
  int trials{1000};
  double eps_max{kDefaultMaxDrift};
  double offset_range_s{1.0};  ///< per-node offsets drawn uniform in +/- this
  std::uint64_t seed{1};
  bool keep_per_trial{true};
};

struct TrialError {
  int trial;
  double abs_error_s;  ///< worst tuple of the trial
  double bound_s;      ///< its per-tuple analytic bound (no slack)
};

struct ErrorBoundReport {
  BoundQuantity quantity{BoundQuantity::Mu};
  double analytic_bound_s{0.0};  ///< worst case at eps_max over the geometry
  double observed_max_abs_error_s{0.0};
  int trials{0};
  double slack_s{0.0};  ///< kappa = eps_max^2 * cycle span
  bool passed{false};
  std::int64_t first_violation_trial{-1};
  std::vector<TrialError> per_trial;
};

/// Monte-Carlo validation of the analytic bounds: per trial, draws each
/// node's drift uniform in [-eps_max, eps_max] and a random offset,
/// simulates one jitter-free cycle, and compares |measured - true| against
/// the per-tuple bound plus slack. Requires cfg.timestamp_jitter_sd_s == 0.
ErrorBoundReport empirical_error_report(const System& system,
                                        const ProtocolConfig& cfg,
                                        BoundQuantity quantity,
                                        const ErrorBoundConfig& mc);

/// Sets every drift to +eps, simulates, and returns the largest ratio of
/// observed ToA error to its analytic bound over Bilateral pairs. Equal
/// drifts make the bound tight, so the ratio sits just below 1.
double toa_worst_case_attainment(const System& system,
                                 const ProtocolConfig& cfg, double eps);

}  // namespace dpp
