#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpp/measure.hpp"

namespace dpp {

struct LsqOptions {
  int max_iterations{100};
  double step_tol{1e-12};  ///< relative accepted-step size that stops iteration
};

struct LsqResult {
  Eigen::VectorXd x;
  double residual_rms{0.0};
  int iterations{0};
  bool step_converged{false};
  std::vector<double> accepted_rms;  ///< rms after every accepted iterate
};

/// Gauss-Newton with Levenberg damping on stall. A step is accepted only if
/// it does not increase the residual norm. `fn` fills r and J at x.
using ResidualFn =
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&,
                       Eigen::MatrixXd&)>;
LsqResult levenberg_gauss_newton(const ResidualFn& fn, Eigen::VectorXd x0,
                                 const LsqOptions& opt = {});

/// Converged means the residual is below this, expressed in seconds.
inline constexpr double kConvergedResidualTol = 1e-10;

struct PositionEstimate {
  NodeId node;
  Vec3 position{Vec3::Zero()};
  double residual_rms_s{0.0};
  double residual_rms_m{0.0};
  int iterations{0};
  bool converged{false};
  /// Further solutions whose residuals tie with the primary one (reflection
  /// ambiguity with minimal constraint counts).
  std::vector<Vec3> alternates;
};

/// Trilateration: nonlinear least squares on ||p - a_i|| - d_i over the
/// distances involving `unknown`. Needs at least dimension + 1 anchors.
/// `signal_speed` only converts the residual to seconds for reporting.
PositionEstimate solve_toa(const std::map<PairKey, double>& distances_m,
                           const std::map<NodeId, Vec3>& anchors_m,
                           NodeId unknown, int dimension,
                           double signal_speed = kRadioSignalSpeed);

/// One hyperbolic constraint: (||p - P(second)|| - ||p - P(first)||) / v
/// should equal value_s.
struct TdoaConstraint {
  NodeId first, second;
  double value_s;
};

/// Hyperbolic multilateration via damped Gauss-Newton, seeded at the anchor
/// centroid (plus deterministic extra starts to surface ambiguous ties).
/// Needs at least dimension + 1 values.
PositionEstimate solve_tdoa(const std::vector<TdoaConstraint>& tdoas,
                            const std::map<NodeId, Vec3>& anchors_m,
                            NodeId unknown, double signal_speed,
                            int dimension);

struct GaugeFixing {
  NodeId origin;       ///< placed at the origin
  NodeId axis;         ///< placed on the positive first axis
  NodeId orientation;  ///< placed in the positive half-plane
};

struct RelativeFrame {
  std::map<NodeId, Vec3> coordinates;  // meters
  GaugeFixing gauge;
  double residual_rms_m{0.0};  ///< rms distance misfit of the embedding
};

/// Embeds a complete pairwise distance set via classical metric scaling
/// (double centering) refined by damped Gauss-Newton, then fixes the gauge:
/// first node at the origin, second on the positive first axis, third in
/// the positive half-plane. Deterministic in the input set.
RelativeFrame embed_relative(const std::map<PairKey, double>& distances_m,
                             const std::vector<NodeId>& nodes, int dimension);

struct PipelineResult {
  RelativeFrame frame;
  std::map<NodeId, PositionEstimate> estimates;
  std::vector<std::pair<NodeId, std::string>> unsolved;
};

/// Mobile positioning without infrastructure: embeds the Bilaterals from
/// their ToA distances, then solves every Passive/Active node from its
/// TDoA values in that frame. Targets with too few values are reported
/// unsolved; the rest are still returned.
PipelineResult pipeline_mobile(const MeasurementSet& measurements,
                               const System& system);

struct ProcrustesResult {
  double rms_m{0.0};
  bool reflection_used{false};
  bool degenerate{false};  ///< truth (or estimate) set is rank deficient
};

/// Residual RMS after the optimal rigid alignment (rotation + translation,
/// reflection optional) of `estimate` onto `truth`. Same node sets, >= 3.
ProcrustesResult procrustes_align(const std::map<NodeId, Vec3>& estimate,
                                  const std::map<NodeId, Vec3>& truth,
                                  int dimension, bool allow_reflection = true);

enum class SolveMode { Absolute, Relative };

struct SolveReport {
  SolveMode mode{SolveMode::Absolute};
  std::optional<RelativeFrame> frame;
  std::map<NodeId, PositionEstimate> estimates;
  std::map<NodeId, Vec3> positions;  ///< anchors/frame plus solved targets
  std::vector<std::pair<NodeId, std::string>> unsolved;
};

/// Scenario-level dispatch: absolute solving against configured anchor
/// positions when at least dimension + 1 nodes have known positions,
/// otherwise the relative mobile pipeline.
SolveReport solve_scenario(const System& system, const MeasurementSet& ms);

}  // namespace dpp
