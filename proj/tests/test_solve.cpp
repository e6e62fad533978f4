#include <cmath>
#include <random>

#include <doctest.h>

#include "dpp/scenario.hpp"
#include "dpp/solve.hpp"
#include "support/fixtures.hpp"

using namespace dpp;
using dpp::testing::fig8e_system;
using dpp::testing::make_node;

namespace {

CycleTrace trace_of(const System& sys, ProtocolConfig cfg = {}) {
  return simulate_cycle(sys, build_dpp_schedule(sys, cfg), cfg, 0);
}

/// Exhaustive rigid-alignment oracle for tiny point sets: scans rotation
/// angle (and reflection), translation solved in closed form per angle.
double procrustes_oracle_2d(const std::map<NodeId, Vec3>& estimate,
                            const std::map<NodeId, Vec3>& truth) {
  std::vector<Eigen::Vector2d> p, q;
  for (const auto& [id, pos] : estimate) {
    p.push_back(pos.head<2>());
    q.push_back(truth.at(id).head<2>());
  }
  Eigen::Vector2d pc = Eigen::Vector2d::Zero(), qc = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    pc += p[i];
    qc += q[i];
  }
  pc /= static_cast<double>(p.size());
  qc /= static_cast<double>(q.size());

  const auto rms_at = [&](double theta, bool mirror) {
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta),
        std::cos(theta);
    if (mirror) rot.col(1) = -rot.col(1);
    double ss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ss += (rot * (p[i] - pc) - (q[i] - qc)).squaredNorm();
    }
    return std::sqrt(ss / static_cast<double>(p.size()));
  };

  double best = 1e300;
  for (int mirror = 0; mirror < 2; ++mirror) {
    double center = 0.0;
    double span = M_PI;  // scan [-pi, pi), then narrow around the best
    double local_best = 1e300;
    for (int level = 0; level < 5; ++level) {
      double local_arg = center;
      for (int step = -2000; step <= 2000; ++step) {
        const double theta = center + span * step / 2000.0;
        const double r = rms_at(theta, mirror != 0);
        if (r < local_best) {
          local_best = r;
          local_arg = theta;
        }
      }
      center = local_arg;
      span = span / 500.0;
    }
    best = std::min(best, local_best);
  }
  return best;
}

}  // namespace

TEST_SUITE("solve") {

TEST_CASE("accepted Gauss-Newton iterates never increase the residual") {
  const auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                     Eigen::MatrixXd& J) {
    r.resize(2);
    J.resize(2, 2);
    r(0) = x(0) * x(0) + x(1) - 11.0;  // Himmelblau-style surface
    r(1) = x(0) + x(1) * x(1) - 7.0;
    J << 2.0 * x(0), 1.0, 1.0, 2.0 * x(1);
  };
  Eigen::VectorXd x0(2);
  x0 << -4.0, 6.0;
  const LsqResult res = levenberg_gauss_newton(fn, x0);
  REQUIRE(res.accepted_rms.size() > 1);
  for (std::size_t i = 1; i < res.accepted_rms.size(); ++i) {
    CHECK(res.accepted_rms[i] <= res.accepted_rms[i - 1]);
  }
  CHECK(res.residual_rms < 1e-10);
}

TEST_CASE("solve_toa recovers a point from unit-square corner anchors") {
  const std::map<NodeId, Vec3> anchors{
      {NodeId{0}, Vec3(0, 0, 0)},
      {NodeId{1}, Vec3(1, 0, 0)},
      {NodeId{2}, Vec3(1, 1, 0)},
      {NodeId{3}, Vec3(0, 1, 0)},
  };
  const NodeId unknown{9};

  SUBCASE("interior point") {
    const Vec3 truth(0.3, 0.7, 0);
    std::map<PairKey, double> d;
    for (const auto& [id, pos] : anchors) {
      d[PairKey::make(unknown, id)] = (truth - pos).norm();
    }
    const PositionEstimate est = solve_toa(d, anchors, unknown, 2);
    CHECK((est.position - truth).norm() < 1e-9);
    CHECK(est.converged);
  }
  SUBCASE("unknown on a corner, zero distance included") {
    const Vec3 truth(1, 1, 0);
    std::map<PairKey, double> d;
    for (const auto& [id, pos] : anchors) {
      d[PairKey::make(unknown, id)] = (truth - pos).norm();
    }
    const PositionEstimate est = solve_toa(d, anchors, unknown, 2);
    CHECK((est.position - truth).norm() < 1e-6);
  }
  SUBCASE("two anchors are not enough in 2D") {
    std::map<PairKey, double> d{
        {PairKey::make(unknown, NodeId{0}), 1.0},
        {PairKey::make(unknown, NodeId{1}), 1.0},
    };
    CHECK_THROWS_AS(solve_toa(d, anchors, unknown, 2),
                    InsufficientInputError);
  }
}

TEST_CASE("solve_tdoa recovers the fig8e Passive from exact values") {
  const System sys = fig8e_system();
  const double v = sys.signal_speed();
  const Vec3 truth(2, 3, 0);
  std::map<NodeId, Vec3> anchors;
  for (std::uint32_t i = 0; i < 4; ++i) {
    anchors[NodeId{i}] = sys.node(NodeId{i}).position;
  }
  std::vector<TdoaConstraint> tdoas;
  for (std::uint32_t i = 0; i < 4; ++i) {
    for (std::uint32_t j = i + 1; j < 4; ++j) {
      const double value = ((truth - anchors[NodeId{j}]).norm() -
                            (truth - anchors[NodeId{i}]).norm()) /
                           v;
      tdoas.push_back({NodeId{i}, NodeId{j}, value});
    }
  }
  const PositionEstimate est = solve_tdoa(tdoas, anchors, NodeId{4}, v, 2);
  CHECK((est.position - truth).norm() < 1e-6);
  CHECK(est.converged);
  CHECK(est.alternates.empty());
}

TEST_CASE("solve_tdoa at the centroid of symmetric anchors") {
  std::map<NodeId, Vec3> anchors{
      {NodeId{0}, Vec3(0, 0, 0)},
      {NodeId{1}, Vec3(10, 0, 0)},
      {NodeId{2}, Vec3(10, 10, 0)},
      {NodeId{3}, Vec3(0, 10, 0)},
  };
  std::vector<TdoaConstraint> tdoas{
      {NodeId{0}, NodeId{2}, 0.0},
      {NodeId{1}, NodeId{3}, 0.0},
      {NodeId{0}, NodeId{1}, 0.0},
      {NodeId{2}, NodeId{3}, 0.0},
  };
  const PositionEstimate est = solve_tdoa(tdoas, anchors, NodeId{4}, 1.0, 2);
  CHECK((est.position - Vec3(5, 5, 0)).norm() < 1e-9);
  CHECK(est.converged);

  CHECK_THROWS_AS(
      solve_tdoa({{NodeId{0}, NodeId{1}, 0.0}, {NodeId{0}, NodeId{2}, 0.0}},
                 anchors, NodeId{4}, 1.0, 2),
      InsufficientInputError);
}

TEST_CASE("collinear anchors leave a mirrored tie") {
  std::map<NodeId, Vec3> anchors{
      {NodeId{0}, Vec3(0, 0, 0)},
      {NodeId{1}, Vec3(4, 0, 0)},
      {NodeId{2}, Vec3(10, 0, 0)},
  };
  const Vec3 truth(2, 3, 0);
  std::vector<TdoaConstraint> tdoas;
  const std::pair<std::uint32_t, std::uint32_t> pairs[] = {{0, 1}, {0, 2},
                                                           {1, 2}};
  for (const auto& [i, j] : pairs) {
    tdoas.push_back({NodeId{i}, NodeId{j},
                     (truth - anchors[NodeId{j}]).norm() -
                         (truth - anchors[NodeId{i}]).norm()});
  }
  const PositionEstimate est = solve_tdoa(tdoas, anchors, NodeId{4}, 1.0, 2);
  const Vec3 mirror(2, -3, 0);
  const bool primary_is_truth = (est.position - truth).norm() < 1e-6;
  const bool primary_is_mirror = (est.position - mirror).norm() < 1e-6;
  CHECK((primary_is_truth || primary_is_mirror));
  REQUIRE(est.alternates.size() == 1);
  const Vec3 other = primary_is_truth ? mirror : truth;
  CHECK((est.alternates[0] - other).norm() < 1e-6);
}

TEST_CASE("embed_relative reproduces a 3-4-5 triangle") {
  const std::vector<NodeId> nodes{NodeId{1}, NodeId{2}, NodeId{3}};
  const std::map<PairKey, double> d{
      {PairKey::make(NodeId{1}, NodeId{2}), 5.0},
      {PairKey::make(NodeId{1}, NodeId{3}), 4.0},
      {PairKey::make(NodeId{2}, NodeId{3}), 3.0},
  };
  const RelativeFrame frame = embed_relative(d, nodes, 2);

  // Gauge: node1 at the origin, node2 on +x, node3 in the upper half-plane.
  CHECK(frame.coordinates.at(NodeId{1}).norm() == 0.0);
  CHECK(frame.coordinates.at(NodeId{2}).y() == 0.0);
  CHECK(frame.coordinates.at(NodeId{2}).x() > 0.0);
  CHECK(frame.coordinates.at(NodeId{3}).y() > 0.0);
  CHECK((frame.coordinates.at(NodeId{2}) - Vec3(5, 0, 0)).norm() < 1e-9);
  CHECK((frame.coordinates.at(NodeId{3}) - Vec3(3.2, 2.4, 0)).norm() < 1e-9);

  // Validated by reconstructing every pairwise distance.
  for (const auto& [pair, dist] : d) {
    CHECK(std::abs((frame.coordinates.at(pair.a) - frame.coordinates.at(pair.b))
                       .norm() -
                   dist) < 1e-9);
  }
  CHECK(frame.residual_rms_m < 1e-9);
}

TEST_CASE("embed_relative on an equilateral triangle") {
  const std::vector<NodeId> nodes{NodeId{0}, NodeId{1}, NodeId{2}};
  std::map<PairKey, double> d;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      d[PairKey::make(nodes[i], nodes[j])] = 1.0;
    }
  }
  const RelativeFrame frame = embed_relative(d, nodes, 2);
  for (const auto& [pair, dist] : d) {
    CHECK(std::abs((frame.coordinates.at(pair.a) - frame.coordinates.at(pair.b))
                       .norm() -
                   1.0) < 1e-9);
  }
}

TEST_CASE("embed_relative is deterministic") {
  const std::vector<NodeId> nodes{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
  std::map<PairKey, double> d;
  const Vec3 truth[4] = {Vec3(0, 0, 0), Vec3(8, 1, 0), Vec3(7, 9, 0),
                         Vec3(-1, 6, 0)};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      d[PairKey::make(nodes[i], nodes[j])] = (truth[i] - truth[j]).norm();
    }
  }
  const RelativeFrame a = embed_relative(d, nodes, 2);
  const RelativeFrame b = embed_relative(d, nodes, 2);
  for (const auto& [id, pos] : a.coordinates) {
    CHECK(pos == b.coordinates.at(id));
  }
}

TEST_CASE("embed_relative reports inconsistency instead of hiding it") {
  const std::vector<NodeId> nodes{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
  std::map<PairKey, double> d;
  const Vec3 truth[4] = {Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(10, 10, 0),
                         Vec3(0, 10, 0)};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      d[PairKey::make(nodes[i], nodes[j])] = (truth[i] - truth[j]).norm();
    }
  }
  d[PairKey::make(NodeId{0}, NodeId{1})] *= 1.1;  // one distance +10%
  const RelativeFrame frame = embed_relative(d, nodes, 2);
  CHECK(frame.residual_rms_m > 1e-3);
  CHECK(frame.residual_rms_m < 1.0);
}

TEST_CASE("embed_relative rejects unembeddable sets") {
  const std::vector<NodeId> nodes{NodeId{0}, NodeId{1}, NodeId{2}};
  const std::map<PairKey, double> d{
      {PairKey::make(NodeId{0}, NodeId{1}), 10.0},
      {PairKey::make(NodeId{0}, NodeId{2}), 1.0},
      {PairKey::make(NodeId{1}, NodeId{2}), 1.0},
  };
  CHECK_THROWS_AS(embed_relative(d, nodes, 2), MetricFeasibilityError);

  const std::map<PairKey, double> incomplete{
      {PairKey::make(NodeId{0}, NodeId{1}), 1.0},
      {PairKey::make(NodeId{0}, NodeId{2}), 1.0},
  };
  CHECK_THROWS_AS(embed_relative(incomplete, nodes, 2),
                  InsufficientInputError);
}

TEST_CASE("procrustes_align basics") {
  std::map<NodeId, Vec3> truth{
      {NodeId{0}, Vec3(0, 0, 0)},
      {NodeId{1}, Vec3(4, 0, 0)},
      {NodeId{2}, Vec3(1, 3, 0)},
  };
  SUBCASE("identity") {
    CHECK(procrustes_align(truth, truth, 2).rms_m == doctest::Approx(0.0));
  }
  SUBCASE("rotation and translation vanish") {
    std::map<NodeId, Vec3> moved;
    const double c = std::cos(M_PI / 2.0), s = std::sin(M_PI / 2.0);
    for (const auto& [id, p] : truth) {
      moved[id] = Vec3(c * p.x() - s * p.y() + 7.0,
                       s * p.x() + c * p.y() - 2.0, 0);
    }
    CHECK(procrustes_align(moved, truth, 2).rms_m < 1e-12);
  }
  SUBCASE("reflection is absorbed when allowed") {
    std::map<NodeId, Vec3> mirrored;
    for (const auto& [id, p] : truth) mirrored[id] = Vec3(p.x(), -p.y(), 0);
    const ProcrustesResult with = procrustes_align(mirrored, truth, 2, true);
    CHECK(with.rms_m < 1e-12);
    CHECK(with.reflection_used);
    const ProcrustesResult without =
        procrustes_align(mirrored, truth, 2, false);
    CHECK(without.rms_m > 0.1);
  }
  SUBCASE("collinear truth is flagged degenerate") {
    std::map<NodeId, Vec3> line{
        {NodeId{0}, Vec3(0, 0, 0)},
        {NodeId{1}, Vec3(1, 0, 0)},
        {NodeId{2}, Vec3(2, 0, 0)},
    };
    CHECK(procrustes_align(line, line, 2).degenerate);
  }
  SUBCASE("node set mismatch") {
    std::map<NodeId, Vec3> other = truth;
    other.erase(NodeId{2});
    other[NodeId{7}] = Vec3(1, 1, 0);
    CHECK_THROWS_AS(procrustes_align(other, truth, 2), InvalidInputError);
  }
}

TEST_CASE("procrustes matches the brute-force oracle on a 1 mm offset") {
  // Equilateral triangle; the third vertex moves 1 mm radially away from
  // the centroid, which rotation cannot absorb.
  std::map<NodeId, Vec3> truth;
  for (int i = 0; i < 3; ++i) {
    const double ang = 2.0 * M_PI * i / 3.0 + M_PI / 2.0;
    truth[NodeId{static_cast<std::uint32_t>(i)}] =
        Vec3(std::cos(ang), std::sin(ang), 0);
  }
  std::map<NodeId, Vec3> estimate = truth;
  const Vec3 radial = truth.at(NodeId{2}).normalized();
  estimate[NodeId{2}] += 1e-3 * radial;

  const double impl = procrustes_align(estimate, truth, 2).rms_m;
  const double oracle = procrustes_oracle_2d(estimate, truth);
  CHECK(impl == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(impl == doctest::Approx(std::sqrt(2.0) / 3.0 * 1e-3).epsilon(1e-6));
}

TEST_CASE("mobile pipeline recovers a 3-Bilateral scene up to rigid motion") {
  // fig8h-style: three mobile Bilaterals plus one Passive, nothing surveyed.
  const System sys(
      {
          make_node(0, NodeRole::Bilateral, 0, 0, 0, false, 0.15),
          make_node(1, NodeRole::Bilateral, 10, 0, 0, false, -0.4),
          make_node(2, NodeRole::Bilateral, 5, 8, 0, false, 2.0),
          make_node(3, NodeRole::Passive, 4, 3, 0, false, 0.7),
      },
      kRadioSignalSpeed, 2);
  const MeasurementSet ms = full_cycle_measurements(trace_of(sys));
  const PipelineResult result = pipeline_mobile(ms, sys);

  CHECK(result.unsolved.empty());
  REQUIRE(result.estimates.count(NodeId{3}) == 1);
  CHECK(result.estimates.at(NodeId{3}).converged);

  std::map<NodeId, Vec3> estimate = result.frame.coordinates;
  estimate[NodeId{3}] = result.estimates.at(NodeId{3}).position;
  std::map<NodeId, Vec3> truth;
  for (const Node& n : sys.nodes()) truth[n.id] = n.position;
  CHECK(procrustes_align(estimate, truth, 2).rms_m < 1e-6);
}

TEST_CASE("mobile pipeline with four Bilaterals and mixed targets") {
  // fig8g-style: four mobile Bilaterals, one Passive and one Active target.
  const System sys(
      {
          make_node(0, NodeRole::Bilateral, 1, 1, 0, false, -0.3),
          make_node(1, NodeRole::Bilateral, 9, 2, 0, false, 0.9),
          make_node(2, NodeRole::Bilateral, 8, 9, 0, false, 0.0),
          make_node(3, NodeRole::Bilateral, 0, 8, 0, false, 5.5),
          make_node(4, NodeRole::Passive, 4, 3, 0, false, -1.1),
          make_node(5, NodeRole::Active, 6, 7, 0, false, 0.2),
      },
      kRadioSignalSpeed, 2);
  const MeasurementSet ms = full_cycle_measurements(trace_of(sys));
  const PipelineResult result = pipeline_mobile(ms, sys);

  CHECK(result.unsolved.empty());
  std::map<NodeId, Vec3> estimate = result.frame.coordinates;
  std::map<NodeId, Vec3> truth;
  for (const Node& n : sys.nodes()) truth[n.id] = n.position;
  for (const auto& [id, est] : result.estimates) {
    CHECK(est.converged);
    estimate[id] = est.position;
  }
  REQUIRE(estimate.size() == truth.size());
  CHECK(procrustes_align(estimate, truth, 2).rms_m < 1e-6);
}

TEST_CASE("mobile pipeline preconditions and partial results") {
  const System two_bilaterals(
      {
          make_node(0, NodeRole::Bilateral, 0, 0),
          make_node(1, NodeRole::Bilateral, 10, 0),
          make_node(2, NodeRole::Passive, 4, 3),
      },
      kRadioSignalSpeed, 2);
  const MeasurementSet ms =
      full_cycle_measurements(trace_of(two_bilaterals));
  CHECK_THROWS_AS(pipeline_mobile(ms, two_bilaterals),
                  InsufficientInputError);

  // A target whose mu values were lost is reported unsolved, the rest kept.
  const System sys(
      {
          make_node(0, NodeRole::Bilateral, 0, 0),
          make_node(1, NodeRole::Bilateral, 10, 0),
          make_node(2, NodeRole::Bilateral, 5, 8),
          make_node(3, NodeRole::Passive, 4, 3),
          make_node(4, NodeRole::Passive, 6, 2),
      },
      kRadioSignalSpeed, 2);
  MeasurementSet partial = full_cycle_measurements(trace_of(sys));
  for (auto it = partial.mu.begin(); it != partial.mu.end();) {
    it = it->first.x == NodeId{4} ? partial.mu.erase(it) : std::next(it);
  }
  const PipelineResult result = pipeline_mobile(partial, sys);
  REQUIRE(result.unsolved.size() == 1);
  CHECK(result.unsolved[0].first == NodeId{4});
  CHECK(result.estimates.count(NodeId{3}) == 1);
}

TEST_CASE("solve_scenario picks the right mode") {
  const System abs_sys = fig8e_system();
  const SolveReport abs_report =
      solve_scenario(abs_sys, full_cycle_measurements(trace_of(abs_sys)));
  CHECK(abs_report.mode == SolveMode::Absolute);
  REQUIRE(abs_report.estimates.count(NodeId{4}) == 1);
  CHECK((abs_report.estimates.at(NodeId{4}).position - Vec3(2, 3, 0)).norm() <
        1e-6);

  const System rel_sys(
      {
          make_node(0, NodeRole::Bilateral, 0, 0),
          make_node(1, NodeRole::Bilateral, 10, 0),
          make_node(2, NodeRole::Bilateral, 5, 8),
          make_node(3, NodeRole::Passive, 4, 3),
      },
      kRadioSignalSpeed, 2);
  const SolveReport rel_report =
      solve_scenario(rel_sys, full_cycle_measurements(trace_of(rel_sys)));
  CHECK(rel_report.mode == SolveMode::Relative);
  CHECK(rel_report.frame.has_value());
  CHECK(rel_report.positions.size() == 4);
}

TEST_CASE("bilateral target in absolute mode is trilaterated from ToA") {
  System sys(
      {
          make_node(0, NodeRole::Bilateral, 0, 0, 0, true),
          make_node(1, NodeRole::Bilateral, 10, 0, 0, true),
          make_node(2, NodeRole::Bilateral, 10, 10, 0, true),
          make_node(3, NodeRole::Bilateral, 0, 10, 0, true),
          make_node(4, NodeRole::Bilateral, 7, 2, 0, false, 0.8),
      },
      kRadioSignalSpeed, 2);
  const SolveReport report =
      solve_scenario(sys, full_cycle_measurements(trace_of(sys)));
  REQUIRE(report.estimates.count(NodeId{4}) == 1);
  CHECK((report.estimates.at(NodeId{4}).position - Vec3(7, 2, 0)).norm() <
        1e-6);
}

TEST_CASE("every surveyed fixture solves its target to micrometers") {
  // fig8a-f: varied role mixes around one unsurveyed target node.
  struct Fixture {
    const char* file;
    std::uint32_t target;
    Vec3 truth;
  };
  const Fixture fixtures[] = {
      {"fig8a.json", 3, Vec3(4, 3, 0)}, {"fig8b.json", 0, Vec3(4, 3, 0)},
      {"fig8c.json", 4, Vec3(4, 3, 0)}, {"fig8d.json", 4, Vec3(4, 3, 0)},
      {"fig8e.json", 4, Vec3(2, 3, 0)}, {"fig8f.json", 5, Vec3(2, 3, 0)},
  };
  for (const Fixture& f : fixtures) {
    CAPTURE(f.file);
    const Scenario s =
        load_scenario(std::string(DPP_SCENARIO_DIR) + "/" + f.file);
    const auto traces = simulate(s.system, s.protocol);
    const SolveReport report =
        solve_scenario(s.system, full_cycle_measurements(traces.front()));
    CHECK(report.mode == SolveMode::Absolute);
    REQUIRE(report.estimates.count(NodeId{f.target}) == 1);
    const PositionEstimate& est = report.estimates.at(NodeId{f.target});
    CHECK(est.converged);
    CHECK((est.position - f.truth).norm() < 1e-6);
  }
}

TEST_CASE("solvers work in three dimensions") {
  std::map<NodeId, Vec3> anchors{
      {NodeId{0}, Vec3(0, 0, 0)},  {NodeId{1}, Vec3(10, 0, 0)},
      {NodeId{2}, Vec3(0, 10, 0)}, {NodeId{3}, Vec3(0, 0, 10)},
      {NodeId{4}, Vec3(10, 10, 10)},
  };
  const Vec3 truth(3, 4, 5);

  std::map<PairKey, double> ranges;
  for (const auto& [id, pos] : anchors) {
    ranges[PairKey::make(NodeId{9}, id)] = (truth - pos).norm();
  }
  const PositionEstimate toa = solve_toa(ranges, anchors, NodeId{9}, 3);
  CHECK((toa.position - truth).norm() < 1e-6);

  std::vector<TdoaConstraint> tdoas;
  for (std::uint32_t i = 0; i < 5; ++i) {
    for (std::uint32_t j = i + 1; j < 5; ++j) {
      tdoas.push_back({NodeId{i}, NodeId{j},
                       (truth - anchors[NodeId{j}]).norm() -
                           (truth - anchors[NodeId{i}]).norm()});
    }
  }
  const PositionEstimate tdoa = solve_tdoa(tdoas, anchors, NodeId{9}, 1.0, 3);
  CHECK((tdoa.position - truth).norm() < 1e-6);

  // Tetrahedron embedding reconstructs all six distances.
  const std::vector<NodeId> nodes{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
  std::map<PairKey, double> d;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      d[PairKey::make(nodes[i], nodes[j])] =
          (anchors[nodes[i]] - anchors[nodes[j]]).norm();
    }
  }
  const RelativeFrame frame = embed_relative(d, nodes, 3);
  for (const auto& [pair, dist] : d) {
    CHECK(std::abs((frame.coordinates.at(pair.a) -
                    frame.coordinates.at(pair.b))
                       .norm() -
                   dist) < 1e-9);
  }
  CHECK(frame.coordinates.at(NodeId{0}).norm() == 0.0);
  CHECK(frame.coordinates.at(NodeId{1}).y() == 0.0);
  CHECK(frame.coordinates.at(NodeId{1}).z() == 0.0);
  CHECK(frame.coordinates.at(NodeId{2}).z() == 0.0);
}

TEST_CASE("grid-search oracle validates the 1 cm drift tolerance on fig8e") {
  // All clocks at +20 ppm: worst case for the analytic bounds. The oracle
  // scans positions directly, independent of the Gauss-Newton path.
  std::vector<Node> nodes = fig8e_system().nodes();
  for (Node& n : nodes) n.clock.drift = kDefaultMaxDrift;
  const System sys(nodes, kRadioSignalSpeed, 2);
  const MeasurementSet ms = full_cycle_measurements(trace_of(sys));
  const SolveReport report = solve_scenario(sys, ms);
  REQUIRE(report.estimates.count(NodeId{4}) == 1);
  const Vec3 solved = report.estimates.at(NodeId{4}).position;

  // Rebuild the target's constraint set exactly as the solver saw it.
  std::vector<TdoaConstraint> constraints;
  for (const auto& [key, mu_value] : ms.mu) {
    if (key.x != NodeId{4}) continue;
    const double d_yz = ms.toa.at(PairKey::make(key.y, key.z));
    constraints.push_back({key.y, key.z, tdoa_alternate(mu_value, d_yz)});
  }
  REQUIRE(constraints.size() >= 3);
  const auto cost = [&](double x, double y) {
    double ss = 0.0;
    for (const TdoaConstraint& c : constraints) {
      const Vec3 p(x, y, 0);
      const double r = ((p - sys.node(c.second).position).norm() -
                        (p - sys.node(c.first).position).norm()) /
                           sys.signal_speed() -
                       c.value_s;
      ss += r * r;
    }
    return ss;
  };
  double bx = 0.0, by = 0.0, best = 1e300;
  for (double x = 0.0; x <= 10.0; x += 0.05) {
    for (double y = 0.0; y <= 10.0; y += 0.05) {
      const double c = cost(x, y);
      if (c < best) {
        best = c;
        bx = x;
        by = y;
      }
    }
  }
  for (double step = 0.005; step > 1e-6; step /= 10.0) {
    double cx = bx, cy = by;
    for (double x = cx - 10 * step; x <= cx + 10 * step; x += step) {
      for (double y = cy - 10 * step; y <= cy + 10 * step; y += step) {
        const double c = cost(x, y);
        if (c < best) {
          best = c;
          bx = x;
          by = y;
        }
      }
    }
  }
  const Vec3 oracle(bx, by, 0);
  CHECK((oracle - Vec3(2, 3, 0)).norm() < 0.01);
  CHECK((solved - Vec3(2, 3, 0)).norm() < 0.01);
  CHECK((solved - oracle).norm() < 1e-3);
}

}  // TEST_SUITE
