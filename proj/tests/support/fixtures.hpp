#pragma once

#include <random>
#include <vector>

#include "dpp/measure.hpp"
#include "dpp/protocol.hpp"

namespace dpp::testing {

inline Node make_node(std::uint32_t id, NodeRole role, double x, double y,
                      double z = 0.0, bool known = false,
                      double offset_s = 0.0, double drift = 0.0) {
  Node n;
  n.id = NodeId{id};
  n.role = role;
  n.position = Vec3(x, y, z);
  n.known_position = known;
  n.clock = {offset_s, drift};
  return n;
}

/// X(0,0), Y(3,0), Z(3,4), all Bilateral, v = 1 m/s. All the classic
/// 3-4-5 identities hold: d_xy = 3, d_yz = 4, d_xz = 5.
inline System three_four_five(double offset_x = 0.0, double offset_y = 0.0,
                              double offset_z = 0.0, double drift_x = 0.0,
                              double drift_y = 0.0, double drift_z = 0.0) {
  return System(
      {
          make_node(0, NodeRole::Bilateral, 0, 0, 0, false, offset_x, drift_x),
          make_node(1, NodeRole::Bilateral, 3, 0, 0, false, offset_y, drift_y),
          make_node(2, NodeRole::Bilateral, 3, 4, 0, false, offset_z, drift_z),
      },
      1.0, 2);
}

/// Pulse gaps on the propagation scale of the 1 m/s fixtures. Sub-ms gaps
/// against multi-second flight times would make the span products cancel
/// most of their digits.
inline ProtocolConfig slow_medium_cfg() {
  ProtocolConfig cfg;
  cfg.inter_pulse_gap_s = 2.0;
  cfg.turn_gap_s = 7.0;
  return cfg;
}

/// One Passive target plus two Bilaterals and one Active, fixed anchors.
inline System fig8b_system() {
  return System(
      {
          make_node(0, NodeRole::Passive, 4, 3, 0, false, 0.4),
          make_node(1, NodeRole::Active, 0, 0, 0, true, -1.5),
          make_node(2, NodeRole::Bilateral, 10, 0, 0, true, 0.02),
          make_node(3, NodeRole::Bilateral, 5, 8, 0, true, 3.0),
      },
      kRadioSignalSpeed, 2);
}

/// One Passive target inside a 10 m square of four fixed Bilaterals.
inline System fig8e_system() {
  return System(
      {
          make_node(0, NodeRole::Bilateral, 0, 0, 0, true, 0.1),
          make_node(1, NodeRole::Bilateral, 10, 0, 0, true, -0.2),
          make_node(2, NodeRole::Bilateral, 10, 10, 0, true, 0.33),
          make_node(3, NodeRole::Bilateral, 0, 10, 0, true, -7.0),
          make_node(4, NodeRole::Passive, 2, 3, 0, false, 1.25),
      },
      kRadioSignalSpeed, 2);
}

struct RandomScenario {
  System system;
  ProtocolConfig cfg;
};

/// Random geometry/roles/offsets with at least two Bilaterals and one
/// extra node, zero drift, zero jitter. Positions keep a minimum pairwise
/// separation so no span denominator degenerates, and pulse gaps scale
/// with the worst flight time so a turn waits out the channel.
inline RandomScenario random_scenario(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_dist(2, 3);
  std::uniform_int_distribution<int> n_dist(3, 6);
  std::uniform_int_distribution<int> role_dist(0, 2);
  std::uniform_int_distribution<int> speed_dist(0, 2);
  std::uniform_real_distribution<double> offset_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> gap_factor(1.0, 2.5);

  const int dim = dim_dist(rng);
  const int n = n_dist(rng);
  const double speeds[3] = {1.0, 343.0, kRadioSignalSpeed};
  const double v = speeds[speed_dist(rng)];
  const double extent = v < 100.0 ? 3.0 : (v < 1e6 ? 40.0 : 50.0);
  std::uniform_real_distribution<double> pos_dist(0.0, extent);

  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i) {
    Node node;
    node.id = NodeId{static_cast<std::uint32_t>(i)};
    node.role = i < 2 ? NodeRole::Bilateral
                      : static_cast<NodeRole>(role_dist(rng));
    node.clock = {offset_dist(rng), 0.0};
    for (int retry = 0; retry < 1000; ++retry) {
      Vec3 p = Vec3::Zero();
      for (int k = 0; k < dim; ++k) p[k] = pos_dist(rng);
      bool ok = true;
      for (const Node& other : nodes) {
        if ((other.position - p).norm() < 0.1 * extent) {
          ok = false;
          break;
        }
      }
      if (ok) {
        node.position = p;
        break;
      }
    }
    nodes.push_back(node);
  }

  double max_tof = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      max_tof = std::max(max_tof,
                         (nodes[i].position - nodes[j].position).norm() / v);
    }
  }

  ProtocolConfig cfg;
  cfg.inter_pulse_gap_s = gap_factor(rng) * (max_tof + 200e-6);
  cfg.turn_gap_s = gap_factor(rng) * (max_tof + 1e-3);
  cfg.rng_seed = rng();
  return {System(std::move(nodes), v, dim), cfg};
}

}  // namespace dpp::testing
