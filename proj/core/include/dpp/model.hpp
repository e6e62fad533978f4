#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dpp/exceptions.hpp"

namespace dpp {

using Vec3 = Eigen::Vector3d;

/// Speed of light in vacuum, m/s. Default signal speed for radio scenarios.
inline constexpr double kRadioSignalSpeed = 299792458.0;

/// Typical worst-case crystal oscillator drift (20 ppm).
inline constexpr double kDefaultMaxDrift = 20e-6;

struct NodeId {
  std::uint32_t value{0};
  constexpr auto operator<=>(const NodeId&) const = default;
};

enum class NodeRole : std::uint8_t {
  Passive,    ///< receive only
  Active,     ///< transmit only
  Bilateral,  ///< both
};

constexpr bool can_transmit(NodeRole r) { return r != NodeRole::Passive; }
constexpr bool can_receive(NodeRole r) { return r != NodeRole::Active; }

const char* to_string(NodeRole r);

/// Affine local clock: reading(t) = offset + (1 + drift) * t.
/// Drift is dimensionless (20e-6 == 20 ppm) and constant within a cycle.
struct ClockModel {
  double offset_s{0.0};
  double drift{0.0};
};

/// Local clock reading at true time `t_true_s`.
double local_time(const ClockModel& clock, double t_true_s);

struct Node {
  NodeId id;
  NodeRole role{NodeRole::Bilateral};
  Vec3 position{Vec3::Zero()};  ///< meters; z == 0 in 2D systems
  bool known_position{false};
  ClockModel clock{};
};

/// An immutable set of nodes sharing a signal medium. Positions are frozen
/// for the duration of one cycle; mobility is modeled as a new System.
class System {
 public:
  System(std::vector<Node> nodes, double signal_speed_mps, int dimension = 2);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const;
  bool has_node(NodeId id) const;
  double signal_speed() const { return signal_speed_; }
  int dimension() const { return dimension_; }

  std::vector<NodeId> ids_with_role(NodeRole role) const;
  std::size_t count_with_role(NodeRole role) const;
  std::size_t transmitter_count() const;

 private:
  std::vector<Node> nodes_;
  double signal_speed_;
  int dimension_;
};

/// Time of flight between two nodes: ||P(a) - P(b)|| / v, seconds.
double tof_distance(const Node& a, const Node& b, double signal_speed);

/// Ground-truth TDoA of receivers (x, z) relative to signal source y:
/// d_yz - d_xy, seconds. Antisymmetric in (x, z); |result| <= d_xz.
double true_tdoa(const Node& x, const Node& source_y, const Node& z,
                 double signal_speed);

}  // namespace dpp
