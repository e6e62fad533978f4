#include "dpp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace dpp {

const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Passive:
      return "passive";
    case NodeRole::Active:
      return "active";
    case NodeRole::Bilateral:
      return "bilateral";
  }
  return "?";
}

double local_time(const ClockModel& clock, double t_true_s) {
  if (!std::isfinite(t_true_s)) {
    throw InvalidInputError("local_time: non-finite true time");
  }
  return clock.offset_s + (1.0 + clock.drift) * t_true_s;
}

System::System(std::vector<Node> nodes, double signal_speed_mps, int dimension)
    : nodes_(std::move(nodes)),
      signal_speed_(signal_speed_mps),
      dimension_(dimension) {
  if (nodes_.empty()) {
    throw InvalidInputError("System: needs at least one node");
  }
  if (!(signal_speed_ > 0.0) || !std::isfinite(signal_speed_)) {
    throw InvalidInputError("System: signal speed must be positive");
  }
  if (dimension_ != 2 && dimension_ != 3) {
    throw InvalidInputError("System: dimension must be 2 or 3");
  }
  std::set<std::uint32_t> seen;
  for (const Node& n : nodes_) {
    if (!seen.insert(n.id.value).second) {
      throw InvalidInputError("System: duplicate node id " +
                              std::to_string(n.id.value));
    }
    if (!n.position.allFinite()) {
      throw InvalidInputError("System: non-finite position for node " +
                              std::to_string(n.id.value));
    }
    if (dimension_ == 2 && n.position.z() != 0.0) {
      throw InvalidInputError("System: 2D node " + std::to_string(n.id.value) +
                              " has a nonzero third coordinate");
    }
  }
}

const Node& System::node(NodeId id) const {
  for (const Node& n : nodes_) {
    if (n.id == id) return n;
  }
  throw InvalidInputError("System: unknown node id " +
                          std::to_string(id.value));
}

bool System::has_node(NodeId id) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const Node& n) { return n.id == id; });
}

std::vector<NodeId> System::ids_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (const Node& n : nodes_) {
    if (n.role == role) out.push_back(n.id);
  }
  return out;
}

std::size_t System::count_with_role(NodeRole role) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [&](const Node& n) { return n.role == role; }));
}

std::size_t System::transmitter_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [&](const Node& n) { return can_transmit(n.role); }));
}

double tof_distance(const Node& a, const Node& b, double signal_speed) {
  if (!a.position.allFinite() || !b.position.allFinite()) {
    throw InvalidInputError("tof_distance: non-finite position");
  }
  if (!(signal_speed > 0.0)) {
    throw InvalidInputError("tof_distance: signal speed must be positive");
  }
  return (a.position - b.position).norm() / signal_speed;
}

double true_tdoa(const Node& x, const Node& source_y, const Node& z,
                 double signal_speed) {
  if (x.id == source_y.id || source_y.id == z.id || x.id == z.id) {
    throw InvalidInputError("true_tdoa: nodes must be pairwise distinct");
  }
  return tof_distance(source_y, z, signal_speed) -
         tof_distance(x, source_y, signal_speed);
}

}  // namespace dpp
