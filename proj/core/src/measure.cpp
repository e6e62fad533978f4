#include "dpp/measure.hpp"

#include <cmath>
#include <string>

namespace dpp {

namespace {

void require_distinct(NodeId a, NodeId b, NodeId c, const char* op) {
  if (a == b || b == c || a == c) {
    throw InvalidInputError(std::string(op) +
                            ": nodes must be pairwise distinct");
  }
}

void require_pulse_index(int p, const char* op) {
  if (p != 1 && p != 2) {
    throw InvalidInputError(std::string(op) + ": pulse index must be 1 or 2");
  }
}

double checked_div(double numerator, double denominator, const char* what) {
  if (denominator < kDenominatorFloor) {
    throw DegenerateScheduleError(std::string(what) +
                                  ": span denominator too small");
  }
  return numerator / denominator;
}

}  // namespace

TdoaSpans extract_tdoa_spans(const CycleTrace& trace, NodeId x, NodeId y,
                             NodeId z, int p) {
  require_distinct(x, y, z, "extract_tdoa_spans");
  require_pulse_index(p, "extract_tdoa_spans");
  const System& sys = trace.system();
  if (!can_receive(sys.node(x).role)) {
    throw InvalidRolesError("extract_tdoa_spans: X must be rx-capable");
  }
  if (!can_transmit(sys.node(y).role)) {
    throw InvalidRolesError("extract_tdoa_spans: Y must be tx-capable");
  }
  if (sys.node(z).role != NodeRole::Bilateral) {
    throw InvalidRolesError("extract_tdoa_spans: Z must be Bilateral");
  }

  const double r_x_y1 = trace.rx_local(x, y, 1);
  const double r_x_y2 = trace.rx_local(x, y, 2);
  const double r_x_zp = trace.rx_local(x, z, p);
  const double r_z_y1 = trace.rx_local(z, y, 1);
  const double r_z_y2 = trace.rx_local(z, y, 2);
  const double t_zp = trace.tx_local(z, p);

  TdoaSpans s;
  s.x = x;
  s.y = y;
  s.z = z;
  s.p = p;
  s.r_x_yz = r_x_zp - r_x_y1;
  s.d_x_yz = r_x_y2 - r_x_zp;
  s.r_z_y = r_z_y2 - t_zp;
  s.d_z_y = t_zp - r_z_y1;
  return s;
}

double mu(const TdoaSpans& s, MuForm form) {
  const double numerator = s.r_x_yz * s.r_z_y - s.d_x_yz * s.d_z_y;
  switch (form) {
    case MuForm::FromX:
      return checked_div(numerator, s.r_x_yz + s.d_x_yz, "mu");
    case MuForm::FromZ:
      return checked_div(numerator, s.r_z_y + s.d_z_y, "mu");
    case MuForm::Combined:
      return checked_div(2.0 * numerator,
                         s.r_x_yz + s.r_z_y + s.d_x_yz + s.d_z_y, "mu");
  }
  throw InvalidInputError("mu: unknown form");
}

MuMeasurement measure_mu(const CycleTrace& trace, NodeId x, NodeId y, NodeId z,
                         int p) {
  MuMeasurement m;
  m.x = x;
  m.z = z;
  m.y = y;
  m.p = p;
  if (p == 0) {
    const double mu1 = mu(extract_tdoa_spans(trace, x, y, z, 1));
    const double mu2 = mu(extract_tdoa_spans(trace, x, y, z, 2));
    m.seconds = 0.5 * (mu1 + mu2);
  } else {
    m.seconds = mu(extract_tdoa_spans(trace, x, y, z, p));
  }
  return m;
}

double tdoa_from_mu(double mu_s, double d_xz_s) {
  if (d_xz_s < 0.0) {
    throw InvalidInputError("tdoa_from_mu: distance must be >= 0");
  }
  return mu_s - d_xz_s;
}

double tdoa_alternate(double mu_s, double d_yz_s) {
  if (d_yz_s < 0.0) {
    throw InvalidInputError("tdoa_alternate: distance must be >= 0");
  }
  return mu_s - d_yz_s;
}

TwrSpans extract_twr_spans(const CycleTrace& trace, NodeId y, NodeId z,
                           int q) {
  if (y == z) {
    throw InvalidInputError("extract_twr_spans: nodes must be distinct");
  }
  require_pulse_index(q, "extract_twr_spans");
  const System& sys = trace.system();
  if (sys.node(y).role != NodeRole::Bilateral ||
      sys.node(z).role != NodeRole::Bilateral) {
    throw InvalidRolesError("extract_twr_spans: both nodes must be Bilateral");
  }

  const double t_y1 = trace.tx_local(y, 1);
  const double t_y2 = trace.tx_local(y, 2);
  const double r_y_zq = trace.rx_local(y, z, q);
  const double t_zq = trace.tx_local(z, q);
  const double r_z_y1 = trace.rx_local(z, y, 1);
  const double r_z_y2 = trace.rx_local(z, y, 2);

  TwrSpans s;
  s.y = y;
  s.z = z;
  s.q = q;
  s.r_y_z = r_y_zq - t_y1;
  s.d_y_z = t_y2 - r_y_zq;
  s.r_z_y = r_z_y2 - t_zq;
  s.d_z_y = t_zq - r_z_y1;
  return s;
}

double toa_distance(const TwrSpans& s) {
  const double numerator = s.r_y_z * s.r_z_y - s.d_y_z * s.d_z_y;
  return checked_div(numerator, s.r_y_z + s.r_z_y + s.d_y_z + s.d_z_y,
                     "toa_distance");
}

double measure_toa(const CycleTrace& trace, NodeId y, NodeId z, int q) {
  if (q == 0) {
    return 0.5 * (toa_distance(extract_twr_spans(trace, y, z, 1)) +
                  toa_distance(extract_twr_spans(trace, y, z, 2)));
  }
  return toa_distance(extract_twr_spans(trace, y, z, q));
}

double direct_distance(const MuMeasurement& mu_xzy,
                       const MuMeasurement& mu_zxy) {
  if (!(mu_xzy.x == mu_zxy.z && mu_xzy.z == mu_zxy.x &&
        mu_xzy.y == mu_zxy.y)) {
    throw InvalidPairingError(
        "direct_distance: inputs must be the two orientations of one triple");
  }
  return 0.5 * (mu_xzy.seconds + mu_zxy.seconds);
}

MuSymmetryResult mu_symmetry_check(const CycleTrace& trace, NodeId x, NodeId y,
                                   NodeId z) {
  require_distinct(x, y, z, "mu_symmetry_check");
  const System& sys = trace.system();
  for (NodeId n : {x, y, z}) {
    if (sys.node(n).role != NodeRole::Bilateral) {
      throw InvalidRolesError("mu_symmetry_check: all nodes must be Bilateral");
    }
  }
  MuSymmetryResult r;
  r.mu_xzy = measure_mu(trace, x, y, z).seconds;
  r.mu_yzx = measure_mu(trace, y, x, z).seconds;
  r.delta = r.mu_xzy - r.mu_yzx;
  return r;
}

std::vector<TripleKey> admissible_triples(const System& system) {
  std::vector<TripleKey> out;
  for (const Node& x : system.nodes()) {
    if (!can_receive(x.role)) continue;
    for (const Node& y : system.nodes()) {
      if (y.id == x.id || !can_transmit(y.role)) continue;
      for (const Node& z : system.nodes()) {
        if (z.id == x.id || z.id == y.id) continue;
        if (z.role != NodeRole::Bilateral) continue;
        out.push_back({x.id, z.id, y.id});
      }
    }
  }
  return out;
}

std::vector<TripleKey> canonical_mu_triples(const System& system) {
  const auto& nodes = system.nodes();
  std::vector<TripleKey> out;
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const Node* members[3] = {&nodes[i], &nodes[j], &nodes[k]};
        bool found = false;
        for (int xi = 0; xi < 3 && !found; ++xi) {
          if (!can_receive(members[xi]->role)) continue;
          for (int zi = 0; zi < 3 && !found; ++zi) {
            if (zi == xi || members[zi]->role != NodeRole::Bilateral) continue;
            const int yi = 3 - xi - zi;
            if (!can_transmit(members[yi]->role)) continue;
            out.push_back({members[xi]->id, members[zi]->id, members[yi]->id});
            found = true;
          }
        }
      }
    }
  }
  return out;
}

std::vector<PairKey> bilateral_pairs(const System& system) {
  std::vector<PairKey> out;
  const auto& nodes = system.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].role != NodeRole::Bilateral) continue;
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (nodes[j].role != NodeRole::Bilateral) continue;
      out.push_back(PairKey::make(nodes[i].id, nodes[j].id));
    }
  }
  return out;
}

MeasurementSet full_cycle_measurements(const CycleTrace& trace,
                                       DistanceSource policy, int p, int q) {
  const System& sys = trace.system();
  MeasurementSet ms;
  ms.signal_speed = sys.signal_speed();
  ms.cycle_index = trace.cycle_index();

  for (const PairKey& pair : bilateral_pairs(sys)) {
    const double d1 = toa_distance(extract_twr_spans(trace, pair.a, pair.b, 1));
    const double d2 = toa_distance(extract_twr_spans(trace, pair.a, pair.b, 2));
    ms.toa_by_q[pair] = {d1, d2};
    ms.toa[pair] = (q == 0) ? 0.5 * (d1 + d2) : (q == 1 ? d1 : d2);
  }

  for (const TripleKey& key : admissible_triples(sys)) {
    const double mu1 =
        mu(extract_tdoa_spans(trace, key.x, key.y, key.z, 1));
    const double mu2 =
        mu(extract_tdoa_spans(trace, key.x, key.y, key.z, 2));
    ms.mu_by_p[key] = {mu1, mu2};
    ms.mu[key] = (p == 0) ? 0.5 * (mu1 + mu2) : (p == 1 ? mu1 : mu2);
  }

  // TDoA where a d_xz source exists; triples without one stay mu-only.
  for (const auto& [key, mu_value] : ms.mu) {
    const Node& nx = sys.node(key.x);
    const Node& nz = sys.node(key.z);
    std::optional<double> d_toa;
    std::optional<double> d_cfg;
    if (auto it = ms.toa.find(PairKey::make(key.x, key.z)); it != ms.toa.end()) {
      d_toa = it->second;
    }
    if (nx.known_position && nz.known_position) {
      d_cfg = tof_distance(nx, nz, sys.signal_speed());
    }
    std::optional<double> d_xz;
    switch (policy) {
      case DistanceSource::ToaThenConfigured:
        d_xz = d_toa ? d_toa : d_cfg;
        break;
      case DistanceSource::ConfiguredThenToa:
        d_xz = d_cfg ? d_cfg : d_toa;
        break;
      case DistanceSource::ToaOnly:
        d_xz = d_toa;
        break;
      case DistanceSource::ConfiguredOnly:
        d_xz = d_cfg;
        break;
    }
    if (d_xz) {
      ms.tdoa[key] = tdoa_from_mu(mu_value, *d_xz);
    }
  }

  // Direct values need both orientations, so X and Z Bilateral.
  for (const auto& [key, mu_value] : ms.mu) {
    if (key.x > key.z) continue;
    auto other = ms.mu.find(TripleKey{key.z, key.x, key.y});
    if (other == ms.mu.end()) continue;
    ms.direct[key] = 0.5 * (mu_value + other->second);
  }

  return ms;
}

DpwView derive_dpw_view(const CycleTrace& trace, NodeId x, NodeId y,
                        NodeId z) {
  require_distinct(x, y, z, "derive_dpw_view");
  const System& sys = trace.system();
  if (sys.node(x).role != NodeRole::Passive ||
      sys.node(y).role != NodeRole::Active ||
      sys.node(z).role != NodeRole::Bilateral) {
    throw InvalidRolesError(
        "derive_dpw_view: needs x Passive, y Active, z Bilateral");
  }
  DpwView view{trace.without_pulse(z, 2), 0.0, 0.0};
  view.mu_s = mu(extract_tdoa_spans(view.reduced, x, y, z, 1));
  const double d_xz =
      tof_distance(sys.node(x), sys.node(z), sys.signal_speed());
  view.tdoa_s = tdoa_from_mu(view.mu_s, d_xz);
  return view;
}

DjkmView derive_djkm_view(const CycleTrace& trace, NodeId tag, NodeId an0,
                          NodeId an1) {
  require_distinct(tag, an0, an1, "derive_djkm_view");
  const System& sys = trace.system();
  if (sys.node(tag).role != NodeRole::Passive ||
      sys.node(an0).role != NodeRole::Bilateral ||
      sys.node(an1).role != NodeRole::Bilateral) {
    throw InvalidRolesError(
        "derive_djkm_view: needs a Passive tag and two Bilateral anchors");
  }
  DjkmView view{trace.without_pulse(an0, 2).without_pulse(an1, 2), 0.0};

  // The tag's arrival gap minus the anchors' emission gap. The second
  // anchor's turnaround (t_{an1,1} - r_{an1}^{an0,1}) is what the anchor
  // exchange reports; d(an0,an1) comes from the anchor infrastructure.
  const double arrival_gap =
      view.reduced.rx_local(tag, an1, 1) - view.reduced.rx_local(tag, an0, 1);
  const double turnaround =
      view.reduced.tx_local(an1, 1) - view.reduced.rx_local(an1, an0, 1);
  const double d_anchors =
      tof_distance(sys.node(an0), sys.node(an1), sys.signal_speed());
  view.tdoa_s = arrival_gap - turnaround - d_anchors;
  return view;
}

}  // namespace dpp
