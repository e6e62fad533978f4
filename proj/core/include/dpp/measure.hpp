#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "dpp/protocol.hpp"

namespace dpp {

/// The four timespans behind one sub-scheme measurement, all from local
/// timestamps and exactly two clocks (X's and Z's):
///   R_X^{YZ} = r_X^{Zp} - r_X^{Y1}     D_X^{YZ} = r_X^{Y2} - r_X^{Zp}
///   R_Z^{Y}  = r_Z^{Y2} - t_{Zp}       D_Z^{Y}  = t_{Zp}   - r_Z^{Y1}
/// Drift-free they satisfy R_X + D_X = R_Z + D_Z.
struct TdoaSpans {
  NodeId x, y, z;
  int p;  ///< which of Z's pulses was used, 1 or 2
  double r_x_yz, d_x_yz, r_z_y, d_z_y;  // seconds
};

/// The spans of one asym-DS-TWR path between Bilaterals Y and Z:
///   R_Y^Z = r_Y^{Zq} - t_{Y1}          D_Y^Z = t_{Y2} - r_Y^{Zq}
/// plus R_Z^Y, D_Z^Y as above with p = q.
struct TwrSpans {
  NodeId y, z;
  int q;
  double r_y_z, d_y_z, r_z_y, d_z_y;  // seconds
};

enum class MuForm {
  FromX,     ///< numerator / (R_X + D_X)
  FromZ,     ///< numerator / (R_Z + D_Z)
  Combined,  ///< 2 * numerator / (R_X + R_Z + D_X + D_Z)
};

/// Smallest span denominator accepted before a schedule is called degenerate.
inline constexpr double kDenominatorFloor = 1e-12;

/// Requires: x rx-capable, y tx-capable, z Bilateral, pairwise distinct,
/// all records present in the trace.
TdoaSpans extract_tdoa_spans(const CycleTrace& trace, NodeId x, NodeId y,
                             NodeId z, int p);

/// Compound value mu_XZ^Y; equals d_yz - d_xy + d_xz (seconds) drift-free.
double mu(const TdoaSpans& spans, MuForm form = MuForm::Combined);

/// A mu value with its key triple. p == 0 marks an average over both pulses.
struct MuMeasurement {
  NodeId x, z, y;
  int p{0};
  double seconds{0.0};
};

/// Combined-form mu from a trace; p in {1, 2} selects one pulse of Z,
/// p == 0 averages both.
MuMeasurement measure_mu(const CycleTrace& trace, NodeId x, NodeId y, NodeId z,
                         int p = 0);

/// T_XZ^Y = mu_XZ^Y - d_xz (all seconds).
double tdoa_from_mu(double mu_s, double d_xz_s);

/// T_YZ^X = mu_XZ^Y - d_yz: the re-arranged form that constrains X instead.
double tdoa_alternate(double mu_s, double d_yz_s);

/// Requires y, z Bilateral and distinct.
TwrSpans extract_twr_spans(const CycleTrace& trace, NodeId y, NodeId z, int q);

/// (R_Y R_Z - D_Y D_Z) / (R_Y + R_Z + D_Y + D_Z); equals d_yz drift-free.
double toa_distance(const TwrSpans& spans);

/// ToA from a trace; q == 0 averages both TWR paths.
double measure_toa(const CycleTrace& trace, NodeId y, NodeId z, int q = 0);

/// (mu_XZ^Y + mu_ZX^Y) / 2; equals d_xz drift-free. The two inputs must be
/// the two orientations of the same (X, Z, Y) triple.
double direct_distance(const MuMeasurement& mu_xzy,
                       const MuMeasurement& mu_zxy);

struct MuSymmetryResult {
  double mu_xzy;
  double mu_yzx;
  double delta;  ///< mu_xzy - mu_yzx; 0 drift-free
};

/// Checks mu_XZ^Y == mu_YZ^X. Requires x, y, z all Bilateral.
MuSymmetryResult mu_symmetry_check(const CycleTrace& trace, NodeId x, NodeId y,
                                   NodeId z);

/// Ordered measurement key: receiver X, bilateral Z, source Y.
struct TripleKey {
  NodeId x, z, y;
  constexpr auto operator<=>(const TripleKey&) const = default;
};

/// Unordered node pair, normalized a < b.
struct PairKey {
  NodeId a, b;
  static PairKey make(NodeId m, NodeId n) {
    return m < n ? PairKey{m, n} : PairKey{n, m};
  }
  constexpr auto operator<=>(const PairKey&) const = default;
};

/// All ordered admissible (X, Z, Y): X rx-capable, Y tx-capable, Z Bilateral,
/// pairwise distinct. Deterministic system order.
std::vector<TripleKey> admissible_triples(const System& system);

/// One canonical triple per unordered admissible node set: the first
/// admissible (X, Z, Y) assignment in system order.
std::vector<TripleKey> canonical_mu_triples(const System& system);

/// All unordered Bilateral pairs in system order.
std::vector<PairKey> bilateral_pairs(const System& system);

/// Where T_XZ^Y gets its d_xz from.
enum class DistanceSource {
  ToaThenConfigured,  ///< same-cycle ToA when X,Z Bilateral, else positions
  ConfiguredThenToa,
  ToaOnly,
  ConfiguredOnly,
};

struct MeasurementSet {
  double signal_speed{kRadioSignalSpeed};
  int cycle_index{0};
  std::map<TripleKey, double> mu;                        // seconds
  std::map<TripleKey, std::array<double, 2>> mu_by_p;    // raw p=1 / p=2
  std::map<TripleKey, double> tdoa;                      // seconds
  std::map<PairKey, double> toa;                         // seconds (ToF)
  std::map<PairKey, std::array<double, 2>> toa_by_q;     // raw q=1 / q=2
  std::map<TripleKey, double> direct;                    // keyed x < z
};

/// Enumerates every admissible triple and Bilateral pair of the trace's
/// system and fills mu, ToA, direct, and (where a d_xz source exists under
/// `policy`) TDoA values. Triples whose d_xz is unknown stay mu-only.
/// p/q select a single pulse index, 0 averages both.
MeasurementSet full_cycle_measurements(
    const CycleTrace& trace,
    DistanceSource policy = DistanceSource::ToaThenConfigured, int p = 0,
    int q = 0);

/// DPW sub-scheme view: Z's second pulse removed, mu and TDoA recomputed
/// from what remains (p = 1) with d_xz taken from the snapshot geometry.
struct DpwView {
  CycleTrace reduced;
  double mu_s;
  double tdoa_s;
};

/// Requires x Passive, y Active, z Bilateral.
DpwView derive_dpw_view(const CycleTrace& trace, NodeId x, NodeId y, NodeId z);

/// DJKM view: both anchors' second pulses removed; the TDoA the reduced
/// exchange yields for the tag, T_{an0 an1}^{tag} = d(tag,an1) - d(tag,an0),
/// reconstructed from the tag's arrival gap and the anchors' exchange.
struct DjkmView {
  CycleTrace reduced;
  double tdoa_s;
};

/// Requires tag Passive, an0 and an1 Bilateral, distinct.
DjkmView derive_djkm_view(const CycleTrace& trace, NodeId tag, NodeId an0,
                          NodeId an1);

}  // namespace dpp
