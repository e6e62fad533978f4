#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "dpp/model.hpp"

namespace dpp {

struct ProtocolConfig {
  double inter_pulse_gap_s{200e-6};  ///< gap between a node's two pulses
  double turn_gap_s{1e-3};           ///< gap between consecutive turns
  int cycles{1};
  double timestamp_jitter_sd_s{0.0};  ///< gaussian sd added to RX timestamps
  std::uint64_t rng_seed{1};
};

struct PulseEntry {
  NodeId sender;
  int pulse_index;        ///< 1 or 2
  double true_emit_time_s;
};

struct PulseSchedule {
  std::vector<PulseEntry> entries;

  /// True time between the first and last emission.
  double span_s() const;
};

struct TxRecord {
  NodeId sender;
  int pulse_index;
  double local_timestamp_s;  ///< sender clock
  double true_time_s;        ///< oracle only; never a measurement input
};

struct RxRecord {
  NodeId receiver;
  NodeId sender;
  int pulse_index;
  double local_timestamp_s;  ///< receiver clock, jitter included
};

/// All timestamps recorded during one cycle, plus the System they were
/// produced under. Lookups throw IncompleteTraceError on missing records.
class CycleTrace {
 public:
  CycleTrace(int cycle_index, std::vector<TxRecord> tx,
             std::vector<RxRecord> rx, System system_snapshot);

  int cycle_index() const { return cycle_index_; }
  const std::vector<TxRecord>& tx() const { return tx_; }
  const std::vector<RxRecord>& rx() const { return rx_; }
  const System& system() const { return system_; }

  const TxRecord& tx_record(NodeId sender, int pulse_index) const;
  const RxRecord& rx_record(NodeId receiver, NodeId sender,
                            int pulse_index) const;
  double tx_local(NodeId sender, int pulse_index) const;
  double rx_local(NodeId receiver, NodeId sender, int pulse_index) const;
  bool has_tx(NodeId sender, int pulse_index) const;
  bool has_rx(NodeId receiver, NodeId sender, int pulse_index) const;

  /// True time between first and last emission plus the longest propagation.
  double span_s() const;

  /// Copy of this trace with every record of `sender`'s pulse `pulse_index`
  /// removed (TX and all matching RX).
  CycleTrace without_pulse(NodeId sender, int pulse_index) const;

 private:
  void index();

  int cycle_index_;
  std::vector<TxRecord> tx_;
  std::vector<RxRecord> rx_;
  System system_;
  std::map<std::pair<std::uint32_t, int>, std::size_t> tx_index_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, int>, std::size_t>
      rx_index_;
};

/// Turn-based double-pulse schedule: transmitters in system order, two
/// pulses per turn. Throws EmptyScheduleError when nothing can transmit.
PulseSchedule build_dpp_schedule(const System& system,
                                 const ProtocolConfig& cfg);

/// Replays `schedule` shifted by cycle_index * (span + turn_gap): a TxRecord
/// per emission on the sender's clock, an RxRecord on every other
/// RX-capable node's clock with propagation delay, plus seeded gaussian
/// jitter on RX timestamps when configured.
CycleTrace simulate_cycle(const System& system, const PulseSchedule& schedule,
                          const ProtocolConfig& cfg, int cycle_index);

/// cfg.cycles traces of the same system, deterministically seeded per cycle.
std::vector<CycleTrace> simulate(const System& system,
                                 const ProtocolConfig& cfg);

/// Deterministic per-stream seed derivation (splitmix64 over base + stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Channel usage per cycle. m = Bilateral count, t = Active count.
long long message_count_dpp(long long m, long long t);

/// DPW: 3 messages per (mirror, tag) combination. Returns 0 when either
/// count is zero (nothing to locate).
long long message_count_dpw(long long m, long long t);

struct DjkmRoundCounts {
  long long first_round;   ///< 2k - 1
  long long second_round;  ///< 2*ceil(k/2) - 1
  long long total() const { return first_round + second_round; }
};

/// Per-round DJKM signal counts for k anchors. Requires k > 2.
DjkmRoundCounts djkm_round_counts(long long k);
long long message_count_djkm(long long k);

enum class DjkmSignal : std::uint8_t { Initial, Reply, Final };

struct DjkmEvent {
  int round;         ///< 1 or 2
  int sender;        ///< 1-based anchor index
  DjkmSignal kind;
};

/// 1-based indices of the anchors participating in DJKM round 2.
std::vector<int> djkm_round2_participants(long long k);

/// The two-round DJKM transmission sequence with message re-use: a reply
/// doubles as the next pair's initial message, so it is emitted once.
std::vector<DjkmEvent> build_djkm_schedule(long long k);

}  // namespace dpp
