#include "dpp/protocol.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dpp {

namespace {

std::string key_str(NodeId n, int p) {
  return "node " + std::to_string(n.value) + " pulse " + std::to_string(p);
}

}  // namespace

double PulseSchedule::span_s() const {
  if (entries.empty()) return 0.0;
  return entries.back().true_emit_time_s - entries.front().true_emit_time_s;
}

CycleTrace::CycleTrace(int cycle_index, std::vector<TxRecord> tx,
                       std::vector<RxRecord> rx, System system_snapshot)
    : cycle_index_(cycle_index),
      tx_(std::move(tx)),
      rx_(std::move(rx)),
      system_(std::move(system_snapshot)) {
  index();
}

void CycleTrace::index() {
  tx_index_.clear();
  rx_index_.clear();
  for (std::size_t i = 0; i < tx_.size(); ++i) {
    tx_index_[{tx_[i].sender.value, tx_[i].pulse_index}] = i;
  }
  for (std::size_t i = 0; i < rx_.size(); ++i) {
    rx_index_[{rx_[i].receiver.value, rx_[i].sender.value,
               rx_[i].pulse_index}] = i;
  }
}

const TxRecord& CycleTrace::tx_record(NodeId sender, int pulse_index) const {
  auto it = tx_index_.find({sender.value, pulse_index});
  if (it == tx_index_.end()) {
    throw IncompleteTraceError("trace: missing TX record for " +
                               key_str(sender, pulse_index));
  }
  return tx_[it->second];
}

const RxRecord& CycleTrace::rx_record(NodeId receiver, NodeId sender,
                                      int pulse_index) const {
  auto it = rx_index_.find({receiver.value, sender.value, pulse_index});
  if (it == rx_index_.end()) {
    throw IncompleteTraceError(
        "trace: missing RX record at node " + std::to_string(receiver.value) +
        " for " + key_str(sender, pulse_index));
  }
  return rx_[it->second];
}

double CycleTrace::tx_local(NodeId sender, int pulse_index) const {
  return tx_record(sender, pulse_index).local_timestamp_s;
}

double CycleTrace::rx_local(NodeId receiver, NodeId sender,
                            int pulse_index) const {
  return rx_record(receiver, sender, pulse_index).local_timestamp_s;
}

bool CycleTrace::has_tx(NodeId sender, int pulse_index) const {
  return tx_index_.count({sender.value, pulse_index}) != 0;
}

bool CycleTrace::has_rx(NodeId receiver, NodeId sender,
                        int pulse_index) const {
  return rx_index_.count({receiver.value, sender.value, pulse_index}) != 0;
}

double CycleTrace::span_s() const {
  if (tx_.empty()) return 0.0;
  double first = tx_.front().true_time_s;
  double last = tx_.back().true_time_s;
  double max_tof = 0.0;
  const auto& nodes = system_.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      max_tof = std::max(
          max_tof, tof_distance(nodes[i], nodes[j], system_.signal_speed()));
    }
  }
  return (last - first) + max_tof;
}

CycleTrace CycleTrace::without_pulse(NodeId sender, int pulse_index) const {
  std::vector<TxRecord> tx;
  std::vector<RxRecord> rx;
  for (const TxRecord& r : tx_) {
    if (!(r.sender == sender && r.pulse_index == pulse_index)) tx.push_back(r);
  }
  for (const RxRecord& r : rx_) {
    if (!(r.sender == sender && r.pulse_index == pulse_index)) rx.push_back(r);
  }
  return CycleTrace(cycle_index_, std::move(tx), std::move(rx), system_);
}

PulseSchedule build_dpp_schedule(const System& system,
                                 const ProtocolConfig& cfg) {
  if (!(cfg.inter_pulse_gap_s > 0.0) || !(cfg.turn_gap_s > 0.0)) {
    throw InvalidInputError("schedule: gaps must be positive");
  }
  PulseSchedule schedule;
  double t = 0.0;
  for (const Node& n : system.nodes()) {
    if (!can_transmit(n.role)) continue;
    schedule.entries.push_back({n.id, 1, t});
    schedule.entries.push_back({n.id, 2, t + cfg.inter_pulse_gap_s});
    t += cfg.inter_pulse_gap_s + cfg.turn_gap_s;
  }
  if (schedule.entries.empty()) {
    throw EmptyScheduleError("schedule: system has no transmitting node");
  }
  return schedule;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

CycleTrace simulate_cycle(const System& system, const PulseSchedule& schedule,
                          const ProtocolConfig& cfg, int cycle_index) {
  if (schedule.entries.empty()) {
    throw EmptyScheduleError("simulate_cycle: empty schedule");
  }
  if (cfg.timestamp_jitter_sd_s < 0.0) {
    throw InvalidInputError("simulate_cycle: jitter sd must be >= 0");
  }
  for (const PulseEntry& e : schedule.entries) {
    if (!system.has_node(e.sender) ||
        !can_transmit(system.node(e.sender).role)) {
      throw InvalidInputError("simulate_cycle: schedule references node " +
                              std::to_string(e.sender.value) +
                              " which cannot transmit in this system");
    }
  }

  const double cycle_offset =
      static_cast<double>(cycle_index) * (schedule.span_s() + cfg.turn_gap_s);
  std::mt19937_64 rng(derive_seed(cfg.rng_seed,
                                  static_cast<std::uint64_t>(cycle_index)));
  std::normal_distribution<double> jitter(0.0, cfg.timestamp_jitter_sd_s);

  std::vector<TxRecord> tx;
  std::vector<RxRecord> rx;
  for (const PulseEntry& e : schedule.entries) {
    const Node& sender = system.node(e.sender);
    const double emit = e.true_emit_time_s + cycle_offset;
    tx.push_back(
        {e.sender, e.pulse_index, local_time(sender.clock, emit), emit});
    for (const Node& receiver : system.nodes()) {
      if (receiver.id == e.sender || !can_receive(receiver.role)) continue;
      const double arrival =
          emit + tof_distance(sender, receiver, system.signal_speed());
      double stamp = local_time(receiver.clock, arrival);
      if (cfg.timestamp_jitter_sd_s > 0.0) stamp += jitter(rng);
      if (!std::isfinite(stamp)) {
        throw SimulationError("simulate_cycle: non-finite RX timestamp");
      }
      rx.push_back({receiver.id, e.sender, e.pulse_index, stamp});
    }
  }
  return CycleTrace(cycle_index, std::move(tx), std::move(rx), system);
}

std::vector<CycleTrace> simulate(const System& system,
                                 const ProtocolConfig& cfg) {
  if (cfg.cycles < 1) {
    throw InvalidInputError("simulate: cycle count must be >= 1");
  }
  const PulseSchedule schedule = build_dpp_schedule(system, cfg);
  std::vector<CycleTrace> traces;
  traces.reserve(static_cast<std::size_t>(cfg.cycles));
  for (int c = 0; c < cfg.cycles; ++c) {
    traces.push_back(simulate_cycle(system, schedule, cfg, c));
  }
  return traces;
}

long long message_count_dpp(long long m, long long t) {
  if (m < 0 || t < 0 || m + t < 1) {
    throw InvalidInputError("message_count_dpp: needs m + t >= 1");
  }
  return 2 * (m + t);
}

long long message_count_dpw(long long m, long long t) {
  if (m < 0 || t < 0) {
    throw InvalidInputError("message_count_dpw: counts must be >= 0");
  }
  if (m == 0 || t == 0) return 0;
  return 3 * m * t;
}

DjkmRoundCounts djkm_round_counts(long long k) {
  if (k <= 2) {
    throw OutOfDomainError("djkm: defined for k > 2 anchors only");
  }
  const long long odd = (k + 1) / 2;  // ceil(k/2)
  return {2 * k - 1, 2 * odd - 1};
}

long long message_count_djkm(long long k) { return djkm_round_counts(k).total(); }

namespace {

// Chain communication over `participants` with message re-use: the reply of
// anchor i doubles as the initial message towards anchor i+1.
void append_chain(std::vector<DjkmEvent>& out, int round,
                  const std::vector<int>& participants) {
  out.push_back({round, participants[0], DjkmSignal::Initial});
  for (std::size_t i = 0; i + 1 < participants.size(); ++i) {
    out.push_back({round, participants[i + 1], DjkmSignal::Reply});
    out.push_back({round, participants[i], DjkmSignal::Final});
  }
}

}  // namespace

std::vector<int> djkm_round2_participants(long long k) {
  if (k <= 2) {
    throw OutOfDomainError("djkm: defined for k > 2 anchors only");
  }
  std::vector<int> odd;
  for (int i = 1; i <= k; i += 2) odd.push_back(i);
  return odd;
}

std::vector<DjkmEvent> build_djkm_schedule(long long k) {
  if (k <= 2) {
    throw OutOfDomainError("djkm: defined for k > 2 anchors only");
  }
  std::vector<int> all;
  for (int i = 1; i <= k; ++i) all.push_back(i);
  std::vector<DjkmEvent> events;
  append_chain(events, 1, all);
  append_chain(events, 2, djkm_round2_participants(k));
  return events;
}

}  // namespace dpp
