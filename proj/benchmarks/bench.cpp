#include <benchmark/benchmark.h>

#include <random>

#include "dpp/measure.hpp"
#include "dpp/solve.hpp"

using namespace dpp;

namespace {

System square_system(int bilaterals, int passives) {
  std::vector<Node> nodes;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> coord(0.0, 50.0);
  std::uint32_t id = 0;
  for (int i = 0; i < bilaterals; ++i) {
    Node n;
    n.id = NodeId{id++};
    n.role = NodeRole::Bilateral;
    n.position = Vec3(coord(rng), coord(rng), 0);
    nodes.push_back(n);
  }
  for (int i = 0; i < passives; ++i) {
    Node n;
    n.id = NodeId{id++};
    n.role = NodeRole::Passive;
    n.position = Vec3(coord(rng), coord(rng), 0);
    nodes.push_back(n);
  }
  return System(std::move(nodes), kRadioSignalSpeed, 2);
}

void BM_SimulateCycle(benchmark::State& state) {
  const System sys = square_system(static_cast<int>(state.range(0)), 2);
  ProtocolConfig cfg;
  const PulseSchedule schedule = build_dpp_schedule(sys, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_cycle(sys, schedule, cfg, 0));
  }
}
BENCHMARK(BM_SimulateCycle)->Arg(4)->Arg(8)->Arg(16);

void BM_FullCycleMeasurements(benchmark::State& state) {
  const System sys = square_system(static_cast<int>(state.range(0)), 2);
  ProtocolConfig cfg;
  const CycleTrace trace =
      simulate_cycle(sys, build_dpp_schedule(sys, cfg), cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(full_cycle_measurements(trace));
  }
}
BENCHMARK(BM_FullCycleMeasurements)->Arg(4)->Arg(8)->Arg(12);

void BM_SolveTdoa(benchmark::State& state) {
  const System sys = square_system(4, 1);
  const Vec3 truth(21, 17, 0);
  std::map<NodeId, Vec3> anchors;
  for (std::uint32_t i = 0; i < 4; ++i) {
    anchors[NodeId{i}] = sys.node(NodeId{i}).position;
  }
  std::vector<TdoaConstraint> tdoas;
  for (std::uint32_t i = 0; i < 4; ++i) {
    for (std::uint32_t j = i + 1; j < 4; ++j) {
      tdoas.push_back({NodeId{i}, NodeId{j},
                       ((truth - anchors[NodeId{j}]).norm() -
                        (truth - anchors[NodeId{i}]).norm()) /
                           kRadioSignalSpeed});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_tdoa(tdoas, anchors, NodeId{9}, kRadioSignalSpeed, 2));
  }
}
BENCHMARK(BM_SolveTdoa);

void BM_EmbedRelative(benchmark::State& state) {
  const System sys = square_system(static_cast<int>(state.range(0)), 0);
  std::vector<NodeId> nodes;
  std::map<PairKey, double> distances;
  for (const Node& a : sys.nodes()) nodes.push_back(a.id);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      distances[PairKey::make(nodes[i], nodes[j])] =
          (sys.node(nodes[i]).position - sys.node(nodes[j]).position).norm();
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed_relative(distances, nodes, 2));
  }
}
BENCHMARK(BM_EmbedRelative)->Arg(4)->Arg(8)->Arg(16);

void BM_MobilePipeline(benchmark::State& state) {
  const System sys = square_system(4, 2);
  ProtocolConfig cfg;
  const CycleTrace trace =
      simulate_cycle(sys, build_dpp_schedule(sys, cfg), cfg, 0);
  const MeasurementSet ms = full_cycle_measurements(trace);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline_mobile(ms, sys));
  }
}
BENCHMARK(BM_MobilePipeline);

}  // namespace

BENCHMARK_MAIN();
