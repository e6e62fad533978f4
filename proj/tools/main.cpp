#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpp/error_bounds.hpp"
#include "dpp/io.hpp"
#include "dpp/scenario.hpp"
#include "dpp/solve.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitStrictFailure = 2;

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  int trials = 1000;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::optional<std::string> format;  ///< unset: write csv and json

  bool want(const char* f) const { return !format || *format == f; }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_scenario = true) {
  auto* sc = cmd->add_option("--scenario", opts.scenario_path,
                             "Scenario JSON file");
  if (needs_scenario) sc->required();
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--trials", opts.trials, "Monte-Carlo trial count");
  cmd->add_option("--seed", opts.seed, "Override the scenario RNG seed");
  cmd->add_flag("--strict", opts.strict,
                "Exit nonzero on failed bounds or unconverged solutions");
  cmd->add_option("--format", opts.format,
                  "Restrict report files to csv or json (default: both)")
      ->check(CLI::IsMember({"csv", "json"}));
}

dpp::Scenario load(const CommonOpts& opts) {
  dpp::Scenario scenario = dpp::load_scenario(opts.scenario_path);
  if (const char* env = std::getenv("DPP_SIM_SEED")) {
    scenario.protocol.rng_seed = std::strtoull(env, nullptr, 10);
  }
  if (opts.seed) scenario.protocol.rng_seed = *opts.seed;
  return scenario;
}

fs::path out_file(const CommonOpts& opts, const std::string& name) {
  return fs::path(opts.out_dir) / name;
}

int run_simulate(const CommonOpts& opts) {
  const dpp::Scenario scenario = load(opts);
  const auto traces = dpp::simulate(scenario.system, scenario.protocol);
  std::size_t records = 0;
  for (const auto& t : traces) records += t.tx().size() + t.rx().size();
  dpp::write_text_file(out_file(opts, "trace.csv"), dpp::trace_csv(traces));
  std::cout << "simulate: " << traces.size() << " cycle(s), " << records
            << " records -> " << out_file(opts, "trace.csv").string() << "\n";
  return kExitOk;
}

int run_measure(const CommonOpts& opts) {
  const dpp::Scenario scenario = load(opts);
  const auto traces = dpp::simulate(scenario.system, scenario.protocol);
  for (const auto& trace : traces) {
    const dpp::MeasurementSet ms = dpp::full_cycle_measurements(
        trace, dpp::DistanceSource::ToaThenConfigured, scenario.p_select,
        scenario.q_select);
    const std::string suffix =
        traces.size() == 1 ? ""
                           : "_c" + std::to_string(trace.cycle_index());
    if (opts.want("csv")) {
      dpp::write_text_file(out_file(opts, "measurements" + suffix + ".csv"),
                           dpp::measurement_csv(ms));
    }
    if (opts.want("json")) {
      dpp::write_text_file(out_file(opts, "measurements" + suffix + ".json"),
                           dpp::measurement_json(ms));
    }
    std::cout << "measure: cycle " << trace.cycle_index() << ": "
              << ms.mu.size() << " mu, " << ms.tdoa.size() << " tdoa, "
              << ms.toa.size() << " toa, " << ms.direct.size()
              << " direct\n";
  }
  return kExitOk;
}

int run_bounds(const CommonOpts& opts) {
  const dpp::Scenario scenario = load(opts);
  dpp::ProtocolConfig quiet = scenario.protocol;
  quiet.timestamp_jitter_sd_s = 0.0;  // the bounds address clock drift only
  dpp::ErrorBoundConfig mc;
  mc.trials = opts.trials;
  mc.seed = quiet.rng_seed;

  std::vector<dpp::ErrorBoundReport> reports;
  bool all_passed = true;
  for (dpp::BoundQuantity q :
       {dpp::BoundQuantity::Mu, dpp::BoundQuantity::Tdoa,
        dpp::BoundQuantity::Toa}) {
    reports.push_back(
        dpp::empirical_error_report(scenario.system, quiet, q, mc));
    const dpp::ErrorBoundReport& r = reports.back();
    all_passed &= r.passed;
    std::cout << "bounds: " << dpp::to_string(q) << ": observed "
              << dpp::format_double(r.observed_max_abs_error_s)
              << " s <= bound "
              << dpp::format_double(r.analytic_bound_s) << " s + slack "
              << dpp::format_double(r.slack_s) << " s: "
              << (r.passed ? "ok" : "VIOLATED") << "\n";
    if (opts.want("csv")) {
      dpp::write_text_file(
          out_file(opts, std::string("bound_trials_") + dpp::to_string(q) +
                             ".csv"),
          dpp::bound_trials_csv(r));
    }
  }
  if (opts.want("json")) {
    dpp::write_text_file(out_file(opts, "bounds.json"),
                         dpp::bounds_json(reports));
  }
  if (!all_passed && opts.strict) return kExitStrictFailure;
  return kExitOk;
}

int run_solve(const CommonOpts& opts) {
  const dpp::Scenario scenario = load(opts);
  const auto traces = dpp::simulate(scenario.system, scenario.protocol);
  const dpp::MeasurementSet ms = dpp::full_cycle_measurements(
      traces.front(), dpp::DistanceSource::ToaThenConfigured,
      scenario.p_select, scenario.q_select);
  const dpp::SolveReport report = dpp::solve_scenario(scenario.system, ms);

  if (opts.want("json")) {
    dpp::write_text_file(out_file(opts, "solution.json"),
                         dpp::solve_json(report, scenario.system));
  }
  if (opts.want("csv")) {
    dpp::write_text_file(out_file(opts, "positions.csv"),
                         dpp::positions_csv(report));
  }

  bool ok = report.unsolved.empty();
  for (const auto& [id, est] : report.estimates) ok &= est.converged;
  std::cout << "solve: mode "
            << (report.mode == dpp::SolveMode::Absolute ? "absolute"
                                                        : "relative")
            << ", " << report.estimates.size() << " solved, "
            << report.unsolved.size() << " unsolved\n";
  if (!ok && opts.strict) return kExitStrictFailure;
  return kExitOk;
}

struct CountOpts {
  std::int64_t m = -1;
  std::int64_t t = -1;
  std::int64_t k = -1;
  bool dpp_on = false;
  bool dpw_on = false;
  bool djkm_on = false;
};

int run_counts(const CommonOpts& opts, const CountOpts& counts) {
  const bool all = !counts.dpp_on && !counts.dpw_on && !counts.djkm_on;
  std::int64_t m = counts.m, t = counts.t;
  if (m < 0 && counts.k >= 0) m = counts.k;  // k Bilaterals, no Actives
  if (t < 0) t = 0;

  std::ostringstream text;
  ordered_json rows = ordered_json::array();
  if ((all || counts.dpp_on) && m >= 0) {
    const auto n = dpp::message_count_dpp(m, t);
    text << "dpp m=" << m << " t=" << t << ": " << n << "\n";
    rows.push_back({{"scheme", "dpp"}, {"m", m}, {"t", t}, {"messages", n}});
  }
  if ((all || counts.dpw_on) && m >= 0) {
    const auto n = dpp::message_count_dpw(m, t);
    text << "dpw m=" << m << " t=" << t << ": " << n << "\n";
    rows.push_back({{"scheme", "dpw"}, {"m", m}, {"t", t}, {"messages", n}});
  }
  if ((all || counts.djkm_on) && counts.k >= 0) {
    const auto r = dpp::djkm_round_counts(counts.k);
    text << "djkm k=" << counts.k << ": " << r.total() << " (n1=" << r.first_round
         << ", n2=" << r.second_round << ")\n";
    rows.push_back({{"scheme", "djkm"},
                    {"k", counts.k},
                    {"messages", r.total()},
                    {"n1", r.first_round},
                    {"n2", r.second_round}});
  }
  if (rows.empty()) {
    std::cerr << "counts: give -m/-t for dpp/dpw and/or -k for djkm\n";
    return kExitError;
  }
  if (opts.format && *opts.format == "json") {
    std::cout << rows.dump(2) << "\n";
  } else {
    std::cout << text.str();
  }
  return kExitOk;
}

struct CompareOpts {
  double db_s = 1e-3;
  double eps_ppm = 20.0;
  double distance_m = -1.0;
};

int run_compare(const CommonOpts& opts, const CompareOpts& cmp) {
  const dpp::Scenario scenario = load(opts);
  const dpp::System& sys = scenario.system;
  const auto m = static_cast<std::int64_t>(
      sys.count_with_role(dpp::NodeRole::Bilateral));
  const auto t =
      static_cast<std::int64_t>(sys.count_with_role(dpp::NodeRole::Active));

  double d_m = cmp.distance_m;
  if (d_m < 0.0) {
    for (const dpp::Node& a : sys.nodes()) {
      for (const dpp::Node& b : sys.nodes()) {
        d_m = std::max(d_m, (a.position - b.position).norm());
      }
    }
  }
  const double d_s = d_m / sys.signal_speed();
  const double eps = cmp.eps_ppm * 1e-6;
  const double dpp_tdoa = dpp::tdoa_error_bound(eps, eps, d_s);
  const double dpp_toa = dpp::toa_error_bound(eps, eps, d_s);
  const double djkm = dpp::djkm_error_estimate({cmp.db_s, eps, -eps});
  const double ratio = dpp_tdoa > 0.0 ? djkm / dpp_tdoa : 0.0;

  ordered_json root;
  root["channel_usage"] = ordered_json::array();
  root["channel_usage"].push_back(
      {{"scheme", "dpp"}, {"messages", dpp::message_count_dpp(m, t)}});
  root["channel_usage"].push_back(
      {{"scheme", "dpw"}, {"messages", dpp::message_count_dpw(m, t)}});
  if (m > 2) {
    const auto r = dpp::djkm_round_counts(m);
    root["channel_usage"].push_back({{"scheme", "djkm"},
                                     {"messages", r.total()},
                                     {"n1", r.first_round},
                                     {"n2", r.second_round}});
  }
  root["error_comparison"] = {
      {"distance_m", d_m},
      {"distance_s", d_s},
      {"eps_ppm", cmp.eps_ppm},
      {"response_delay_s", cmp.db_s},
      {"dpp_tdoa_bound_s", dpp_tdoa},
      {"dpp_toa_bound_s", dpp_toa},
      {"djkm_estimate_s", djkm},
      {"djkm_over_dpp_ratio", ratio},
  };
  if (opts.want("json")) {
    dpp::write_text_file(out_file(opts, "compare.json"), root.dump(2) + "\n");
  }

  std::cout << "compare: m=" << m << " t=" << t << "\n";
  std::cout << "  dpp  messages: " << dpp::message_count_dpp(m, t) << "\n";
  std::cout << "  dpw  messages: " << dpp::message_count_dpw(m, t) << "\n";
  if (m > 2) {
    std::cout << "  djkm messages: " << dpp::message_count_djkm(m) << "\n";
  }
  std::cout << "  dpp tdoa bound:  " << dpp::format_double(dpp_tdoa)
            << " s at d=" << dpp::format_double(d_m) << " m\n";
  std::cout << "  dpp toa bound:   " << dpp::format_double(dpp_toa) << " s\n";
  std::cout << "  djkm estimate:   " << dpp::format_double(djkm) << " s at D_B="
            << dpp::format_double(cmp.db_s) << " s\n";
  std::cout << "  djkm/dpp ratio:  " << dpp::format_double(ratio) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Double-pulse time-of-flight ranging: simulation, measurement, error "
      "bounds and position solving"};
  app.require_subcommand(1);

  CommonOpts opts;
  CountOpts count_opts;
  CompareOpts compare_opts;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Simulate cycles and emit the timestamp trace CSV");
  add_common(simulate, opts);

  CLI::App* measure = app.add_subcommand(
      "measure", "Compute mu/TDoA/ToA/direct values from a simulated trace");
  add_common(measure, opts);

  CLI::App* bounds = app.add_subcommand(
      "bounds", "Monte-Carlo validation of the analytic drift error bounds");
  add_common(bounds, opts);

  CLI::App* solve = app.add_subcommand(
      "solve", "Solve absolute or relative positions from measurements");
  add_common(solve, opts);

  CLI::App* counts = app.add_subcommand(
      "counts", "Channel usage of DPP, DPW and DJKM for given node counts");
  add_common(counts, opts, false);
  counts->add_option("-m", count_opts.m, "Bilateral (mirror) count");
  counts->add_option("-t", count_opts.t, "Active (tag) count");
  counts->add_option("-k", count_opts.k, "DJKM anchor count (k > 2)");
  counts->add_flag("--dpp", count_opts.dpp_on, "Print the DPP count");
  counts->add_flag("--dpw", count_opts.dpw_on, "Print the DPW count");
  counts->add_flag("--djkm", count_opts.djkm_on, "Print the DJKM count");

  CLI::App* compare = app.add_subcommand(
      "compare", "Channel usage and worst-case accuracy table for a scenario");
  add_common(compare, opts);
  compare->add_option("--db-s", compare_opts.db_s,
                      "DJKM response delay D_B in seconds");
  compare->add_option("--eps-ppm", compare_opts.eps_ppm,
                      "Clock drift magnitude in ppm");
  compare->add_option("--distance-m", compare_opts.distance_m,
                      "Receiver separation; defaults to the scenario maximum");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(opts);
    if (measure->parsed()) return run_measure(opts);
    if (bounds->parsed()) return run_bounds(opts);
    if (solve->parsed()) return run_solve(opts);
    if (counts->parsed()) return run_counts(opts, count_opts);
    if (compare->parsed()) return run_compare(opts, compare_opts);
  } catch (const dpp::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const dpp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
