#include "dpp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dpp {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec_json(const Vec3& v, int dim) {
  ordered_json out = ordered_json::array();
  for (int k = 0; k < dim; ++k) out.push_back(v[k]);
  return out;
}

const char* mode_name(SolveMode mode) {
  return mode == SolveMode::Absolute ? "absolute" : "relative";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const std::vector<CycleTrace>& traces) {
  std::ostringstream out;
  out << "cycle,kind,node,sender,pulse_index,local_ts_s,true_ts_s_or_blank\n";
  for (const CycleTrace& trace : traces) {
    for (const TxRecord& r : trace.tx()) {
      out << trace.cycle_index() << ",tx," << r.sender.value << ','
          << r.sender.value << ',' << r.pulse_index << ','
          << format_double(r.local_timestamp_s) << ','
          << format_double(r.true_time_s) << '\n';
    }
    for (const RxRecord& r : trace.rx()) {
      out << trace.cycle_index() << ",rx," << r.receiver.value << ','
          << r.sender.value << ',' << r.pulse_index << ','
          << format_double(r.local_timestamp_s) << ",\n";
    }
  }
  return out.str();
}

std::string measurement_csv(const MeasurementSet& ms) {
  std::ostringstream out;
  const double v = ms.signal_speed;
  out << "kind,x,y,z,p_or_q,value_s,value_m\n";
  auto row = [&](const char* kind, const std::string& x, const std::string& y,
                 const std::string& z, int pq, double seconds) {
    out << kind << ',' << x << ',' << y << ',' << z << ',' << pq << ','
        << format_double(seconds) << ',' << format_double(seconds * v) << '\n';
  };
  for (const auto& [key, value] : ms.mu) {
    const auto x = std::to_string(key.x.value);
    const auto y = std::to_string(key.y.value);
    const auto z = std::to_string(key.z.value);
    row("mu", x, y, z, 0, value);
    if (auto it = ms.mu_by_p.find(key); it != ms.mu_by_p.end()) {
      row("mu", x, y, z, 1, it->second[0]);
      row("mu", x, y, z, 2, it->second[1]);
    }
  }
  for (const auto& [key, value] : ms.tdoa) {
    row("tdoa", std::to_string(key.x.value), std::to_string(key.y.value),
        std::to_string(key.z.value), 0, value);
  }
  for (const auto& [key, value] : ms.toa) {
    const auto y = std::to_string(key.a.value);
    const auto z = std::to_string(key.b.value);
    row("toa", "", y, z, 0, value);
    if (auto it = ms.toa_by_q.find(key); it != ms.toa_by_q.end()) {
      row("toa", "", y, z, 1, it->second[0]);
      row("toa", "", y, z, 2, it->second[1]);
    }
  }
  for (const auto& [key, value] : ms.direct) {
    row("direct", std::to_string(key.x.value), std::to_string(key.y.value),
        std::to_string(key.z.value), 0, value);
  }
  return out.str();
}

std::string measurement_json(const MeasurementSet& ms) {
  ordered_json root;
  root["signal_speed_mps"] = ms.signal_speed;
  root["cycle_index"] = ms.cycle_index;
  const double v = ms.signal_speed;

  ordered_json mu = ordered_json::array();
  for (const auto& [key, value] : ms.mu) {
    ordered_json item;
    item["x"] = key.x.value;
    item["y"] = key.y.value;
    item["z"] = key.z.value;
    item["seconds"] = value;
    item["meters"] = value * v;
    if (auto it = ms.mu_by_p.find(key); it != ms.mu_by_p.end()) {
      item["by_pulse_s"] = {it->second[0], it->second[1]};
    }
    mu.push_back(std::move(item));
  }
  root["mu"] = std::move(mu);

  ordered_json tdoa = ordered_json::array();
  for (const auto& [key, value] : ms.tdoa) {
    tdoa.push_back({{"x", key.x.value},
                    {"y", key.y.value},
                    {"z", key.z.value},
                    {"seconds", value},
                    {"meters", value * v}});
  }
  root["tdoa"] = std::move(tdoa);

  ordered_json toa = ordered_json::array();
  for (const auto& [key, value] : ms.toa) {
    ordered_json item;
    item["y"] = key.a.value;
    item["z"] = key.b.value;
    item["seconds"] = value;
    item["meters"] = value * v;
    if (auto it = ms.toa_by_q.find(key); it != ms.toa_by_q.end()) {
      item["by_path_s"] = {it->second[0], it->second[1]};
    }
    toa.push_back(std::move(item));
  }
  root["toa"] = std::move(toa);

  ordered_json direct = ordered_json::array();
  for (const auto& [key, value] : ms.direct) {
    direct.push_back({{"x", key.x.value},
                      {"y", key.y.value},
                      {"z", key.z.value},
                      {"seconds", value},
                      {"meters", value * v}});
  }
  root["direct"] = std::move(direct);
  return root.dump(2) + "\n";
}

std::string bounds_json(const std::vector<ErrorBoundReport>& reports) {
  ordered_json root = ordered_json::array();
  for (const ErrorBoundReport& r : reports) {
    root.push_back({{"quantity", to_string(r.quantity)},
                    {"analytic_bound_s", r.analytic_bound_s},
                    {"observed_max_abs_error_s", r.observed_max_abs_error_s},
                    {"trials", r.trials},
                    {"slack_s", r.slack_s},
                    {"passed", r.passed},
                    {"first_violation_trial", r.first_violation_trial}});
  }
  return root.dump(2) + "\n";
}

std::string bound_trials_csv(const ErrorBoundReport& report) {
  std::ostringstream out;
  out << "trial,abs_error_s,bound_s\n";
  for (const TrialError& t : report.per_trial) {
    out << t.trial << ',' << format_double(t.abs_error_s) << ','
        << format_double(t.bound_s) << '\n';
  }
  return out.str();
}

std::string solve_json(const SolveReport& report, const System& system) {
  const int dim = system.dimension();
  ordered_json root;
  root["mode"] = mode_name(report.mode);
  if (report.frame) {
    root["frame"] = {{"origin", report.frame->gauge.origin.value},
                     {"axis", report.frame->gauge.axis.value},
                     {"orientation", report.frame->gauge.orientation.value},
                     {"residual_rms_m", report.frame->residual_rms_m}};
  }
  ordered_json positions = ordered_json::array();
  for (const auto& [id, pos] : report.positions) {
    std::string source = "solved";
    if (report.frame && report.frame->coordinates.count(id)) {
      source = "frame";
    } else if (!report.estimates.count(id)) {
      source = "anchor";
    }
    positions.push_back({{"node", id.value},
                         {"position_m", vec_json(pos, dim)},
                         {"source", source}});
  }
  root["positions"] = std::move(positions);

  ordered_json estimates = ordered_json::array();
  for (const auto& [id, est] : report.estimates) {
    ordered_json item;
    item["node"] = id.value;
    item["position_m"] = vec_json(est.position, dim);
    item["residual_rms_s"] = est.residual_rms_s;
    item["residual_rms_m"] = est.residual_rms_m;
    item["iterations"] = est.iterations;
    item["converged"] = est.converged;
    if (!est.alternates.empty()) {
      ordered_json alts = ordered_json::array();
      for (const Vec3& a : est.alternates) alts.push_back(vec_json(a, dim));
      item["alternates_m"] = std::move(alts);
    }
    estimates.push_back(std::move(item));
  }
  root["estimates"] = std::move(estimates);

  ordered_json unsolved = ordered_json::array();
  for (const auto& [id, reason] : report.unsolved) {
    unsolved.push_back({{"node", id.value}, {"reason", reason}});
  }
  root["unsolved"] = std::move(unsolved);
  return root.dump(2) + "\n";
}

std::string positions_csv(const SolveReport& report) {
  std::ostringstream out;
  out << "node,x_m,y_m,z_m,source,residual_rms_s,converged\n";
  for (const auto& [id, pos] : report.positions) {
    std::string source = "solved";
    std::string residual;
    std::string converged;
    if (report.frame && report.frame->coordinates.count(id)) {
      source = "frame";
    } else if (auto it = report.estimates.find(id);
               it != report.estimates.end()) {
      residual = format_double(it->second.residual_rms_s);
      converged = it->second.converged ? "1" : "0";
    } else {
      source = "anchor";
    }
    out << id.value << ',' << format_double(pos.x()) << ','
        << format_double(pos.y()) << ',' << format_double(pos.z()) << ','
        << source << ',' << residual << ',' << converged << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write file: " + path.string());
  }
  out << content;
}

}  // namespace dpp
