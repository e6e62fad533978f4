#include "dpp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dpp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
  throw ParseError(origin + ": " + (path.empty() ? "$" : path) + ": " + message,
                   path);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& origin, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      fail(origin, path + "." + key, "unknown field");
    }
  }
}

const json& require_field(const json& obj, const char* key,
                          const std::string& origin, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(origin, path + "." + key, "missing required field");
  }
  return *it;
}

double as_number(const json& v, const std::string& origin,
                 const std::string& path) {
  if (!v.is_number()) fail(origin, path, "expected a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& origin,
                        const std::string& path) {
  if (!v.is_number_integer()) fail(origin, path, "expected an integer");
  return v.get<std::int64_t>();
}

bool as_bool(const json& v, const std::string& origin,
             const std::string& path) {
  if (!v.is_boolean()) fail(origin, path, "expected a boolean");
  return v.get<bool>();
}

NodeRole parse_role(const json& v, const std::string& origin,
                    const std::string& path) {
  if (!v.is_string()) fail(origin, path, "expected a role string");
  const std::string s = v.get<std::string>();
  if (s == "passive") return NodeRole::Passive;
  if (s == "active") return NodeRole::Active;
  if (s == "bilateral") return NodeRole::Bilateral;
  fail(origin, path, "role must be passive, active or bilateral");
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& origin,
                        double max_drift_ppm) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what(), "");
  }
  if (!root.is_object()) fail(origin, "", "scenario must be a JSON object");
  check_keys(root, {"dimensionality", "nodes", "protocol", "noise"}, origin,
             "");

  const int dim = static_cast<int>(
      as_integer(require_field(root, "dimensionality", origin, ""), origin,
                 "dimensionality"));
  if (dim != 2 && dim != 3) {
    fail(origin, "dimensionality", "must be 2 or 3");
  }

  const json& jnodes = require_field(root, "nodes", origin, "");
  if (!jnodes.is_array() || jnodes.empty()) {
    fail(origin, "nodes", "expected a non-empty array");
  }
  std::vector<Node> nodes;
  int idx = 0;
  for (const json& jn : jnodes) {
    const std::string path = "nodes[" + std::to_string(idx++) + "]";
    if (!jn.is_object()) fail(origin, path, "expected an object");
    check_keys(jn, {"id", "role", "position", "known_position", "clock"},
               origin, path);
    Node n;
    const std::int64_t id =
        as_integer(require_field(jn, "id", origin, path), origin, path + ".id");
    if (id < 0 || id > 0xffffffffll) fail(origin, path + ".id", "out of range");
    n.id = NodeId{static_cast<std::uint32_t>(id)};
    n.role = parse_role(require_field(jn, "role", origin, path), origin,
                        path + ".role");
    const json& jpos = require_field(jn, "position", origin, path);
    if (!jpos.is_array() || static_cast<int>(jpos.size()) != dim) {
      fail(origin, path + ".position",
           "expected an array of dimensionality coordinates");
    }
    for (int k = 0; k < dim; ++k) {
      const double c = as_number(jpos[static_cast<std::size_t>(k)], origin,
                                 path + ".position");
      if (!std::isfinite(c)) fail(origin, path + ".position", "must be finite");
      n.position[k] = c;
    }
    if (auto it = jn.find("known_position"); it != jn.end()) {
      n.known_position = as_bool(*it, origin, path + ".known_position");
    }
    if (auto it = jn.find("clock"); it != jn.end()) {
      const std::string cpath = path + ".clock";
      if (!it->is_object()) fail(origin, cpath, "expected an object");
      check_keys(*it, {"offset_s", "drift_ppm"}, origin, cpath);
      if (auto f = it->find("offset_s"); f != it->end()) {
        n.clock.offset_s = as_number(*f, origin, cpath + ".offset_s");
      }
      if (auto f = it->find("drift_ppm"); f != it->end()) {
        const double ppm = as_number(*f, origin, cpath + ".drift_ppm");
        if (std::abs(ppm) > max_drift_ppm) {
          std::ostringstream msg;
          msg << "|drift| exceeds the " << max_drift_ppm << " ppm limit";
          fail(origin, cpath + ".drift_ppm", msg.str());
        }
        n.clock.drift = ppm * 1e-6;
      }
    }
    nodes.push_back(n);
  }

  ProtocolConfig cfg;
  double signal_speed = kRadioSignalSpeed;
  int p_select = 0;
  int q_select = 0;
  if (auto it = root.find("protocol"); it != root.end()) {
    const std::string path = "protocol";
    if (!it->is_object()) fail(origin, path, "expected an object");
    check_keys(*it,
               {"signal_speed_mps", "inter_pulse_gap_s", "turn_gap_s",
                "cycles", "p", "q"},
               origin, path);
    if (auto f = it->find("signal_speed_mps"); f != it->end()) {
      signal_speed = as_number(*f, origin, path + ".signal_speed_mps");
      if (!(signal_speed > 0.0)) {
        fail(origin, path + ".signal_speed_mps", "must be positive");
      }
    }
    if (auto f = it->find("inter_pulse_gap_s"); f != it->end()) {
      cfg.inter_pulse_gap_s = as_number(*f, origin, path + ".inter_pulse_gap_s");
      if (!(cfg.inter_pulse_gap_s > 0.0)) {
        fail(origin, path + ".inter_pulse_gap_s", "must be positive");
      }
    }
    if (auto f = it->find("turn_gap_s"); f != it->end()) {
      cfg.turn_gap_s = as_number(*f, origin, path + ".turn_gap_s");
      if (!(cfg.turn_gap_s > 0.0)) {
        fail(origin, path + ".turn_gap_s", "must be positive");
      }
    }
    if (auto f = it->find("cycles"); f != it->end()) {
      cfg.cycles = static_cast<int>(as_integer(*f, origin, path + ".cycles"));
      if (cfg.cycles < 1) fail(origin, path + ".cycles", "must be >= 1");
    }
    if (auto f = it->find("p"); f != it->end()) {
      p_select = static_cast<int>(as_integer(*f, origin, path + ".p"));
      if (p_select < 0 || p_select > 2) {
        fail(origin, path + ".p", "must be 0 (average), 1 or 2");
      }
    }
    if (auto f = it->find("q"); f != it->end()) {
      q_select = static_cast<int>(as_integer(*f, origin, path + ".q"));
      if (q_select < 0 || q_select > 2) {
        fail(origin, path + ".q", "must be 0 (average), 1 or 2");
      }
    }
  }
  if (auto it = root.find("noise"); it != root.end()) {
    const std::string path = "noise";
    if (!it->is_object()) fail(origin, path, "expected an object");
    check_keys(*it, {"timestamp_jitter_sd_s", "seed"}, origin, path);
    if (auto f = it->find("timestamp_jitter_sd_s"); f != it->end()) {
      cfg.timestamp_jitter_sd_s =
          as_number(*f, origin, path + ".timestamp_jitter_sd_s");
      if (cfg.timestamp_jitter_sd_s < 0.0) {
        fail(origin, path + ".timestamp_jitter_sd_s", "must be >= 0");
      }
    }
    if (auto f = it->find("seed"); f != it->end()) {
      const std::int64_t seed = as_integer(*f, origin, path + ".seed");
      if (seed < 0) fail(origin, path + ".seed", "must be >= 0");
      cfg.rng_seed = static_cast<std::uint64_t>(seed);
    }
  }

  try {
    System system(std::move(nodes), signal_speed, dim);
    return Scenario{dim, std::move(system), cfg, p_select, q_select};
  } catch (const InvalidInputError& e) {
    throw ParseError(origin + ": " + e.what(), "nodes");
  }
}

Scenario load_scenario(const std::filesystem::path& path,
                       double max_drift_ppm) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open scenario file: " + path.string(), "");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string(), max_drift_ppm);
}

}  // namespace dpp
